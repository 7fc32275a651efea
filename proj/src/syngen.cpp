#include "eesim/syngen.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "eesim/calib.hpp"
#include "eesim/error.hpp"
#include "eesim/format.hpp"
#include "eesim/rng.hpp"

namespace eesim {

void validate_config(const OracleGenConfig& cfg) {
    if (cfg.num_classes < 2) throw ValidationError("oracle gen: num_classes must be >= 2");
    if (cfg.num_samples < 1) throw ValidationError("oracle gen: num_samples must be >= 1");
    if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
        throw ValidationError("oracle gen: alpha must be positive and finite");
    }
    if (!(cfg.scale > 0.0) || !std::isfinite(cfg.scale)) {
        throw ValidationError("oracle gen: scale must be positive and finite");
    }
}

void validate_config(const CascadeGenConfig& cfg) {
    if (cfg.num_classes < 2) throw ValidationError("cascade gen: num_classes must be >= 2");
    if (cfg.num_samples < 1) throw ValidationError("cascade gen: num_samples must be >= 1");
    if (cfg.branches.empty()) throw ValidationError("cascade gen: branch list must be non-empty");
    for (const CascadeBranchConfig& br : cfg.branches) {
        if (!(br.signal >= 0.0) || !std::isfinite(br.signal)) {
            throw ValidationError("cascade gen: signal must be finite and >= 0");
        }
        if (!(br.sigma > 0.0) || !std::isfinite(br.sigma)) {
            throw ValidationError("cascade gen: sigma must be positive and finite");
        }
        if (!(br.scale > 0.0) || !std::isfinite(br.scale)) {
            throw ValidationError("cascade gen: scale must be positive and finite");
        }
    }
}

TraceDataset gen_oracle_trace(const OracleGenConfig& cfg) {
    validate_config(cfg);
    const auto k = static_cast<std::size_t>(cfg.num_classes);
    Engine eng(fork_seed(cfg.seed, "gen"));

    TraceDataset dataset;
    dataset.num_classes = cfg.num_classes;
    dataset.num_exits = 1;
    dataset.metadata = {{"mode", "dirichlet-oracle"},
                        {"k", std::to_string(cfg.num_classes)},
                        {"n", std::to_string(cfg.num_samples)},
                        {"alpha", format_g17(cfg.alpha)},
                        {"s", format_g17(cfg.scale)},
                        {"seed", std::to_string(cfg.seed)}};
    dataset.records.reserve(static_cast<std::size_t>(cfg.num_samples));
    for (std::int64_t i = 0; i < cfg.num_samples; ++i) {
        const std::vector<double> q = eng.dirichlet(k, cfg.alpha);
        LogitRecord rec;
        rec.sample_id = i;
        rec.label = static_cast<int>(eng.categorical(q));
        std::vector<double> z(k);
        for (std::size_t j = 0; j < k; ++j) {
            z[j] = cfg.scale * std::max(std::log(q[j]), -700.0);
        }
        rec.logits_per_exit.push_back(std::move(z));
        dataset.records.push_back(std::move(rec));
    }
    return dataset;
}

TraceDataset gen_cascade_trace(const CascadeGenConfig& cfg) {
    validate_config(cfg);
    const auto k = static_cast<std::size_t>(cfg.num_classes);
    Engine eng(fork_seed(cfg.seed, "gen"));

    std::string branches_desc;
    for (std::size_t i = 0; i < cfg.branches.size(); ++i) {
        const CascadeBranchConfig& br = cfg.branches[i];
        if (i > 0) branches_desc += ',';
        branches_desc +=
            format_g17(br.signal) + ":" + format_g17(br.sigma) + ":" + format_g17(br.scale);
    }

    TraceDataset dataset;
    dataset.num_classes = cfg.num_classes;
    dataset.num_exits = static_cast<int>(cfg.branches.size());
    dataset.metadata = {{"mode", "cascade"},
                        {"k", std::to_string(cfg.num_classes)},
                        {"n", std::to_string(cfg.num_samples)},
                        {"branches", branches_desc},
                        {"seed", std::to_string(cfg.seed)}};
    dataset.records.reserve(static_cast<std::size_t>(cfg.num_samples));
    for (std::int64_t i = 0; i < cfg.num_samples; ++i) {
        LogitRecord rec;
        rec.sample_id = i;
        rec.label = static_cast<int>(eng.uniform_below(k));
        rec.logits_per_exit.reserve(cfg.branches.size());
        for (const CascadeBranchConfig& br : cfg.branches) {
            std::vector<double> z(k);
            for (std::size_t j = 0; j < k; ++j) {
                const double signal = j == static_cast<std::size_t>(rec.label) ? br.signal : 0.0;
                z[j] = br.scale * (signal + br.sigma * eng.normal());
            }
            rec.logits_per_exit.push_back(std::move(z));
        }
        dataset.records.push_back(std::move(rec));
    }
    return dataset;
}

std::vector<double> make_t_grid(double t_min, double t_max, double step) {
    if (!(t_min > 0.0) || !(t_max > t_min) || !(step > 0.0)) {
        throw ValidationError("make_t_grid: need 0 < t_min < t_max and step > 0");
    }
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>((t_max - t_min) / step) + 2);
    for (std::int64_t i = 0;; ++i) {
        const double t = t_min + static_cast<double>(i) * step;
        if (t > t_max + step * 1e-9) break;
        grid.push_back(t);
    }
    return grid;
}

double brute_force_temperature(const std::vector<std::vector<double>>& logits,
                               const std::vector<int>& labels,
                               const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw ValidationError("brute_force_temperature: empty grid");
    if (logits.empty()) throw DataError("brute_force_temperature: empty input");
    if (logits.size() != labels.size()) {
        throw ValidationError("brute_force_temperature: list lengths differ");
    }
    const auto n = static_cast<Eigen::Index>(logits.size());
    const auto k = static_cast<Eigen::Index>(logits[0].size());

    Eigen::ArrayXXd z(n, k);
    Eigen::ArrayXd z_label(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::vector<double>& row = logits[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != k) {
            throw ValidationError("brute_force_temperature: ragged logit rows");
        }
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= static_cast<int>(row.size())) {
            throw ValidationError("brute_force_temperature: label out of range");
        }
        for (Eigen::Index j = 0; j < k; ++j) z(i, j) = row[static_cast<std::size_t>(j)];
        z_label(i) = row[static_cast<std::size_t>(label)];
    }
    const Eigen::ArrayXd row_max = z.rowwise().maxCoeff();
    z.colwise() -= row_max;
    z_label -= row_max;

    const double cap = -std::log(kProbFloor);
    Eigen::ArrayXXd expz(n, k);
    Eigen::ArrayXd per_sample(n);
    double best_t = t_grid.front();
    double best_nll = std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        expz = (z / t).exp();
        per_sample = expz.rowwise().sum().log() - z_label / t;
        const double value = per_sample.min(cap).mean();
        if (value < best_nll) {
            best_nll = value;
            best_t = t;
        }
    }
    return best_t;
}

ExitDecision brute_force_cascade(const LogitRecord& record, const ExitPolicy& policy) {
    const std::size_t b = record.logits_per_exit.size();
    if (b == 0) throw ValidationError("brute_force_cascade: record has no exits");
    if (policy.temperatures.size() != b) {
        throw ValidationError("brute_force_cascade: mismatched exit counts");
    }
    for (std::size_t i = 0; i < b; ++i) {
        const std::vector<double>& logit_vec = record.logits_per_exit[i];
        const double t = policy.temperatures[i];
        const std::size_t k = logit_vec.size();

        std::vector<double> w(k);
        for (std::size_t j = 0; j < k; ++j) w[j] = logit_vec[j] / t;
        double m = w[0];
        for (std::size_t j = 1; j < k; ++j) {
            if (w[j] > m) m = w[j];
        }
        std::vector<double> p(k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            p[j] = std::exp(w[j] - m);
            sum += p[j];
        }
        for (std::size_t j = 0; j < k; ++j) p[j] /= sum;

        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (p[j] > p[best]) best = j;
        }
        double conf;
        if (policy.rule == ConfidenceRule::max_probability) {
            conf = p[best];
        } else {
            double entropy = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (p[j] > 0.0) entropy -= p[j] * std::log(p[j]);
            }
            conf = 1.0 - entropy / std::log(static_cast<double>(k));
            conf = std::min(1.0, std::max(0.0, conf));
        }
        if (i + 1 == b || conf >= policy.p_tar) {
            ExitDecision decision;
            decision.sample_id = record.sample_id;
            decision.exit_index = static_cast<int>(i) + 1;
            decision.predicted_class = static_cast<int>(best);
            decision.confidence = conf;
            decision.on_device = decision.exit_index <= policy.device_exit_count;
            decision.label = record.label;
            decision.correct = static_cast<int>(best) == record.label;
            return decision;
        }
    }
    throw ValidationError("unreachable: final exit always fires");
}

}  // namespace eesim
