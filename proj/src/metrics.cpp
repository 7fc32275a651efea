#include "eesim/metrics.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "eesim/error.hpp"
#include "eesim/format.hpp"

namespace eesim {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Dataset-order chunks of size batch_size; drops a trailing short chunk when
// drop_partial_batch is set.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t batch_size,
                                                              bool drop_partial_batch) {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, n);
        if (drop_partial_batch && end - begin < batch_size) break;
        ranges.emplace_back(begin, end);
    }
    return ranges;
}

}  // namespace

double device_classification_probability(const std::vector<ExitDecision>& decisions) {
    if (decisions.empty()) throw DataError("device_classification_probability: empty input");
    std::size_t on_device = 0;
    for (const ExitDecision& d : decisions) on_device += d.on_device ? 1 : 0;
    return static_cast<double>(on_device) / static_cast<double>(decisions.size());
}

std::optional<double> device_accuracy(const std::vector<ExitDecision>& decisions) {
    std::size_t on_device = 0;
    std::size_t correct = 0;
    for (const ExitDecision& d : decisions) {
        if (!d.on_device) continue;
        ++on_device;
        correct += d.correct ? 1 : 0;
    }
    if (on_device == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(on_device);
}

double total_accuracy(const std::vector<ExitDecision>& decisions) {
    if (decisions.empty()) throw DataError("total_accuracy: empty input");
    std::size_t correct = 0;
    for (const ExitDecision& d : decisions) correct += d.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

OutageResult outage_probability(const std::vector<ExitDecision>& decisions, double p_tar,
                                std::size_t batch_size, bool drop_partial_batch) {
    OutageResult result;
    std::size_t outages = 0;
    for (const auto& [begin, end] : batch_ranges(decisions.size(), batch_size,
                                                 drop_partial_batch)) {
        std::size_t on_device = 0;
        std::size_t correct = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (!decisions[i].on_device) continue;
            ++on_device;
            correct += decisions[i].correct ? 1 : 0;
        }
        if (on_device == 0) continue;  // excluded from the denominator
        ++result.counted_batches;
        const double acc = static_cast<double>(correct) / static_cast<double>(on_device);
        if (acc < p_tar) ++outages;
    }
    if (result.counted_batches > 0) {
        result.probability =
            static_cast<double>(outages) / static_cast<double>(result.counted_batches);
    }
    return result;
}

double missed_deadline_probability(const std::vector<ExitDecision>& decisions,
                                   const LatencyProfile& profile, double p_tar,
                                   DeadlineSpec deadline, std::size_t batch_size,
                                   bool drop_partial_batch, BatchAggregation aggregation) {
    if (decisions.empty()) throw DataError("missed_deadline_probability: empty input");
    if (!(deadline.t_tar > 0.0)) throw ValidationError("t_tar must be positive");
    const auto ranges = batch_ranges(decisions.size(), batch_size, drop_partial_batch);
    if (ranges.empty()) throw DataError("missed_deadline_probability: no batches");
    std::size_t missed = 0;
    for (const auto& [begin, end] : ranges) {
        const std::vector<ExitDecision> batch(decisions.begin() + static_cast<std::ptrdiff_t>(begin),
                                              decisions.begin() + static_cast<std::ptrdiff_t>(end));
        const double time_s = batch_time(batch, profile, aggregation);
        const double acc = total_accuracy(batch);
        if (time_s > deadline.t_tar || acc < p_tar) ++missed;
    }
    return static_cast<double>(missed) / static_cast<double>(ranges.size());
}

ExperimentReport evaluate(const std::vector<ExitDecision>& decisions, double p_tar,
                          std::optional<DeadlineSpec> deadline, const LatencyProfile& profile,
                          std::size_t batch_size, bool calibrated, bool drop_partial_batch,
                          BatchAggregation aggregation) {
    if (decisions.empty()) throw DataError("evaluate: empty decision list");
    if (deadline && !(deadline->t_tar > 0.0)) throw ValidationError("t_tar must be positive");

    ExperimentReport report;
    report.p_tar = p_tar;
    if (deadline) report.t_tar = deadline->t_tar;
    report.calibrated = calibrated;
    report.device_prob = device_classification_probability(decisions);
    report.device_acc = device_accuracy(decisions);
    report.total_acc = total_accuracy(decisions);

    std::size_t outages = 0;
    std::size_t counted = 0;
    std::size_t missed = 0;
    const auto ranges = batch_ranges(decisions.size(), batch_size, drop_partial_batch);
    for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
        const auto [begin, end] = ranges[bi];
        BatchStats stats;
        stats.batch_index = bi;
        stats.size = end - begin;
        std::size_t dev_correct = 0;
        std::size_t all_correct = 0;
        double time_sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const ExitDecision& d = decisions[i];
            if (d.on_device) {
                ++stats.device_count;
                dev_correct += d.correct ? 1 : 0;
            }
            all_correct += d.correct ? 1 : 0;
            time_sum += sample_latency(d, profile).total_s;
        }
        const auto n = static_cast<double>(stats.size);
        stats.batch_accuracy = static_cast<double>(all_correct) / n;
        stats.batch_time_s = aggregation == BatchAggregation::sum ? time_sum : time_sum / n;
        if (stats.device_count > 0) {
            stats.device_accuracy =
                static_cast<double>(dev_correct) / static_cast<double>(stats.device_count);
            stats.outage = *stats.device_accuracy < p_tar;
            ++counted;
            outages += *stats.outage ? 1 : 0;
        }
        if (deadline) {
            stats.missed = stats.batch_time_s > deadline->t_tar || stats.batch_accuracy < p_tar;
            missed += *stats.missed ? 1 : 0;
        }
        report.per_batch.push_back(stats);
    }
    report.outage_batches = counted;
    if (counted > 0) {
        report.outage_prob = static_cast<double>(outages) / static_cast<double>(counted);
    }
    if (deadline && !ranges.empty()) {
        report.missed_prob = static_cast<double>(missed) / static_cast<double>(ranges.size());
    }
    return report;
}

std::vector<ExperimentReport> sweep(const TraceDataset& dataset, const ExitPolicy& policy_template,
                                    const std::vector<double>& p_tar_grid,
                                    const std::vector<double>& t_tar_grid,
                                    const LatencyProfile& profile, std::size_t batch_size,
                                    bool calibrated, bool drop_partial_batch,
                                    BatchAggregation aggregation) {
    if (p_tar_grid.empty()) throw ValidationError("sweep: empty p_tar grid");
    std::vector<ExperimentReport> reports;
    reports.reserve(p_tar_grid.size() * std::max<std::size_t>(1, t_tar_grid.size()));
    for (double p_tar : p_tar_grid) {
        ExitPolicy policy = policy_template;
        policy.p_tar = p_tar;
        const std::vector<ExitDecision> decisions = run_cascade(dataset, policy);
        if (t_tar_grid.empty()) {
            reports.push_back(evaluate(decisions, p_tar, std::nullopt, profile, batch_size,
                                       calibrated, drop_partial_batch, aggregation));
        } else {
            for (double t_tar : t_tar_grid) {
                reports.push_back(evaluate(decisions, p_tar, DeadlineSpec{t_tar}, profile,
                                           batch_size, calibrated, drop_partial_batch,
                                           aggregation));
            }
        }
    }
    return reports;
}

std::string reports_to_csv_header() {
    return "p_tar,t_tar,calibrated,device_prob,device_acc,total_acc,outage_prob,"
           "outage_batches,missed_prob\n";
}

std::string report_to_csv_row(const ExperimentReport& r) {
    const auto opt = [](const std::optional<double>& v) {
        return format_g17(v.value_or(kNaN));
    };
    return format_g17(r.p_tar) + "," + opt(r.t_tar) + "," + (r.calibrated ? "1" : "0") + "," +
           format_g17(r.device_prob) + "," + opt(r.device_acc) + "," + format_g17(r.total_acc) +
           "," + opt(r.outage_prob) + "," + std::to_string(r.outage_batches) + "," +
           opt(r.missed_prob) + "\n";
}

std::string reports_to_csv(const std::vector<ExperimentReport>& reports) {
    std::string out = reports_to_csv_header();
    for (const ExperimentReport& r : reports) out += report_to_csv_row(r);
    return out;
}

std::string reports_to_json(const std::vector<ExperimentReport>& reports) {
    const auto opt_num = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    json arr = json::array();
    for (const ExperimentReport& r : reports) {
        json batches = json::array();
        for (const BatchStats& b : r.per_batch) {
            batches.push_back({{"batch_index", b.batch_index},
                               {"size", b.size},
                               {"device_count", b.device_count},
                               {"device_accuracy", opt_num(b.device_accuracy)},
                               {"batch_accuracy", b.batch_accuracy},
                               {"batch_time_s", b.batch_time_s},
                               {"outage", b.outage ? json(*b.outage) : json(nullptr)},
                               {"missed", b.missed ? json(*b.missed) : json(nullptr)}});
        }
        arr.push_back({{"p_tar", r.p_tar},
                       {"t_tar", opt_num(r.t_tar)},
                       {"calibrated", r.calibrated},
                       {"device_prob", r.device_prob},
                       {"device_acc", opt_num(r.device_acc)},
                       {"total_acc", r.total_acc},
                       {"outage_prob", opt_num(r.outage_prob)},
                       {"outage_batches", r.outage_batches},
                       {"missed_prob", opt_num(r.missed_prob)},
                       {"per_batch", std::move(batches)}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace eesim
