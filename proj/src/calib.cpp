#include "eesim/calib.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "eesim/error.hpp"
#include "eesim/format.hpp"

namespace eesim {

using nlohmann::json;

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ValidationError("softmax: empty logit vector");
    double m = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw ValidationError("softmax: non-finite logit");
        m = std::max(m, v);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> scaled_softmax(const std::vector<double>& logits, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw ValidationError("scaled_softmax: temperature must be positive and finite");
    }
    if (t == 1.0) return softmax(logits);
    std::vector<double> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / t;
    return softmax(scaled);
}

std::size_t argmax(const std::vector<double>& v) {
    if (v.empty()) throw ValidationError("argmax: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

double nll(const std::vector<std::vector<double>>& logits, const std::vector<int>& labels,
           double t) {
    if (logits.empty()) throw DataError("nll: empty input");
    if (logits.size() != labels.size()) throw ValidationError("nll: list lengths differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || label >= static_cast<int>(logits[i].size())) {
            throw ValidationError("nll: label out of range at sample " + std::to_string(i));
        }
        const std::vector<double> p = scaled_softmax(logits[i], t);
        sum += -std::log(std::max(p[static_cast<std::size_t>(label)], kProbFloor));
    }
    return sum / static_cast<double>(logits.size());
}

CalibrationResult fit_temperature(const std::vector<std::vector<double>>& logits,
                                  const std::vector<int>& labels, const SearchConfig& search) {
    if (logits.empty()) throw DataError("fit_temperature: empty validation set");
    if (logits.size() != labels.size()) {
        throw ValidationError("fit_temperature: list lengths differ");
    }
    if (!(search.t_min > 0.0) || !(search.t_max > search.t_min) || search.coarse_points < 2) {
        throw ValidationError("fit_temperature: bad search configuration");
    }

    const auto objective = [&](double log_t) { return nll(logits, labels, std::exp(log_t)); };
    const double lo_bound = std::log(search.t_min);
    const double hi_bound = std::log(search.t_max);

    // coarse scan seeds the bracket; guards against flat or multi-basin NLL
    int best_i = 0;
    double best_val = 0.0;
    const int np = search.coarse_points;
    std::vector<double> grid(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lo_bound + (hi_bound - lo_bound) * static_cast<double>(i) /
                           static_cast<double>(np - 1);
        const double val = objective(grid[static_cast<std::size_t>(i)]);
        if (i == 0 || val < best_val) {
            best_val = val;
            best_i = i;
        }
    }
    double lo = grid[static_cast<std::size_t>(std::max(0, best_i - 1))];
    double hi = grid[static_cast<std::size_t>(std::min(np - 1, best_i + 1))];

    // golden-section on log T
    constexpr double kInvPhi = 0.6180339887498949;
    double c = hi - kInvPhi * (hi - lo);
    double d = lo + kInvPhi * (hi - lo);
    double fc = objective(c);
    double fd = objective(d);
    while (hi - lo > search.log_tol) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - kInvPhi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + kInvPhi * (hi - lo);
            fd = objective(d);
        }
    }
    double log_t = 0.5 * (lo + hi);

    CalibrationResult result;
    result.num_samples = logits.size();
    result.nll_before = nll(logits, labels, 1.0);

    // snap clamped fits to the exact bound (exp(log(x)) may differ by an ulp)
    bool clamped = false;
    double fitted_t;
    if (log_t <= lo_bound + 2.0 * search.log_tol) {
        fitted_t = search.t_min;
        clamped = true;
    } else if (log_t >= hi_bound - 2.0 * search.log_tol) {
        fitted_t = search.t_max;
        clamped = true;
    } else {
        fitted_t = std::exp(log_t);
    }
    const double fitted_nll = nll(logits, labels, fitted_t);

    // T = 1 stays a candidate so nll_after <= nll_before holds even when the
    // line search lands a hair worse than the identity temperature.
    if (result.nll_before <= fitted_nll) {
        result.temperature = 1.0;
        result.nll_after = result.nll_before;
        result.clamped = false;
    } else {
        result.temperature = fitted_t;
        result.nll_after = fitted_nll;
        result.clamped = clamped;
    }
    return result;
}

std::string calibration_to_json(const std::vector<CalibrationResult>& results) {
    json arr = json::array();
    for (const CalibrationResult& r : results) {
        arr.push_back({{"t", r.temperature},
                       {"nll_before", r.nll_before},
                       {"nll_after", r.nll_after},
                       {"clamped", r.clamped},
                       {"n", r.num_samples}});
    }
    return arr.dump(2) + "\n";
}

std::vector<CalibrationResult> calibration_from_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("calibration file: malformed JSON: ") + e.what());
    }
    if (!arr.is_array()) throw DataError("calibration file: expected a JSON array");
    std::vector<CalibrationResult> results;
    results.reserve(arr.size());
    for (const json& j : arr) {
        if (!j.is_object() || !j.contains("t") || !j["t"].is_number()) {
            throw DataError("calibration file: entry missing numeric \"t\"");
        }
        CalibrationResult r;
        r.temperature = j["t"].get<double>();
        if (!(r.temperature > 0.0) || !std::isfinite(r.temperature)) {
            throw DataError("calibration file: non-positive temperature");
        }
        r.nll_before = j.value("nll_before", 0.0);
        r.nll_after = j.value("nll_after", 0.0);
        r.clamped = j.value("clamped", false);
        r.num_samples = j.value("n", std::size_t{0});
        results.push_back(r);
    }
    return results;
}

ReliabilityCurve reliability_curve(const std::vector<double>& confidences,
                                   const std::vector<bool>& correct, std::size_t num_bins) {
    if (confidences.empty()) throw DataError("reliability_curve: empty input");
    if (confidences.size() != correct.size()) {
        throw ValidationError("reliability_curve: list lengths differ");
    }
    if (num_bins < 1) throw ValidationError("reliability_curve: num_bins must be >= 1");

    std::vector<double> conf_sum(num_bins, 0.0);
    std::vector<std::size_t> hits(num_bins, 0);
    std::vector<std::size_t> count(num_bins, 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0) || !(c <= 1.0)) {
            throw ValidationError("reliability_curve: confidence outside [0, 1]");
        }
        const std::size_t bin =
            std::min(static_cast<std::size_t>(c * static_cast<double>(num_bins)), num_bins - 1);
        conf_sum[bin] += c;
        hits[bin] += correct[i] ? 1 : 0;
        ++count[bin];
    }

    ReliabilityCurve curve;
    for (std::size_t bin = 0; bin < num_bins; ++bin) {
        if (count[bin] == 0) continue;
        const auto n = static_cast<double>(count[bin]);
        curve.bins.push_back({conf_sum[bin] / n, static_cast<double>(hits[bin]) / n, count[bin]});
    }
    return curve;
}

std::string reliability_to_csv(const ReliabilityCurve& curve) {
    std::string out = "bin_mean_conf,accuracy,count\n";
    for (const ReliabilityBin& bin : curve.bins) {
        out += format_g17(bin.mean_confidence) + "," + format_g17(bin.accuracy) + "," +
               std::to_string(bin.count) + "\n";
    }
    return out;
}

}  // namespace eesim
