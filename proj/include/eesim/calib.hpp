#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace eesim {

// Numerically stable softmax (max subtraction); safe for logits up to ±700.
std::vector<double> softmax(const std::vector<double>& logits);

// softmax(logits / t); t = 1 reproduces softmax exactly.
std::vector<double> scaled_softmax(const std::vector<double>& logits, double t);

// Index of the largest component; ties break toward the lowest index.
std::size_t argmax(const std::vector<double>& v);

// Mean negative log-likelihood of the labels under scaled_softmax(z, t).
// Probabilities are floored at 1e-300 inside the log, so the result stays
// finite even when the true class underflows.
double nll(const std::vector<std::vector<double>>& logits, const std::vector<int>& labels,
           double t);

inline constexpr double kProbFloor = 1e-300;

struct SearchConfig {
    double t_min = 0.05;
    double t_max = 20.0;
    int coarse_points = 40;  // log-spaced scan that seeds the line search
    double log_tol = 1e-4;   // golden-section tolerance on log T
};

struct CalibrationResult {
    double temperature = 1.0;
    double nll_before = 0.0;  // at T = 1
    double nll_after = 0.0;   // at the fitted T
    bool clamped = false;     // optimum sat on a search bound
    std::size_t num_samples = 0;
};

// Minimizes validation NLL over T in [t_min, t_max] (coarse log-grid scan,
// then golden-section on log T). T = 1 is always considered as a candidate,
// so nll_after <= nll_before holds unconditionally.
CalibrationResult fit_temperature(const std::vector<std::vector<double>>& logits,
                                  const std::vector<int>& labels,
                                  const SearchConfig& search = {});

// JSON array of {"t","nll_before","nll_after","clamped","n"}.
std::string calibration_to_json(const std::vector<CalibrationResult>& results);
std::vector<CalibrationResult> calibration_from_json(const std::string& text);

struct ReliabilityBin {
    double mean_confidence = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

struct ReliabilityCurve {
    std::vector<ReliabilityBin> bins;  // empty bins omitted
};

// Equal-width bins on [0, 1]; confidence 1.0 lands in the top bin.
ReliabilityCurve reliability_curve(const std::vector<double>& confidences,
                                   const std::vector<bool>& correct, std::size_t num_bins);

// CSV with header "bin_mean_conf,accuracy,count".
std::string reliability_to_csv(const ReliabilityCurve& curve);

}  // namespace eesim
