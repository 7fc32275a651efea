#pragma once

#include <cstdint>
#include <vector>

#include "eesim/cascade.hpp"
#include "eesim/trace.hpp"

namespace eesim {

// Single-exit trace with exact calibration ground truth: q ~ Dirichlet(alpha),
// y ~ Categorical(q), z = scale * log q. By construction scaled_softmax(z,
// scale) == q, so the NLL-optimal temperature converges to `scale`.
struct OracleGenConfig {
    int num_classes = 10;
    std::int64_t num_samples = 0;
    double alpha = 0.5;   // symmetric Dirichlet concentration
    double scale = 1.0;   // injected miscalibration scale s
    std::uint64_t seed = 0;
};

// Multi-exit trace sharing one label across branches: y uniform over K,
// z_i = scale_i * (signal_i * onehot(y) + eps), eps ~ N(0, sigma_i^2) iid.
struct CascadeBranchConfig {
    double signal = 0.0;  // logit bump on the true class
    double sigma = 1.0;   // per-component noise
    double scale = 1.0;   // miscalibration multiplier s_i
};

struct CascadeGenConfig {
    int num_classes = 10;
    std::int64_t num_samples = 0;
    std::vector<CascadeBranchConfig> branches;
    std::uint64_t seed = 0;
};

void validate_config(const OracleGenConfig& cfg);
void validate_config(const CascadeGenConfig& cfg);

TraceDataset gen_oracle_trace(const OracleGenConfig& cfg);
TraceDataset gen_cascade_trace(const CascadeGenConfig& cfg);

// Inclusive arithmetic grid [t_min, t_min + step, ..., <= t_max].
std::vector<double> make_t_grid(double t_min, double t_max, double step);

// Exhaustive argmin of the mean NLL over the grid; test oracle for the
// temperature fit. Vectorized internally — the dense grid sweeps billions of
// exponentials.
double brute_force_temperature(const std::vector<std::vector<double>>& logits,
                               const std::vector<int>& labels,
                               const std::vector<double>& t_grid);

// Independent re-implementation of the scan-and-threshold exit rule; shares
// no code with decide_exit. Test oracle for the cascade engine.
ExitDecision brute_force_cascade(const LogitRecord& record, const ExitPolicy& policy);

}  // namespace eesim
