#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eesim/trace.hpp"

namespace eesim {

enum class ConfidenceRule {
    max_probability,    // confidence = max p_i
    entropy_threshold,  // confidence = 1 - H(p)/ln K
};

ConfidenceRule confidence_rule_from_string(const std::string& name);
std::string to_string(ConfidenceRule rule);

struct ExitPolicy {
    double p_tar = 0.85;
    std::vector<double> temperatures;  // one per exit; 1.0 = conventional
    ConfidenceRule rule = ConfidenceRule::max_probability;
    int device_exit_count = 1;  // exits 1..D run on device, D+1..B on cloud
};

// Enforces the policy invariants (p_tar in (0,1), positive temperatures,
// 1 <= D <= B); the decision functions themselves only require dimensional
// consistency, which keeps boundary-value experiments possible in tests.
void validate_policy(const ExitPolicy& policy);

struct ExitDecision {
    std::int64_t sample_id = 0;
    int exit_index = 0;  // 1-based; exit B is the final exit
    int predicted_class = 0;
    double confidence = 0.0;
    bool on_device = false;
    int label = 0;
    bool correct = false;
};

struct ConfidenceVerdict {
    int predicted_class = 0;
    double confidence = 0.0;
};

// Prediction is always the argmax; the confidence value depends on the rule.
// Both rules share the [0,1] "higher = more confident" orientation.
ConfidenceVerdict confidence_of(const std::vector<double>& probs, ConfidenceRule rule);

// Scans exits 1..B in order, firing the first whose confidence reaches
// p_tar; the final exit fires unconditionally.
ExitDecision decide_exit(const LogitRecord& record, const ExitPolicy& policy);

// One decision per record, in dataset order.
std::vector<ExitDecision> run_cascade(const TraceDataset& dataset, const ExitPolicy& policy);

// CSV with header "sample_id,exit_index,on_device,predicted,label,confidence,correct".
std::string decisions_to_csv(const std::vector<ExitDecision>& decisions);

}  // namespace eesim
