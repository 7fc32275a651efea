#include "eesim/cascade.hpp"

#include <cmath>

#include "eesim/calib.hpp"
#include "eesim/error.hpp"
#include "eesim/format.hpp"

namespace eesim {

ConfidenceRule confidence_rule_from_string(const std::string& name) {
    if (name == "max-prob") return ConfidenceRule::max_probability;
    if (name == "entropy") return ConfidenceRule::entropy_threshold;
    throw ValidationError("unknown confidence rule: " + name +
                          " (expected \"max-prob\" or \"entropy\")");
}

std::string to_string(ConfidenceRule rule) {
    return rule == ConfidenceRule::max_probability ? "max-prob" : "entropy";
}

void validate_policy(const ExitPolicy& policy) {
    if (!(policy.p_tar > 0.0) || !(policy.p_tar < 1.0)) {
        throw ValidationError("p_tar must lie in (0, 1)");
    }
    if (policy.temperatures.empty()) throw ValidationError("policy has no temperatures");
    for (double t : policy.temperatures) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw ValidationError("temperatures must be positive and finite");
        }
    }
    const int b = static_cast<int>(policy.temperatures.size());
    if (policy.device_exit_count < 1 || policy.device_exit_count > b) {
        throw ValidationError("device_exit_count must lie in [1, B]");
    }
}

ConfidenceVerdict confidence_of(const std::vector<double>& probs, ConfidenceRule rule) {
    const std::size_t best = argmax(probs);
    ConfidenceVerdict verdict;
    verdict.predicted_class = static_cast<int>(best);
    if (rule == ConfidenceRule::max_probability) {
        verdict.confidence = probs[best];
        return verdict;
    }
    double entropy = 0.0;
    for (double p : probs) {
        if (p > 0.0) entropy -= p * std::log(p);
    }
    const double normalized = entropy / std::log(static_cast<double>(probs.size()));
    verdict.confidence = std::min(1.0, std::max(0.0, 1.0 - normalized));
    return verdict;
}

ExitDecision decide_exit(const LogitRecord& record, const ExitPolicy& policy) {
    const std::size_t b = record.logits_per_exit.size();
    if (b == 0) throw ValidationError("record has no exits");
    if (policy.temperatures.size() != b) {
        throw ValidationError("mismatched exit counts: record has " + std::to_string(b) +
                              ", policy has " + std::to_string(policy.temperatures.size()));
    }
    for (std::size_t i = 0; i < b; ++i) {
        const std::vector<double> p =
            scaled_softmax(record.logits_per_exit[i], policy.temperatures[i]);
        const ConfidenceVerdict verdict = confidence_of(p, policy.rule);
        if (i + 1 == b || verdict.confidence >= policy.p_tar) {
            ExitDecision decision;
            decision.sample_id = record.sample_id;
            decision.exit_index = static_cast<int>(i) + 1;
            decision.predicted_class = verdict.predicted_class;
            decision.confidence = verdict.confidence;
            decision.on_device = decision.exit_index <= policy.device_exit_count;
            decision.label = record.label;
            decision.correct = verdict.predicted_class == record.label;
            return decision;
        }
    }
    throw ValidationError("unreachable: final exit always fires");
}

std::vector<ExitDecision> run_cascade(const TraceDataset& dataset, const ExitPolicy& policy) {
    if (static_cast<int>(policy.temperatures.size()) != dataset.num_exits) {
        throw ValidationError("policy temperatures do not match dataset exits");
    }
    std::vector<ExitDecision> decisions;
    decisions.reserve(dataset.records.size());
    for (const LogitRecord& record : dataset.records) {
        decisions.push_back(decide_exit(record, policy));
    }
    return decisions;
}

std::string decisions_to_csv(const std::vector<ExitDecision>& decisions) {
    std::string out = "sample_id,exit_index,on_device,predicted,label,confidence,correct\n";
    for (const ExitDecision& d : decisions) {
        out += std::to_string(d.sample_id) + "," + std::to_string(d.exit_index) + "," +
               (d.on_device ? "1" : "0") + "," + std::to_string(d.predicted_class) + "," +
               std::to_string(d.label) + "," + format_g17(d.confidence) + "," +
               (d.correct ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace eesim
