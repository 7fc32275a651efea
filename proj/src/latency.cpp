#include "eesim/latency.hpp"

#include <cmath>

#include <json.hpp>

#include "eesim/error.hpp"
#include "eesim/format.hpp"

namespace eesim {

using nlohmann::json;

void validate_profile(const LatencyProfile& profile) {
    if (profile.device_segment_delays.empty()) {
        throw ValidationError("profile: device_segment_delays must be non-empty");
    }
    for (double d : profile.device_segment_delays) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw ValidationError("profile: segment delays must be finite and >= 0");
        }
    }
    if (profile.partition_output_bytes < 0) {
        throw ValidationError("profile: partition_output_bytes must be >= 0");
    }
    if (!(profile.uplink_rate_bps > 0.0) || !std::isfinite(profile.uplink_rate_bps)) {
        throw ValidationError("profile: uplink_rate_bps must be positive and finite");
    }
    if (!(profile.cloud_delay_s >= 0.0) || !std::isfinite(profile.cloud_delay_s)) {
        throw ValidationError("profile: cloud_delay_s must be finite and >= 0");
    }
    if (profile.element_bytes < 1) throw ValidationError("profile: element_bytes must be >= 1");
}

LatencyProfile profile_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("profile: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("profile: expected a JSON object");
    for (const char* key : {"device_segment_delays", "partition_output_bytes",
                            "uplink_rate_bps", "cloud_delay_s"}) {
        if (!j.contains(key)) throw DataError(std::string("profile: missing field \"") + key + "\"");
    }
    LatencyProfile profile;
    if (!j["device_segment_delays"].is_array()) {
        throw DataError("profile: device_segment_delays must be an array");
    }
    for (const json& v : j["device_segment_delays"]) {
        if (!v.is_number()) throw DataError("profile: non-numeric segment delay");
        profile.device_segment_delays.push_back(v.get<double>());
    }
    profile.partition_output_bytes = j["partition_output_bytes"].get<std::int64_t>();
    profile.uplink_rate_bps = j["uplink_rate_bps"].get<double>();
    profile.cloud_delay_s = j["cloud_delay_s"].get<double>();
    profile.element_bytes = j.value("element_bytes", 4);
    try {
        validate_profile(profile);
    } catch (const ValidationError& e) {
        throw DataError(e.what());  // bad values in a profile file are a data error
    }
    return profile;
}

std::string profile_to_json(const LatencyProfile& profile) {
    json j;
    j["device_segment_delays"] = profile.device_segment_delays;
    j["partition_output_bytes"] = profile.partition_output_bytes;
    j["uplink_rate_bps"] = profile.uplink_rate_bps;
    j["cloud_delay_s"] = profile.cloud_delay_s;
    j["element_bytes"] = profile.element_bytes;
    return j.dump(2) + "\n";
}

LatencyProfile load_profile_file(const std::string& path) {
    try {
        return profile_from_json(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

double comm_delay(std::int64_t payload_bytes, double uplink_rate_bps) {
    if (payload_bytes < 0) throw ValidationError("comm_delay: negative payload");
    if (!(uplink_rate_bps > 0.0)) throw ValidationError("comm_delay: rate must be positive");
    return 8.0 * static_cast<double>(payload_bytes) / uplink_rate_bps;
}

LatencyBreakdown sample_latency(const ExitDecision& decision, const LatencyProfile& profile) {
    const std::size_t d = profile.device_segment_delays.size();
    LatencyBreakdown breakdown;
    if (decision.on_device) {
        if (decision.exit_index < 1 || static_cast<std::size_t>(decision.exit_index) > d) {
            throw ValidationError("sample_latency: device exit " +
                                  std::to_string(decision.exit_index) +
                                  " has no matching segment");
        }
        for (std::size_t i = 0; i < static_cast<std::size_t>(decision.exit_index); ++i) {
            breakdown.device_s += profile.device_segment_delays[i];
        }
    } else {
        for (std::size_t i = 0; i < d; ++i) {
            breakdown.device_s += profile.device_segment_delays[i];
        }
        breakdown.comm_s = comm_delay(profile.partition_output_bytes, profile.uplink_rate_bps);
        breakdown.cloud_s = profile.cloud_delay_s;
    }
    breakdown.total_s = breakdown.device_s + breakdown.comm_s + breakdown.cloud_s;
    return breakdown;
}

BatchAggregation aggregation_from_string(const std::string& name) {
    if (name == "mean") return BatchAggregation::mean;
    if (name == "sum") return BatchAggregation::sum;
    throw ValidationError("unknown aggregation: " + name + " (expected \"mean\" or \"sum\")");
}

double batch_time(const std::vector<ExitDecision>& decisions, const LatencyProfile& profile,
                  BatchAggregation aggregation) {
    if (decisions.empty()) throw DataError("batch_time: empty batch");
    double sum = 0.0;
    for (const ExitDecision& decision : decisions) {
        sum += sample_latency(decision, profile).total_s;
    }
    return aggregation == BatchAggregation::sum
               ? sum
               : sum / static_cast<double>(decisions.size());
}

}  // namespace eesim
