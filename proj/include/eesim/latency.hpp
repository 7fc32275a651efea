#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eesim/cascade.hpp"

namespace eesim {

struct LatencyProfile {
    // Seconds per device segment: segment i covers the layers between exit
    // i-1 and exit i, including the exit branch itself. Device exit i costs
    // the sum of segments 1..i; the cloud path pays all D segments first.
    std::vector<double> device_segment_delays;
    std::int64_t partition_output_bytes = 0;  // tensor size sent on offload
    double uplink_rate_bps = 1.0;             // bits per second (Mbps = 1e6)
    double cloud_delay_s = 0.0;               // cloud compute for the rest
    int element_bytes = 4;                    // tensor element width
};

void validate_profile(const LatencyProfile& profile);
LatencyProfile profile_from_json(const std::string& text);
std::string profile_to_json(const LatencyProfile& profile);
LatencyProfile load_profile_file(const std::string& path);

struct LatencyBreakdown {
    double device_s = 0.0;
    double comm_s = 0.0;
    double cloud_s = 0.0;
    double total_s = 0.0;  // always device_s + comm_s + cloud_s, in that order
};

// 8 * payload_bytes / uplink_rate_bps.
double comm_delay(std::int64_t payload_bytes, double uplink_rate_bps);

// Device exit i: segments 1..i, no comm, no cloud. Cloud exit: all device
// segments, transfer of the partition output, cloud compute.
LatencyBreakdown sample_latency(const ExitDecision& decision, const LatencyProfile& profile);

enum class BatchAggregation { mean, sum };
BatchAggregation aggregation_from_string(const std::string& name);

double batch_time(const std::vector<ExitDecision>& decisions, const LatencyProfile& profile,
                  BatchAggregation aggregation = BatchAggregation::mean);

}  // namespace eesim
