#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "eesim/error.hpp"
#include "eesim/latency.hpp"

using eesim::DataError;
using eesim::ExitDecision;
using eesim::LatencyProfile;
using eesim::ValidationError;

namespace {

LatencyProfile reference_profile() {
    LatencyProfile p;
    p.device_segment_delays = {0.010};
    p.partition_output_bytes = 57600;
    p.uplink_rate_bps = 18.8e6;
    p.cloud_delay_s = 0.002;
    return p;
}

ExitDecision at_exit(int exit_index, bool on_device) {
    ExitDecision d;
    d.exit_index = exit_index;
    d.on_device = on_device;
    return d;
}

}  // namespace

TEST_SUITE("latency") {

TEST_CASE("comm_delay worked examples") {
    CHECK(eesim::comm_delay(0, 5.0) == 0.0);
    CHECK(eesim::comm_delay(1, 8.0) == 1.0);
    const double d = eesim::comm_delay(57600, 18.8e6);
    CHECK(std::abs(d - 460800.0 / 18.8e6) <= 1e-12 * d);
    CHECK(d == doctest::Approx(0.024511).epsilon(1e-4));
    CHECK_THROWS_AS(eesim::comm_delay(-1, 5.0), ValidationError);
    CHECK_THROWS_AS(eesim::comm_delay(1, 0.0), ValidationError);
}

TEST_CASE("device exit pays only its prefix of segments") {
    const eesim::LatencyBreakdown b =
        eesim::sample_latency(at_exit(1, true), reference_profile());
    CHECK(b.device_s == 0.010);
    CHECK(b.comm_s == 0.0);
    CHECK(b.cloud_s == 0.0);
    CHECK(b.total_s == 0.010);

    LatencyProfile two = reference_profile();
    two.device_segment_delays = {0.008, 0.012};
    const eesim::LatencyBreakdown deep = eesim::sample_latency(at_exit(2, true), two);
    CHECK(deep.device_s == doctest::Approx(0.020).epsilon(1e-12));
}

TEST_CASE("cloud exit pays all segments plus transfer plus cloud compute") {
    const LatencyProfile p = reference_profile();
    const eesim::LatencyBreakdown b = eesim::sample_latency(at_exit(2, false), p);
    CHECK(b.device_s == 0.010);
    CHECK(b.comm_s == eesim::comm_delay(57600, 18.8e6));
    CHECK(b.cloud_s == 0.002);
    CHECK(b.total_s == doctest::Approx(0.036511).epsilon(1e-4));
    // additivity is bit-exact by construction
    CHECK(b.total_s == b.device_s + b.comm_s + b.cloud_s);
}

TEST_CASE("device exit beyond the segment list is rejected") {
    CHECK_THROWS_AS(eesim::sample_latency(at_exit(2, true), reference_profile()), ValidationError);
    CHECK_THROWS_AS(eesim::sample_latency(at_exit(0, true), reference_profile()), ValidationError);
}

TEST_CASE("batch_time aggregates totals") {
    LatencyProfile p = reference_profile();
    p.device_segment_delays = {0.01, 0.02};
    const std::vector<ExitDecision> batch = {at_exit(1, true), at_exit(2, true)};
    CHECK(eesim::batch_time(batch, p, eesim::BatchAggregation::mean) ==
          doctest::Approx(0.02).epsilon(1e-12));
    CHECK(eesim::batch_time(batch, p, eesim::BatchAggregation::sum) ==
          doctest::Approx(0.04).epsilon(1e-12));
    CHECK_THROWS_AS(eesim::batch_time({}, p, eesim::BatchAggregation::mean), DataError);
}

TEST_CASE("aggregation names parse") {
    CHECK(eesim::aggregation_from_string("mean") == eesim::BatchAggregation::mean);
    CHECK(eesim::aggregation_from_string("sum") == eesim::BatchAggregation::sum);
    CHECK_THROWS_AS(eesim::aggregation_from_string("median"), ValidationError);
}

TEST_CASE("profile JSON round-trips and defaults element_bytes") {
    const std::string text = eesim::profile_to_json(reference_profile());
    const LatencyProfile back = eesim::profile_from_json(text);
    CHECK(back.device_segment_delays == reference_profile().device_segment_delays);
    CHECK(back.partition_output_bytes == 57600);
    CHECK(back.uplink_rate_bps == 18.8e6);
    CHECK(back.cloud_delay_s == 0.002);
    CHECK(back.element_bytes == 4);

    const LatencyProfile defaulted = eesim::profile_from_json(
        "{\"device_segment_delays\":[0.01],\"partition_output_bytes\":100,"
        "\"uplink_rate_bps\":1e6,\"cloud_delay_s\":0}");
    CHECK(defaulted.element_bytes == 4);

    CHECK_THROWS_AS(eesim::profile_from_json("{}"), DataError);
    CHECK_THROWS_AS(eesim::profile_from_json("nope"), DataError);
    CHECK_THROWS_AS(
        eesim::profile_from_json("{\"device_segment_delays\":[],\"partition_output_bytes\":1,"
                                 "\"uplink_rate_bps\":1,\"cloud_delay_s\":0}"),
        DataError);
    CHECK_THROWS_AS(
        eesim::profile_from_json("{\"device_segment_delays\":[-0.1],\"partition_output_bytes\":1,"
                                 "\"uplink_rate_bps\":1,\"cloud_delay_s\":0}"),
        DataError);
    CHECK_THROWS_AS(
        eesim::profile_from_json("{\"device_segment_delays\":[0.1],\"partition_output_bytes\":1,"
                                 "\"uplink_rate_bps\":0,\"cloud_delay_s\":0}"),
        DataError);
}

TEST_CASE("missing profile file names the path") {
    try {
        eesim::load_profile_file("/nonexistent/profile.json");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/profile.json") != std::string::npos);
    }
}

TEST_CASE("batch_time is monotone in uplink rate") {
    LatencyProfile slow = reference_profile();
    LatencyProfile fast = reference_profile();
    fast.uplink_rate_bps = 2.0 * slow.uplink_rate_bps;
    const std::vector<ExitDecision> batch = {at_exit(2, false), at_exit(1, true)};
    CHECK(eesim::batch_time(batch, fast, eesim::BatchAggregation::mean) <
          eesim::batch_time(batch, slow, eesim::BatchAggregation::mean));
}

}  // TEST_SUITE
