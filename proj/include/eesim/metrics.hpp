#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eesim/cascade.hpp"
#include "eesim/latency.hpp"

namespace eesim {

struct DeadlineSpec {
    double t_tar = 0.0;  // seconds, > 0
};

struct BatchStats {
    std::size_t batch_index = 0;
    std::size_t size = 0;
    std::size_t device_count = 0;
    std::optional<double> device_accuracy;  // empty: no on-device samples
    double batch_accuracy = 0.0;            // total accuracy (device + cloud)
    double batch_time_s = 0.0;
    std::optional<bool> outage;  // empty: excluded (no on-device samples)
    std::optional<bool> missed;  // empty: no deadline given
};

// |on-device| / N; the offloading probability is the complement.
double device_classification_probability(const std::vector<ExitDecision>& decisions);

// Fraction correct among on-device decisions; empty when none exit on device.
std::optional<double> device_accuracy(const std::vector<ExitDecision>& decisions);

// Fraction correct over all decisions.
double total_accuracy(const std::vector<ExitDecision>& decisions);

struct OutageResult {
    std::optional<double> probability;  // empty when no batch counts
    std::size_t counted_batches = 0;    // batches with at least one device sample
};

// Splits decisions into dataset-order batches; a batch is in outage when its
// on-device accuracy falls below p_tar. Batches with zero on-device samples
// are excluded from the denominator.
OutageResult outage_probability(const std::vector<ExitDecision>& decisions, double p_tar,
                                std::size_t batch_size, bool drop_partial_batch = false);

// A batch misses the deadline when its time exceeds t_tar OR its total
// accuracy falls below p_tar; the fraction runs over ALL batches.
double missed_deadline_probability(const std::vector<ExitDecision>& decisions,
                                   const LatencyProfile& profile, double p_tar,
                                   DeadlineSpec deadline, std::size_t batch_size,
                                   bool drop_partial_batch = false,
                                   BatchAggregation aggregation = BatchAggregation::mean);

struct ExperimentReport {
    double p_tar = 0.0;
    std::optional<double> t_tar;
    bool calibrated = false;
    double device_prob = 0.0;
    std::optional<double> device_acc;
    double total_acc = 0.0;
    std::optional<double> outage_prob;
    std::size_t outage_batches = 0;  // batches counted in the outage ratio
    std::optional<double> missed_prob;
    std::vector<BatchStats> per_batch;
};

// Computes every metric for one set of decisions. Sample-level aggregates
// use all decisions; batch-level metrics honor drop_partial_batch.
ExperimentReport evaluate(const std::vector<ExitDecision>& decisions, double p_tar,
                          std::optional<DeadlineSpec> deadline, const LatencyProfile& profile,
                          std::size_t batch_size, bool calibrated, bool drop_partial_batch,
                          BatchAggregation aggregation = BatchAggregation::mean);

// Cartesian product of the grids, p_tar outer, t_tar inner. The cascade runs
// once per p_tar and is reused across deadlines. An empty t_tar grid yields
// one report per p_tar with no deadline.
std::vector<ExperimentReport> sweep(const TraceDataset& dataset, const ExitPolicy& policy_template,
                                    const std::vector<double>& p_tar_grid,
                                    const std::vector<double>& t_tar_grid,
                                    const LatencyProfile& profile, std::size_t batch_size,
                                    bool calibrated, bool drop_partial_batch = false,
                                    BatchAggregation aggregation = BatchAggregation::mean);

// CSV with header
// "p_tar,t_tar,calibrated,device_prob,device_acc,total_acc,outage_prob,outage_batches,missed_prob".
// Undefined values render as "nan".
std::string reports_to_csv_header();
std::string report_to_csv_row(const ExperimentReport& report);
std::string reports_to_csv(const std::vector<ExperimentReport>& reports);

// JSON array with full per-batch detail (undefined values render as null).
std::string reports_to_json(const std::vector<ExperimentReport>& reports);

}  // namespace eesim
