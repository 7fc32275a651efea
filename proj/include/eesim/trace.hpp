#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace eesim {

// One sample: ground-truth label plus one logit vector per exit point.
// Exit 1 is the shallowest device branch, exit B the final exit.
struct LogitRecord {
    std::int64_t sample_id = 0;
    int label = 0;
    std::vector<std::vector<double>> logits_per_exit;  // B vectors of length K
};

struct TraceDataset {
    std::vector<LogitRecord> records;
    int num_classes = 0;  // K
    int num_exits = 0;    // B
    std::map<std::string, std::string> metadata;
};

struct DatasetSplit {
    TraceDataset validation;
    TraceDataset test;
    std::uint64_t seed = 0;
};

// Checks every TraceDataset invariant (shared K/B, finite logits, label
// range, unique sample ids); throws DataError with the offending record.
void validate_dataset(const TraceDataset& dataset);

// JSON-Lines trace format. Line 1 is a header object {"k":int,"b":int,
// "meta":{...}}; each following line is {"id":int,"label":int,
// "logits":[[f64;K];B]}. Logits are written with 17 significant digits so
// parse(serialize(d)) reproduces the exact doubles.
TraceDataset parse_trace(std::istream& in);
std::string serialize_trace(const TraceDataset& dataset);

TraceDataset load_trace_file(const std::string& path);
void save_trace_file(const TraceDataset& dataset, const std::string& path);

// Seeded shuffle, then prefix split: |validation| = round(fraction * N).
// The shuffle stream is forked from the seed with purpose "split".
DatasetSplit split_dataset(const TraceDataset& dataset, double validation_fraction,
                           std::uint64_t seed);

// Consecutive id chunks in dataset order; the final chunk may be smaller.
std::vector<std::vector<std::int64_t>> batch_ids(const TraceDataset& dataset,
                                                 std::size_t batch_size);

// Exact equality on the data model (ids, labels, bit-identical logits,
// K/B/metadata).
bool dataset_equal(const TraceDataset& a, const TraceDataset& b);

}  // namespace eesim
