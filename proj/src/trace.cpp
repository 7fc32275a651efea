#include "eesim/trace.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "eesim/error.hpp"
#include "eesim/format.hpp"
#include "eesim/rng.hpp"

namespace eesim {

using nlohmann::json;

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void validate_dataset(const TraceDataset& dataset) {
    if (dataset.num_classes < 2) throw DataError("dataset: num_classes must be >= 2");
    if (dataset.num_exits < 1) throw DataError("dataset: num_exits must be >= 1");
    std::unordered_set<std::int64_t> ids;
    ids.reserve(dataset.records.size());
    for (const LogitRecord& rec : dataset.records) {
        const std::string where = "record id " + std::to_string(rec.sample_id);
        if (rec.sample_id < 0) throw DataError(where + ": negative sample_id");
        if (!ids.insert(rec.sample_id).second) throw DataError(where + ": duplicate sample_id");
        if (rec.label < 0 || rec.label >= dataset.num_classes) {
            throw DataError(where + ": label out of range");
        }
        if (static_cast<int>(rec.logits_per_exit.size()) != dataset.num_exits) {
            throw DataError(where + ": wrong number of exits");
        }
        for (const std::vector<double>& z : rec.logits_per_exit) {
            if (static_cast<int>(z.size()) != dataset.num_classes) {
                throw DataError(where + ": wrong logit vector length");
            }
            for (double v : z) {
                if (!std::isfinite(v)) throw DataError(where + ": non-finite logit");
            }
        }
    }
}

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    throw DataError("line " + std::to_string(line_no) + ": " + what);
}

json parse_line(std::size_t line_no, const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
}

std::int64_t require_int(const json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        line_error(line_no, std::string("missing or non-integer \"") + key + "\"");
    }
    return j[key].get<std::int64_t>();
}

}  // namespace

TraceDataset parse_trace(std::istream& in) {
    TraceDataset dataset;
    std::string line;
    std::size_t line_no = 0;

    // header
    for (;;) {
        if (!std::getline(in, line)) throw DataError("line 1: missing header line");
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) break;
    }
    const json header = parse_line(line_no, line);
    if (!header.is_object()) line_error(line_no, "header is not a JSON object");
    const std::int64_t k = require_int(header, "k", line_no);
    const std::int64_t b = require_int(header, "b", line_no);
    if (k < 2) line_error(line_no, "header k must be >= 2");
    if (b < 1) line_error(line_no, "header b must be >= 1");
    dataset.num_classes = static_cast<int>(k);
    dataset.num_exits = static_cast<int>(b);
    if (header.contains("meta")) {
        if (!header["meta"].is_object()) line_error(line_no, "header meta is not an object");
        for (const auto& [key, value] : header["meta"].items()) {
            dataset.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }

    std::unordered_set<std::int64_t> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const json j = parse_line(line_no, line);
        if (!j.is_object()) line_error(line_no, "record is not a JSON object");

        LogitRecord rec;
        rec.sample_id = require_int(j, "id", line_no);
        if (rec.sample_id < 0) line_error(line_no, "negative sample id");
        if (!ids.insert(rec.sample_id).second) {
            line_error(line_no, "duplicate sample id " + std::to_string(rec.sample_id));
        }
        const std::int64_t label = require_int(j, "label", line_no);
        if (label < 0 || label >= k) line_error(line_no, "label out of range [0, K)");
        rec.label = static_cast<int>(label);

        if (!j.contains("logits") || !j["logits"].is_array()) {
            line_error(line_no, "missing or non-array \"logits\"");
        }
        const json& exits = j["logits"];
        if (static_cast<std::int64_t>(exits.size()) != b) {
            line_error(line_no, "expected " + std::to_string(b) + " logit vectors, got " +
                                    std::to_string(exits.size()));
        }
        rec.logits_per_exit.reserve(exits.size());
        for (const json& vec : exits) {
            if (!vec.is_array() || static_cast<std::int64_t>(vec.size()) != k) {
                line_error(line_no, "logit vector length differs from header k");
            }
            std::vector<double> z;
            z.reserve(vec.size());
            for (const json& v : vec) {
                if (!v.is_number()) line_error(line_no, "non-numeric logit");
                const double x = v.get<double>();
                if (!std::isfinite(x)) line_error(line_no, "non-finite logit");
                z.push_back(x);
            }
            rec.logits_per_exit.push_back(std::move(z));
        }
        dataset.records.push_back(std::move(rec));
    }
    return dataset;
}

std::string serialize_trace(const TraceDataset& dataset) {
    validate_dataset(dataset);
    std::string out;
    out.reserve(64 + dataset.records.size() * (32 + 26 * static_cast<std::size_t>(
                                                        dataset.num_classes * dataset.num_exits)));
    out += "{\"k\":" + std::to_string(dataset.num_classes) +
           ",\"b\":" + std::to_string(dataset.num_exits) +
           ",\"meta\":" + json(dataset.metadata).dump() + "}\n";
    for (const LogitRecord& rec : dataset.records) {
        out += "{\"id\":" + std::to_string(rec.sample_id) +
               ",\"label\":" + std::to_string(rec.label) + ",\"logits\":[";
        for (std::size_t i = 0; i < rec.logits_per_exit.size(); ++i) {
            if (i > 0) out += ',';
            out += '[';
            const std::vector<double>& z = rec.logits_per_exit[i];
            for (std::size_t j = 0; j < z.size(); ++j) {
                if (j > 0) out += ',';
                out += format_g17(z[j]);
            }
            out += ']';
        }
        out += "]}\n";
    }
    return out;
}

TraceDataset load_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open trace file: " + path);
    return parse_trace(in);
}

void save_trace_file(const TraceDataset& dataset, const std::string& path) {
    write_file_atomic(path, serialize_trace(dataset));
}

DatasetSplit split_dataset(const TraceDataset& dataset, double validation_fraction,
                           std::uint64_t seed) {
    if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0)) {
        throw ValidationError("validation_fraction must lie in (0, 1)");
    }
    const std::size_t n = dataset.records.size();
    if (n < 2) throw ValidationError("split requires at least 2 records");
    const auto n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(n)));
    if (n_val == 0 || n_val == n) {
        throw ValidationError("validation_fraction produces an empty side");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine eng(fork_seed(seed, "split"));
    eng.shuffle(order);

    DatasetSplit split;
    split.seed = seed;
    split.validation.num_classes = split.test.num_classes = dataset.num_classes;
    split.validation.num_exits = split.test.num_exits = dataset.num_exits;
    split.validation.metadata = split.test.metadata = dataset.metadata;
    split.validation.records.reserve(n_val);
    split.test.records.reserve(n - n_val);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_val ? split.validation : split.test).records.push_back(dataset.records[order[i]]);
    }
    return split;
}

std::vector<std::vector<std::int64_t>> batch_ids(const TraceDataset& dataset,
                                                 std::size_t batch_size) {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    std::vector<std::vector<std::int64_t>> batches;
    batches.reserve(dataset.records.size() / batch_size + 1);
    std::vector<std::int64_t> cur;
    cur.reserve(batch_size);
    for (const LogitRecord& rec : dataset.records) {
        cur.push_back(rec.sample_id);
        if (cur.size() == batch_size) {
            batches.push_back(std::move(cur));
            cur = {};
            cur.reserve(batch_size);
        }
    }
    if (!cur.empty()) batches.push_back(std::move(cur));
    return batches;
}

bool dataset_equal(const TraceDataset& a, const TraceDataset& b) {
    if (a.num_classes != b.num_classes || a.num_exits != b.num_exits ||
        a.metadata != b.metadata || a.records.size() != b.records.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const LogitRecord& ra = a.records[i];
        const LogitRecord& rb = b.records[i];
        if (ra.sample_id != rb.sample_id || ra.label != rb.label ||
            ra.logits_per_exit != rb.logits_per_exit) {
            return false;
        }
    }
    return true;
}

}  // namespace eesim
