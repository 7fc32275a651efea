#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eesim/calib.hpp"
#include "eesim/cascade.hpp"
#include "eesim/error.hpp"
#include "eesim/format.hpp"
#include "eesim/latency.hpp"
#include "eesim/metrics.hpp"
#include "eesim/syngen.hpp"
#include "eesim/trace.hpp"

namespace {

using eesim::DataError;
using eesim::ValidationError;
using nlohmann::json;

// Relative config/profile paths that do not exist locally fall back to
// EESIM_CONFIG_DIR (the default config directory).
std::string resolve_config_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
    if (const char* dir = std::getenv("EESIM_CONFIG_DIR")) {
        const fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

json load_config(const std::string& path) {
    if (path.empty()) return json(nullptr);
    try {
        return json::parse(eesim::read_file(resolve_config_path(path)));
    } catch (const json::exception& e) {
        throw ValidationError("config " + path + ": malformed JSON: " + e.what());
    }
}

// Flag-wins merge between the command line and the config file.
struct ConfigSource {
    json j;

    template <typename T>
    void fill(const CLI::Option* opt, const char* key, T& value) const {
        if (opt->count() > 0) return;
        if (j.is_object() && j.contains(key)) {
            try {
                value = j[key].get<T>();
            } catch (const json::exception&) {
                throw ValidationError(std::string("config field \"") + key + "\" has wrong type");
            }
        }
    }

    bool has(const CLI::Option* opt, const char* key) const {
        return opt->count() > 0 || (j.is_object() && j.contains(key));
    }
};

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(std::string(what) + ": cannot parse \"" + item + "\" as number");
        }
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    if (values.empty()) throw ValidationError(std::string(what) + ": empty list");
    return values;
}

std::vector<eesim::CascadeBranchConfig> parse_branches(const std::string& text) {
    std::vector<eesim::CascadeBranchConfig> branches;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, comma - pos);
        const std::size_t c1 = item.find(':');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : item.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw ValidationError("branches: expected signal:sigma:scale, got \"" + item + "\"");
        }
        try {
            branches.push_back({std::stod(item.substr(0, c1)),
                                std::stod(item.substr(c1 + 1, c2 - c1 - 1)),
                                std::stod(item.substr(c2 + 1))});
        } catch (const std::exception&) {
            throw ValidationError("branches: cannot parse \"" + item + "\"");
        }
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    if (branches.empty()) throw ValidationError("branches: empty list");
    return branches;
}

std::vector<std::vector<double>> exit_logits(const eesim::TraceDataset& dataset,
                                             std::size_t exit_idx) {
    std::vector<std::vector<double>> logits;
    logits.reserve(dataset.records.size());
    for (const eesim::LogitRecord& rec : dataset.records) {
        logits.push_back(rec.logits_per_exit[exit_idx]);
    }
    return logits;
}

std::vector<int> labels_of(const eesim::TraceDataset& dataset) {
    std::vector<int> labels;
    labels.reserve(dataset.records.size());
    for (const eesim::LogitRecord& rec : dataset.records) labels.push_back(rec.label);
    return labels;
}

void warn_if_single_label(const std::vector<int>& labels, std::size_t exit_idx) {
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] != labels[0]) return;
    }
    std::cerr << "warning: exit " << exit_idx + 1
              << ": validation labels are all identical; the fit will clamp\n";
}

std::vector<eesim::CalibrationResult> fit_all_exits(const eesim::TraceDataset& validation) {
    const std::vector<int> labels = labels_of(validation);
    std::vector<eesim::CalibrationResult> results;
    for (int e = 0; e < validation.num_exits; ++e) {
        warn_if_single_label(labels, static_cast<std::size_t>(e));
        results.push_back(
            eesim::fit_temperature(exit_logits(validation, static_cast<std::size_t>(e)), labels));
    }
    return results;
}

// Restricted variant: exit i is fitted only on the samples that the already
// calibrated exits 1..i-1 leave unfired at threshold p_tar.
std::vector<eesim::CalibrationResult> fit_branch_restricted(const eesim::TraceDataset& validation,
                                                            double p_tar,
                                                            eesim::ConfidenceRule rule) {
    const std::size_t n = validation.records.size();
    std::vector<bool> reached(n, true);
    std::vector<eesim::CalibrationResult> results;
    for (int e = 0; e < validation.num_exits; ++e) {
        std::vector<std::vector<double>> logits;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            if (!reached[i]) continue;
            logits.push_back(validation.records[i].logits_per_exit[static_cast<std::size_t>(e)]);
            labels.push_back(validation.records[i].label);
        }
        if (logits.empty()) {
            throw DataError("branch-restricted: no validation samples reach exit " +
                            std::to_string(e + 1));
        }
        warn_if_single_label(labels, static_cast<std::size_t>(e));
        const eesim::CalibrationResult result = eesim::fit_temperature(logits, labels);
        results.push_back(result);
        if (e + 1 == validation.num_exits) break;
        for (std::size_t i = 0; i < n; ++i) {
            if (!reached[i]) continue;
            const std::vector<double> p = eesim::scaled_softmax(
                validation.records[i].logits_per_exit[static_cast<std::size_t>(e)],
                result.temperature);
            if (eesim::confidence_of(p, rule).confidence >= p_tar) reached[i] = false;
        }
    }
    return results;
}

// ---------------------------------------------------------------- gen ----

struct GenCmd {
    std::string config_path;
    std::string mode;
    int k = 10;
    std::int64_t n = 0;
    double alpha = 0.5;
    double s = 1.0;
    std::string branches;
    std::uint64_t seed = 0;
    std::string out;

    CLI::Option* mode_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* s_opt = nullptr;
    CLI::Option* branches_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags win)");
        mode_opt = cmd->add_option("--mode", mode, "Generator mode: oracle | cascade");
        k_opt = cmd->add_option("--k", k, "Number of classes (default 10)");
        n_opt = cmd->add_option("--n", n, "Number of samples");
        alpha_opt = cmd->add_option("--alpha", alpha, "Dirichlet concentration (oracle mode)");
        s_opt = cmd->add_option("--s", s, "Miscalibration scale (oracle mode)");
        branches_opt = cmd->add_option(
            "--branches", branches, "Cascade branches as signal:sigma:scale[,...] (cascade mode)");
        seed_opt = cmd->add_option("--seed", seed, "Top-level seed (default 0)");
        out_opt = cmd->add_option("-o,--out", out, "Output trace path (JSONL)");
    }

    void run() {
        const ConfigSource cfg{load_config(config_path)};
        cfg.fill(mode_opt, "mode", mode);
        cfg.fill(k_opt, "k", k);
        cfg.fill(n_opt, "n", n);
        cfg.fill(alpha_opt, "alpha", alpha);
        cfg.fill(s_opt, "s", s);
        cfg.fill(branches_opt, "branches", branches);
        cfg.fill(seed_opt, "seed", seed);
        cfg.fill(out_opt, "out", out);
        if (!cfg.has(mode_opt, "mode")) throw ValidationError("gen: --mode is required");
        if (!cfg.has(n_opt, "n")) throw ValidationError("gen: --n is required");
        if (!cfg.has(out_opt, "out")) throw ValidationError("gen: --out is required");

        eesim::TraceDataset dataset;
        if (mode == "oracle") {
            dataset = eesim::gen_oracle_trace({k, n, alpha, s, seed});
        } else if (mode == "cascade") {
            if (!cfg.has(branches_opt, "branches")) {
                throw ValidationError("gen: cascade mode requires --branches");
            }
            dataset = eesim::gen_cascade_trace({k, n, parse_branches(branches), seed});
        } else {
            throw ValidationError("gen: unknown mode \"" + mode +
                                  "\" (expected oracle or cascade)");
        }
        eesim::save_trace_file(dataset, out);
        std::cout << "gen: mode=" << mode << " n=" << dataset.records.size()
                  << " k=" << dataset.num_classes << " b=" << dataset.num_exits
                  << " seed=" << seed << " -> " << out << "\n";
    }
};

// ---------------------------------------------------------- calibrate ----

struct CalibrateCmd {
    std::string config_path;
    std::string trace;
    double validation_fraction = 0.3;
    std::uint64_t seed = 0;
    bool branch_restricted = false;
    double p_tar = 0.85;
    std::string rule = "max-prob";
    std::string out;

    CLI::Option* trace_opt = nullptr;
    CLI::Option* vf_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* br_opt = nullptr;
    CLI::Option* p_tar_opt = nullptr;
    CLI::Option* rule_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags win)");
        trace_opt = cmd->add_option("--trace", trace, "Input trace (JSONL)");
        vf_opt = cmd->add_option("--validation-fraction", validation_fraction,
                                 "Validation fraction (default 0.3)");
        seed_opt = cmd->add_option("--seed", seed, "Top-level seed (default 0)");
        br_opt = cmd->add_flag("--branch-restricted", branch_restricted,
                               "Fit each exit only on samples unfired by earlier exits");
        p_tar_opt = cmd->add_option("--p-tar", p_tar,
                                    "Threshold used by --branch-restricted (default 0.85)");
        rule_opt = cmd->add_option("--rule", rule, "Confidence rule: max-prob | entropy");
        out_opt = cmd->add_option("-o,--out", out, "Output calibration file (JSON)");
    }

    void run() {
        const ConfigSource cfg{load_config(config_path)};
        cfg.fill(trace_opt, "trace", trace);
        cfg.fill(vf_opt, "validation_fraction", validation_fraction);
        cfg.fill(seed_opt, "seed", seed);
        cfg.fill(br_opt, "branch_restricted", branch_restricted);
        cfg.fill(p_tar_opt, "p_tar", p_tar);
        cfg.fill(rule_opt, "rule", rule);
        cfg.fill(out_opt, "out", out);
        if (!cfg.has(trace_opt, "trace")) throw ValidationError("calibrate: --trace is required");
        if (!cfg.has(out_opt, "out")) throw ValidationError("calibrate: --out is required");

        const eesim::TraceDataset dataset = eesim::load_trace_file(trace);
        const eesim::DatasetSplit split =
            eesim::split_dataset(dataset, validation_fraction, seed);
        const std::vector<eesim::CalibrationResult> results =
            branch_restricted
                ? fit_branch_restricted(split.validation, p_tar,
                                        eesim::confidence_rule_from_string(rule))
                : fit_all_exits(split.validation);
        eesim::write_file_atomic(out, eesim::calibration_to_json(results));
        for (std::size_t e = 0; e < results.size(); ++e) {
            const eesim::CalibrationResult& r = results[e];
            std::cout << "calibrate: exit " << e + 1 << " t=" << eesim::format_g17(r.temperature)
                      << " nll " << eesim::format_g17(r.nll_before) << " -> "
                      << eesim::format_g17(r.nll_after) << (r.clamped ? " (clamped)" : "")
                      << " n=" << r.num_samples << "\n";
        }
        std::cout << "calibrate: wrote " << out << "\n";
    }
};

// ------------------------------------------------------------ simulate ----

struct PolicyArgs {
    std::string temps;
    std::string calib_file;
    bool calibrate = false;
    std::string rule = "max-prob";
    int device_exits = -1;  // default: B - 1 (min 1)

    CLI::Option* temps_opt = nullptr;
    CLI::Option* calib_opt = nullptr;
    CLI::Option* fit_opt = nullptr;
    CLI::Option* rule_opt = nullptr;
    CLI::Option* d_opt = nullptr;

    void attach(CLI::App* cmd) {
        temps_opt = cmd->add_option("--temps", temps, "Explicit per-exit temperatures t1,t2,...");
        calib_opt = cmd->add_option("--calib", calib_file, "Calibration file from `calibrate`");
        fit_opt = cmd->add_flag("--calibrate", calibrate,
                                "Fit temperatures on the validation split before simulating");
        rule_opt = cmd->add_option("--rule", rule, "Confidence rule: max-prob | entropy");
        d_opt = cmd->add_option("--device-exits", device_exits,
                                "Number of device exits D (default B-1, min 1)");
    }

    void fill(const ConfigSource& cfg) {
        cfg.fill(temps_opt, "temps", temps);
        cfg.fill(calib_opt, "calib", calib_file);
        cfg.fill(fit_opt, "calibrate", calibrate);
        cfg.fill(rule_opt, "rule", rule);
        cfg.fill(d_opt, "device_exits", device_exits);
    }

    // Resolves per-exit temperatures; `calibrated` reports whether the run
    // differs from the conventional all-ones policy.
    std::vector<double> resolve(const ConfigSource& cfg, const eesim::TraceDataset& validation,
                                bool& calibrated, bool require_calibration) const {
        const int sources = (cfg.has(temps_opt, "temps") ? 1 : 0) +
                            (cfg.has(calib_opt, "calib") ? 1 : 0) + (calibrate ? 1 : 0);
        if (sources > 1) {
            throw ValidationError("choose one of --temps, --calib, --calibrate");
        }
        if (require_calibration && !cfg.has(calib_opt, "calib") && !calibrate) {
            throw ValidationError("sweep compares policies: provide --calib or --calibrate");
        }
        std::vector<double> temperatures;
        if (cfg.has(temps_opt, "temps")) {
            temperatures = parse_double_list(temps, "temps");
        } else if (cfg.has(calib_opt, "calib")) {
            for (const eesim::CalibrationResult& r : eesim::calibration_from_json(
                     eesim::read_file(resolve_config_path(calib_file)))) {
                temperatures.push_back(r.temperature);
            }
        } else if (calibrate) {
            for (const eesim::CalibrationResult& r : fit_all_exits(validation)) {
                temperatures.push_back(r.temperature);
            }
        } else {
            temperatures.assign(static_cast<std::size_t>(validation.num_exits), 1.0);
        }
        calibrated = false;
        for (double t : temperatures) calibrated = calibrated || t != 1.0;
        return temperatures;
    }

    int resolved_device_exits(int num_exits) const {
        if (device_exits > 0) return device_exits;
        return std::max(1, num_exits - 1);
    }
};

struct SimulateCmd {
    std::string config_path;
    std::string trace;
    std::string profile_path;
    double p_tar = 0.85;
    double t_tar = 0.0;
    PolicyArgs policy_args;
    std::size_t batch_size = 512;
    double validation_fraction = 0.3;
    std::uint64_t seed = 0;
    bool drop_partial_batch = false;
    std::string aggregation = "mean";
    std::string out_csv;
    std::string out_json;
    std::string decisions_csv;

    CLI::Option* trace_opt = nullptr;
    CLI::Option* profile_opt = nullptr;
    CLI::Option* p_tar_opt = nullptr;
    CLI::Option* t_tar_opt = nullptr;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* vf_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* drop_opt = nullptr;
    CLI::Option* agg_opt = nullptr;
    CLI::Option* csv_opt = nullptr;
    CLI::Option* json_opt = nullptr;
    CLI::Option* dec_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags win)");
        trace_opt = cmd->add_option("--trace", trace, "Input trace (JSONL)");
        profile_opt = cmd->add_option("--profile", profile_path, "Latency profile (JSON)");
        p_tar_opt = cmd->add_option("--p-tar", p_tar, "Target confidence threshold");
        t_tar_opt = cmd->add_option("--t-tar", t_tar, "Deadline in seconds (optional)");
        policy_args.attach(cmd);
        batch_opt = cmd->add_option("--batch-size", batch_size, "Batch size (default 512)");
        vf_opt = cmd->add_option("--validation-fraction", validation_fraction,
                                 "Validation fraction (default 0.3)");
        seed_opt = cmd->add_option("--seed", seed, "Top-level seed (default 0)");
        drop_opt = cmd->add_flag("--drop-partial-batch", drop_partial_batch,
                                 "Drop the final short batch from batch-level metrics");
        agg_opt = cmd->add_option("--aggregation", aggregation, "Batch time: mean | sum");
        csv_opt = cmd->add_option("--out-csv", out_csv, "Report CSV path");
        json_opt = cmd->add_option("--out-json", out_json, "Report JSON path (per-batch detail)");
        dec_opt = cmd->add_option("--decisions-csv", decisions_csv, "Per-sample decision CSV");
    }

    void run() {
        const ConfigSource cfg{load_config(config_path)};
        cfg.fill(trace_opt, "trace", trace);
        cfg.fill(profile_opt, "profile", profile_path);
        cfg.fill(p_tar_opt, "p_tar", p_tar);
        cfg.fill(t_tar_opt, "t_tar", t_tar);
        policy_args.fill(cfg);
        cfg.fill(batch_opt, "batch_size", batch_size);
        cfg.fill(vf_opt, "validation_fraction", validation_fraction);
        cfg.fill(seed_opt, "seed", seed);
        cfg.fill(drop_opt, "drop_partial_batch", drop_partial_batch);
        cfg.fill(agg_opt, "aggregation", aggregation);
        cfg.fill(csv_opt, "out_csv", out_csv);
        cfg.fill(json_opt, "out_json", out_json);
        cfg.fill(dec_opt, "decisions_csv", decisions_csv);
        if (!cfg.has(trace_opt, "trace")) throw ValidationError("simulate: --trace is required");
        if (!cfg.has(profile_opt, "profile")) {
            throw ValidationError("simulate: --profile is required");
        }
        if (!cfg.has(p_tar_opt, "p_tar")) throw ValidationError("simulate: --p-tar is required");
        if (!cfg.has(policy_args.temps_opt, "temps") &&
            !cfg.has(policy_args.calib_opt, "calib") && !policy_args.calibrate) {
            throw ValidationError(
                "simulate: provide temperatures via --temps, --calib, or --calibrate");
        }

        const eesim::TraceDataset dataset = eesim::load_trace_file(trace);
        const eesim::LatencyProfile profile =
            eesim::load_profile_file(resolve_config_path(profile_path));
        const eesim::DatasetSplit split =
            eesim::split_dataset(dataset, validation_fraction, seed);

        bool calibrated = false;
        eesim::ExitPolicy policy;
        policy.p_tar = p_tar;
        policy.temperatures = policy_args.resolve(cfg, split.validation, calibrated, false);
        policy.rule = eesim::confidence_rule_from_string(policy_args.rule);
        policy.device_exit_count = policy_args.resolved_device_exits(dataset.num_exits);
        eesim::validate_policy(policy);
        if (profile.device_segment_delays.size() <
            static_cast<std::size_t>(policy.device_exit_count)) {
            throw ValidationError("profile has " +
                                  std::to_string(profile.device_segment_delays.size()) +
                                  " device segments but device_exit_count is " +
                                  std::to_string(policy.device_exit_count));
        }

        std::optional<eesim::DeadlineSpec> deadline;
        if (cfg.has(t_tar_opt, "t_tar")) deadline = eesim::DeadlineSpec{t_tar};

        const std::vector<eesim::ExitDecision> decisions = eesim::run_cascade(split.test, policy);
        const eesim::ExperimentReport report =
            eesim::evaluate(decisions, p_tar, deadline, profile, batch_size, calibrated,
                            drop_partial_batch, eesim::aggregation_from_string(aggregation));

        if (!out_csv.empty()) {
            eesim::write_file_atomic(out_csv, eesim::reports_to_csv({report}));
        }
        if (!out_json.empty()) {
            json doc;
            doc["config"] = {{"trace", trace},
                             {"profile", profile_path},
                             {"p_tar", p_tar},
                             {"t_tar", deadline ? json(deadline->t_tar) : json(nullptr)},
                             {"rule", policy_args.rule},
                             {"device_exits", policy.device_exit_count},
                             {"temperatures", policy.temperatures},
                             {"calibrated", calibrated},
                             {"batch_size", batch_size},
                             {"validation_fraction", validation_fraction},
                             {"seed", seed},
                             {"drop_partial_batch", drop_partial_batch},
                             {"aggregation", aggregation},
                             {"n_validation", split.validation.records.size()},
                             {"n_test", split.test.records.size()}};
            doc["reports"] = json::parse(eesim::reports_to_json({report}));
            eesim::write_file_atomic(out_json, doc.dump(2) + "\n");
        }
        if (!decisions_csv.empty()) {
            eesim::write_file_atomic(decisions_csv, eesim::decisions_to_csv(decisions));
        }

        const auto opt_str = [](const std::optional<double>& v) {
            return v ? eesim::format_g17(*v) : std::string("nan");
        };
        std::cout << "simulate: p_tar=" << eesim::format_g17(p_tar)
                  << " calibrated=" << (calibrated ? 1 : 0) << " batch_size=" << batch_size
                  << " device_prob=" << eesim::format_g17(report.device_prob)
                  << " device_acc=" << opt_str(report.device_acc)
                  << " total_acc=" << eesim::format_g17(report.total_acc)
                  << " outage=" << opt_str(report.outage_prob)
                  << " missed=" << opt_str(report.missed_prob) << "\n";
    }
};

// --------------------------------------------------------------- sweep ----

struct SweepCmd {
    std::string config_path;
    std::string trace;
    std::string profile_path;
    std::string p_tar_grid;
    std::string t_tar_grid;
    PolicyArgs policy_args;
    std::size_t batch_size = 512;
    double validation_fraction = 0.3;
    std::uint64_t seed = 0;
    bool drop_partial_batch = false;
    std::string aggregation = "mean";
    std::string out_csv;
    std::string out_json;

    CLI::Option* trace_opt = nullptr;
    CLI::Option* profile_opt = nullptr;
    CLI::Option* p_grid_opt = nullptr;
    CLI::Option* t_grid_opt = nullptr;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* vf_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* drop_opt = nullptr;
    CLI::Option* agg_opt = nullptr;
    CLI::Option* csv_opt = nullptr;
    CLI::Option* json_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags win)");
        trace_opt = cmd->add_option("--trace", trace, "Input trace (JSONL)");
        profile_opt = cmd->add_option("--profile", profile_path, "Latency profile (JSON)");
        p_grid_opt = cmd->add_option("--p-tar-grid", p_tar_grid, "p_tar values p1,p2,...");
        t_grid_opt = cmd->add_option("--t-tar-grid", t_tar_grid, "t_tar values t1,t2,...");
        policy_args.attach(cmd);
        batch_opt = cmd->add_option("--batch-size", batch_size, "Batch size (default 512)");
        vf_opt = cmd->add_option("--validation-fraction", validation_fraction,
                                 "Validation fraction (default 0.3)");
        seed_opt = cmd->add_option("--seed", seed, "Top-level seed (default 0)");
        drop_opt = cmd->add_flag("--drop-partial-batch", drop_partial_batch,
                                 "Drop the final short batch from batch-level metrics");
        agg_opt = cmd->add_option("--aggregation", aggregation, "Batch time: mean | sum");
        csv_opt = cmd->add_option("--out-csv", out_csv, "Sweep CSV path");
        json_opt = cmd->add_option("--out-json", out_json, "Sweep JSON path (per-batch detail)");
    }

    void run() {
        const ConfigSource cfg{load_config(config_path)};
        cfg.fill(trace_opt, "trace", trace);
        cfg.fill(profile_opt, "profile", profile_path);
        policy_args.fill(cfg);
        cfg.fill(batch_opt, "batch_size", batch_size);
        cfg.fill(vf_opt, "validation_fraction", validation_fraction);
        cfg.fill(seed_opt, "seed", seed);
        cfg.fill(drop_opt, "drop_partial_batch", drop_partial_batch);
        cfg.fill(agg_opt, "aggregation", aggregation);
        cfg.fill(csv_opt, "out_csv", out_csv);
        cfg.fill(json_opt, "out_json", out_json);
        if (!cfg.has(trace_opt, "trace")) throw ValidationError("sweep: --trace is required");
        if (!cfg.has(profile_opt, "profile")) throw ValidationError("sweep: --profile is required");
        if (!cfg.has(p_grid_opt, "p_tar_grid")) {
            throw ValidationError("sweep: --p-tar-grid is required");
        }
        if (!cfg.has(csv_opt, "out_csv")) throw ValidationError("sweep: --out-csv is required");

        std::vector<double> p_grid;
        if (p_grid_opt->count() > 0) {
            p_grid = parse_double_list(p_tar_grid, "p_tar_grid");
        } else {
            p_grid = cfg.j["p_tar_grid"].get<std::vector<double>>();
        }
        std::vector<double> t_grid;
        if (t_grid_opt->count() > 0) {
            t_grid = parse_double_list(t_tar_grid, "t_tar_grid");
        } else if (cfg.j.is_object() && cfg.j.contains("t_tar_grid")) {
            t_grid = cfg.j["t_tar_grid"].get<std::vector<double>>();
        }

        const eesim::TraceDataset dataset = eesim::load_trace_file(trace);
        const eesim::LatencyProfile profile =
            eesim::load_profile_file(resolve_config_path(profile_path));
        const eesim::DatasetSplit split =
            eesim::split_dataset(dataset, validation_fraction, seed);

        bool calibrated = false;
        eesim::ExitPolicy calibrated_policy;
        calibrated_policy.temperatures = policy_args.resolve(cfg, split.validation, calibrated,
                                                             /*require_calibration=*/true);
        calibrated_policy.rule = eesim::confidence_rule_from_string(policy_args.rule);
        calibrated_policy.device_exit_count = policy_args.resolved_device_exits(dataset.num_exits);
        calibrated_policy.p_tar = p_grid.front();
        eesim::validate_policy(calibrated_policy);
        if (profile.device_segment_delays.size() <
            static_cast<std::size_t>(calibrated_policy.device_exit_count)) {
            throw ValidationError("profile segments do not cover device_exit_count");
        }
        eesim::ExitPolicy conventional_policy = calibrated_policy;
        conventional_policy.temperatures.assign(static_cast<std::size_t>(dataset.num_exits), 1.0);

        const eesim::BatchAggregation agg = eesim::aggregation_from_string(aggregation);
        const std::vector<eesim::ExperimentReport> conventional =
            eesim::sweep(split.test, conventional_policy, p_grid, t_grid, profile, batch_size,
                         /*calibrated=*/false, drop_partial_batch, agg);
        const std::vector<eesim::ExperimentReport> fitted =
            eesim::sweep(split.test, calibrated_policy, p_grid, t_grid, profile, batch_size,
                         /*calibrated=*/true, drop_partial_batch, agg);

        // one row per (p_tar, t_tar, calibrated) triple, calibrated innermost
        std::vector<eesim::ExperimentReport> interleaved;
        interleaved.reserve(conventional.size() * 2);
        for (std::size_t i = 0; i < conventional.size(); ++i) {
            interleaved.push_back(conventional[i]);
            interleaved.push_back(fitted[i]);
        }
        eesim::write_file_atomic(out_csv, eesim::reports_to_csv(interleaved));
        if (!out_json.empty()) {
            eesim::write_file_atomic(out_json, eesim::reports_to_json(interleaved));
        }
        std::cout << "sweep: " << interleaved.size() << " rows -> " << out_csv << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eesim: early-exit inference offloading simulator"};
    app.require_subcommand(1);

    GenCmd gen;
    gen.attach(app.add_subcommand("gen", "Generate a synthetic logit trace"));
    CalibrateCmd calibrate;
    calibrate.attach(app.add_subcommand("calibrate", "Fit per-exit temperatures"));
    SimulateCmd simulate;
    simulate.attach(app.add_subcommand("simulate", "Run the cascade and report metrics"));
    SweepCmd sweep;
    sweep.attach(app.add_subcommand("sweep", "Grid sweep over p_tar / t_tar, both policies"));

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("gen")) gen.run();
        if (app.got_subcommand("calibrate")) calibrate.run();
        if (app.got_subcommand("simulate")) simulate.run();
        if (app.got_subcommand("sweep")) sweep.run();
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
