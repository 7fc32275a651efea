#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "eesim/format.hpp"
#include "eesim/latency.hpp"
#include "eesim/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin_path() {
    const char* b = std::getenv("EESIM_BIN");
    REQUIRE_MESSAGE(b != nullptr, "EESIM_BIN must point at the eesim binary");
    return b;
}

int run_cli(const std::string& args) {
    const std::string cmd = bin_path() + " " + args + " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("eesim_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n' ? 1 : 0;
    return n;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::vector<std::string> cells;
        std::size_t cell = pos;
        while (cell <= eol) {
            std::size_t comma = text.find(',', cell);
            if (comma == std::string::npos || comma > eol) comma = eol;
            cells.push_back(text.substr(cell, comma - cell));
            cell = comma + 1;
        }
        rows.push_back(cells);
        pos = eol + 1;
    }
    return rows;
}

// cascade demo scenario shared by the pipeline-level cases: a strongly
// miscalibrated first branch (s=3) and an accurate final branch
struct DemoFiles {
    fs::path dir;
    std::string trace;
    std::string profile;
    std::string calib;
};

const DemoFiles& demo() {
    static const DemoFiles files = [] {
        DemoFiles f;
        f.dir = fresh_dir("demo");
        f.trace = (f.dir / "trace.jsonl").string();
        f.profile = (f.dir / "profile.json").string();
        f.calib = (f.dir / "calib.json").string();
        REQUIRE(run_cli("gen --mode cascade --k 10 --n 20000 "
                        "--branches 3.0:1.6:3.0,4.0:1.0:1.0 --seed 42 -o " +
                        f.trace) == 0);
        eesim::LatencyProfile profile;
        profile.device_segment_delays = {0.010};
        profile.partition_output_bytes = 57600;
        profile.uplink_rate_bps = 18.8e6;
        profile.cloud_delay_s = 0.002;
        eesim::write_file_atomic(f.profile, eesim::profile_to_json(profile));
        REQUIRE(run_cli("calibrate --trace " + f.trace + " -o " + f.calib) == 0);
        return f;
    }();
    return files;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes a header plus one line per sample, reproducibly") {
    const fs::path dir = fresh_dir("gen");
    const std::string a = (dir / "a.jsonl").string();
    const std::string b = (dir / "b.jsonl").string();
    const std::string flags = "gen --mode oracle --k 10 --n 10000 --s 2.5 --seed 7 -o ";
    CHECK(run_cli(flags + a) == 0);
    CHECK(run_cli(flags + b) == 0);
    const std::string first = eesim::read_file(a);
    CHECK(count_lines(first) == 10001);
    CHECK(first == eesim::read_file(b));
}

TEST_CASE("usage and config errors exit with status 1") {
    const fs::path dir = fresh_dir("usage");
    const std::string out = (dir / "t.jsonl").string();
    CHECK(run_cli("gen --mode oracle --k 10 --n 100 --s -1 -o " + out) == 1);
    CHECK(run_cli("gen --mode fancy --n 100 -o " + out) == 1);
    CHECK(run_cli("gen --n 100 -o " + out) == 1);         // missing mode
    CHECK(run_cli("gen --bogus-flag 3") == 1);            // parser error
    CHECK(run_cli("") == 1);                              // subcommand required
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("gen --help") == 0);
}

TEST_CASE("data errors exit with status 2") {
    const fs::path dir = fresh_dir("data");
    const std::string calib = (dir / "c.json").string();
    CHECK(run_cli("calibrate --trace " + (dir / "missing.jsonl").string() + " -o " + calib) == 2);
    const std::string garbled = (dir / "garbled.jsonl").string();
    eesim::write_file_atomic(garbled, "{\"k\":2,\"b\":1,\"meta\":{}}\nnot json\n");
    CHECK(run_cli("calibrate --trace " + garbled + " -o " + calib) == 2);
}

TEST_CASE("calibrate recovers the oracle scale") {
    const fs::path dir = fresh_dir("calibrate");
    const std::string trace = (dir / "t.jsonl").string();
    const std::string calib = (dir / "c.json").string();
    REQUIRE(run_cli("gen --mode oracle --k 10 --n 20000 --alpha 0.5 --s 2.5 --seed 7 -o " +
                    trace) == 0);
    REQUIRE(run_cli("calibrate --trace " + trace + " -o " + calib) == 0);
    const json doc = json::parse(eesim::read_file(calib));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    const double t = doc[0]["t"].get<double>();
    CHECK(t > 2.375);
    CHECK(t < 2.625);
    CHECK(doc[0]["n"].get<std::size_t>() == 6000);  // round(0.3 * 20000)
    CHECK(doc[0]["nll_after"].get<double>() <= doc[0]["nll_before"].get<double>());
}

TEST_CASE("calibrate finds T near 1 when every branch scale is 1") {
    const fs::path dir = fresh_dir("calibrate1");
    const std::string trace = (dir / "t.jsonl").string();
    const std::string calib = (dir / "c.json").string();
    // T* = s*sigma^2/b = 1 for both branches
    REQUIRE(run_cli("gen --mode cascade --k 10 --n 20000 --branches 2.25:1.5:1,1:1:1 --seed 3 "
                    "-o " +
                    trace) == 0);
    REQUIRE(run_cli("calibrate --trace " + trace + " -o " + calib) == 0);
    const json doc = json::parse(eesim::read_file(calib));
    REQUIRE(doc.size() == 2);
    for (const json& entry : doc) {
        CHECK(entry["t"].get<double>() >= 0.8);
        CHECK(entry["t"].get<double>() <= 1.25);
    }
}

TEST_CASE("branch-restricted calibration still fits every exit") {
    const fs::path dir = fresh_dir("restricted");
    const std::string calib = (dir / "c.json").string();
    REQUIRE(run_cli("calibrate --trace " + demo().trace + " --branch-restricted --p-tar 0.85 "
                    "-o " +
                    calib) == 0);
    const json doc = json::parse(eesim::read_file(calib));
    REQUIRE(doc.size() == 2);
    // exit 2 is fitted on the samples exit 1 leaves behind: fewer than n_val
    CHECK(doc[1]["n"].get<std::size_t>() < doc[0]["n"].get<std::size_t>());
    CHECK(doc[0]["n"].get<std::size_t>() == 6000);
}

TEST_CASE("simulate produces comparable conventional and calibrated rows") {
    const fs::path dir = fresh_dir("simulate");
    const std::string conv = (dir / "conv.csv").string();
    const std::string cal = (dir / "cal.csv").string();
    const std::string shared = " --profile " + demo().profile + " --p-tar 0.85 --trace ";
    REQUIRE(run_cli("simulate --temps 1,1" + shared + demo().trace + " --out-csv " + conv) == 0);
    REQUIRE(run_cli("simulate --calib " + demo().calib + shared + demo().trace + " --out-csv " +
                    cal) == 0);
    const auto conv_rows = csv_rows(eesim::read_file(conv));
    const auto cal_rows = csv_rows(eesim::read_file(cal));
    REQUIRE(conv_rows.size() == 2);
    REQUIRE(cal_rows.size() == 2);
    CHECK(conv_rows[1][2] == "0");  // calibrated flag
    CHECK(cal_rows[1][2] == "1");
    const double conv_outage = std::stod(conv_rows[1][6]);
    const double cal_outage = std::stod(cal_rows[1][6]);
    CHECK(cal_outage <= conv_outage);
}

TEST_CASE("simulate records the default batch size in the JSON report") {
    const fs::path dir = fresh_dir("meta");
    const std::string out = (dir / "report.json").string();
    REQUIRE(run_cli("simulate --trace " + demo().trace + " --profile " + demo().profile +
                    " --p-tar 0.85 --temps 1,1 --out-json " + out) == 0);
    const json doc = json::parse(eesim::read_file(out));
    CHECK(doc["config"]["batch_size"].get<std::size_t>() == 512);
    CHECK(doc["config"]["validation_fraction"].get<double>() == 0.3);
    CHECK(doc["config"]["n_test"].get<std::size_t>() == 14000);
    REQUIRE(doc["reports"].is_array());
    CHECK(doc["reports"][0]["per_batch"].size() == 28);  // ceil(14000 / 512)
}

TEST_CASE("simulate needs a temperature source and rejects conflicts") {
    const std::string shared =
        "simulate --trace " + demo().trace + " --profile " + demo().profile + " --p-tar 0.85";
    CHECK(run_cli(shared) == 1);
    CHECK(run_cli(shared + " --temps 1,1 --calib " + demo().calib) == 1);
    CHECK(run_cli(shared + " --temps 1,1 --t-tar -1") == 1);
    CHECK(run_cli(shared + " --temps 1,1,1") == 1);  // three temps, two exits
}

TEST_CASE("decisions CSV has one row per test sample") {
    const fs::path dir = fresh_dir("decisions");
    const std::string out = (dir / "decisions.csv").string();
    REQUIRE(run_cli("simulate --trace " + demo().trace + " --profile " + demo().profile +
                    " --p-tar 0.85 --temps 1,1 --decisions-csv " + out) == 0);
    const std::string text = eesim::read_file(out);
    CHECK(count_lines(text) == 14001);
    CHECK(text.rfind("sample_id,exit_index,on_device,predicted,label,confidence,correct\n", 0) ==
          0);
}

TEST_CASE("sweep enumerates both policies over the grid deterministically") {
    const fs::path dir = fresh_dir("sweep");
    const std::string a = (dir / "a.csv").string();
    const std::string b = (dir / "b.csv").string();
    const std::string cmd = "sweep --trace " + demo().trace + " --profile " + demo().profile +
                            " --calib " + demo().calib +
                            " --p-tar-grid 0.75,0.825,0.85 --t-tar-grid 0.01,0.02,0.03 "
                            "--out-csv ";
    REQUIRE(run_cli(cmd + a) == 0);
    REQUIRE(run_cli(cmd + b) == 0);
    const std::string text = eesim::read_file(a);
    CHECK(text == eesim::read_file(b));  // byte-identical rerun

    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 1 + 3 * 3 * 2);
    // row order: p_tar outer, t_tar inner, conventional before calibrated
    CHECK(rows[1][0] == rows[2][0]);
    CHECK(rows[1][1] == rows[2][1]);
    CHECK(rows[1][2] == "0");
    CHECK(rows[2][2] == "1");
    // missed_prob is non-increasing in t_tar within each (p_tar, policy) group
    for (std::size_t g = 1; g + 4 < rows.size(); g += 6) {
        CHECK(std::stod(rows[g + 2][8]) <= std::stod(rows[g][8]));
        CHECK(std::stod(rows[g + 4][8]) <= std::stod(rows[g + 2][8]));
        CHECK(std::stod(rows[g + 3][8]) <= std::stod(rows[g + 1][8]));
        CHECK(std::stod(rows[g + 5][8]) <= std::stod(rows[g + 3][8]));
    }
}

TEST_CASE("single-point sweep rows equal the simulate rows") {
    const fs::path dir = fresh_dir("sweep1");
    const std::string sweep_csv = (dir / "sweep.csv").string();
    const std::string conv_csv = (dir / "conv.csv").string();
    const std::string cal_csv = (dir / "cal.csv").string();
    REQUIRE(run_cli("sweep --trace " + demo().trace + " --profile " + demo().profile +
                    " --calib " + demo().calib +
                    " --p-tar-grid 0.85 --t-tar-grid 0.02 --out-csv " + sweep_csv) == 0);
    const std::string shared = " --profile " + demo().profile +
                               " --p-tar 0.85 --t-tar 0.02 --trace " + demo().trace;
    REQUIRE(run_cli("simulate --temps 1,1" + shared + " --out-csv " + conv_csv) == 0);
    REQUIRE(run_cli("simulate --calib " + demo().calib + shared + " --out-csv " + cal_csv) == 0);
    const auto sweep_rows = csv_rows(eesim::read_file(sweep_csv));
    REQUIRE(sweep_rows.size() == 3);
    CHECK(sweep_rows[1] == csv_rows(eesim::read_file(conv_csv))[1]);
    CHECK(sweep_rows[2] == csv_rows(eesim::read_file(cal_csv))[1]);
}

TEST_CASE("config files supply values and flags win") {
    const fs::path dir = fresh_dir("config");
    const std::string cfg = (dir / "gen.json").string();
    const std::string a = (dir / "a.jsonl").string();
    const std::string b = (dir / "b.jsonl").string();
    json config = {{"mode", "oracle"}, {"k", 5}, {"n", 100},
                   {"s", 1.0},         {"seed", 1}, {"out", a}};
    eesim::write_file_atomic(cfg, config.dump() + "\n");
    CHECK(run_cli("gen --config " + cfg) == 0);
    CHECK(count_lines(eesim::read_file(a)) == 101);
    CHECK(run_cli("gen --config " + cfg + " --n 50 -o " + b) == 0);
    CHECK(count_lines(eesim::read_file(b)) == 51);
    CHECK(run_cli("gen --config " + (dir / "missing.json").string()) == 2);
}

TEST_CASE("EESIM_CONFIG_DIR resolves relative profile paths") {
    const fs::path dir = fresh_dir("envdir");
    eesim::LatencyProfile profile;
    profile.device_segment_delays = {0.010};
    profile.partition_output_bytes = 57600;
    profile.uplink_rate_bps = 18.8e6;
    profile.cloud_delay_s = 0.002;
    eesim::write_file_atomic((dir / "linkprofile.json").string(),
                             eesim::profile_to_json(profile));
    REQUIRE(setenv("EESIM_CONFIG_DIR", dir.c_str(), 1) == 0);
    const int rc = run_cli("simulate --trace " + demo().trace +
                           " --profile linkprofile.json --p-tar 0.85 --temps 1,1");
    REQUIRE(unsetenv("EESIM_CONFIG_DIR") == 0);
    CHECK(rc == 0);
}

TEST_CASE("simulate metrics never depend on validation labels") {
    const fs::path dir = fresh_dir("valsep");
    const std::string corrupted = (dir / "corrupted.jsonl").string();
    const std::string ref_csv = (dir / "ref.csv").string();
    const std::string cor_csv = (dir / "cor.csv").string();

    // rewrite every validation-split label; the test split is untouched
    eesim::TraceDataset dataset = eesim::load_trace_file(demo().trace);
    const eesim::DatasetSplit split = eesim::split_dataset(dataset, 0.3, 0);
    std::set<std::int64_t> validation_ids;
    for (const auto& rec : split.validation.records) validation_ids.insert(rec.sample_id);
    for (auto& rec : dataset.records) {
        if (validation_ids.count(rec.sample_id) > 0) {
            rec.label = (rec.label + 1) % dataset.num_classes;
        }
    }
    eesim::save_trace_file(dataset, corrupted);

    const std::string shared = " --profile " + demo().profile +
                               " --p-tar 0.85 --t-tar 0.03 --temps 1,1 --seed 0 --out-csv ";
    REQUIRE(run_cli("simulate --trace " + demo().trace + shared + ref_csv) == 0);
    REQUIRE(run_cli("simulate --trace " + corrupted + shared + cor_csv) == 0);
    CHECK(eesim::read_file(ref_csv) == eesim::read_file(cor_csv));
}

}  // TEST_SUITE
