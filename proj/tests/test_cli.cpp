#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "ppkit/cli.hpp"
#include "ppkit/csv.hpp"
#include "ppkit/export.hpp"
#include "ppkit/ingestion.hpp"
#include "ppkit/intensity.hpp"
#include "ppkit/manifest.hpp"
#include "ppkit/presets.hpp"

using namespace ppkit;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kDemo = std::string(PPKIT_SOURCE_DIR) + "/data/linkedin_demo.csv";

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "ppkit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string path_in(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(oracle::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string fit_demo(const fs::path& dir, const std::string& preset, const std::string& name,
                     std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"fit", kDemo, "--preset", preset, "--epochs", "1", "-o", path_in(dir, name)};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    return path_in(dir, name);
}

std::string save_model(const HawkesModel& m, const ModelDims& dims, std::vector<std::string> names,
                       const std::string& path) {
    save_manifest(make_manifest(m, dims, std::move(names), Provenance{}), path);
    return path;
}

HawkesModel basic_model(std::size_t C, ModelDims& dims) {
    Composition comp;
    comp.kernels = KernelBank::exponential(1.0);
    dims.num_types = C;
    dims.num_sequences = 1;
    return HawkesModel(comp, dims);
}

}  // namespace

TEST_CASE("encoding of parameter arrays") {
    CHECK(encode_doubles(std::vector<double>{1.0}) == "AAAAAAAA8D8=");
    CHECK(encode_doubles(std::vector<double>{}).empty());
    const std::vector<double> odd{0.0,  -0.0, 1e-310, std::numeric_limits<double>::infinity(),
                                  -2.5, std::numeric_limits<double>::max(), std::nan(""), 0.1};
    CHECK(same_bits(decode_doubles(encode_doubles(odd)), odd));
    CHECK_THROWS(decode_doubles("AAAA"));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest round trip is bit exact for every preset") {
    const auto db = load_sequences_csv(kDemo, ColumnMapping{});
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const auto preset = make_preset(name, time_scale(db));
        auto dims = ModelDims::from_database(db);
        HawkesModel m(preset.composition, dims);
        m.initialize(3);
        Provenance prov;
        prov.seed = 3;
        prov.preset = name;
        const auto text = manifest_to_json(make_manifest(m, dims, db.idx2type, prov));
        const auto back = manifest_from_json(text);
        CHECK(back.provenance.preset == name);
        CHECK(back.type_names == db.idx2type);
        auto m2 = build_model(back);
        const auto a = m.parameters();
        const auto b = m2.parameters();
        REQUIRE(a.size() == b.size());
        for (std::size_t p = 0; p < a.size(); ++p) {
            CHECK(a[p]->name == b[p]->name);
            CHECK(a[p]->shape == b[p]->shape);
            CHECK(a[p]->trainable == b[p]->trainable);
            CHECK(same_bits(a[p]->values, b[p]->values));
        }
        CHECK(manifest_to_json(make_manifest(m2, dims, db.idx2type, prov)) == text);
    }
}

TEST_CASE("manifest errors") {
    ModelDims dims;
    auto m = basic_model(2, dims);
    const auto text = manifest_to_json(make_manifest(m, dims, {"a", "b"}, Provenance{}));

    CHECK_THROWS_AS(manifest_from_json(text.substr(0, text.size() / 2)), ManifestError);

    auto future = json::parse(text);
    future["format_version"] = 7;
    CHECK_THROWS_WITH_AS(manifest_from_json(future.dump()), doctest::Contains("7"), ManifestError);
    try {
        manifest_from_json(future.dump());
    } catch (const ManifestError& e) {
        CHECK(std::string(e.what()).find(std::to_string(kManifestVersion)) != std::string::npos);
    }

    auto bad = manifest_from_json(text);
    for (auto& p : bad.parameters) {
        if (p.name == "impact.alpha") p.values.pop_back();
    }
    CHECK_THROWS_WITH_AS(build_model(bad), doctest::Contains("impact.alpha"), ManifestError);
}

TEST_CASE("fit on the demo corpus writes a manifest and a report") {
    const auto dir = oracle::scratch_dir("cli_fit");
    const auto manifest = fit_demo(dir, "linear-hawkes-exp", "m.json", {"--epochs", "3"});
    REQUIRE(fs::exists(manifest));
    const auto report = path_in(dir, "m.report.jsonl");
    REQUIRE(fs::exists(report));
    std::istringstream lines(oracle::read_file(report));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = json::parse(line);
        CHECK(j.at("epoch").get<std::size_t>() == ++n);
        CHECK(std::isfinite(j.at("train_loss").get<double>()));
    }
    CHECK(n == 3);
    const auto loaded = load_manifest(manifest);
    CHECK(loaded.provenance.preset == "linear-hawkes-exp");
    CHECK(loaded.provenance.config_hash.size() == 64);
    CHECK(loaded.type_names.size() == 6);
}

TEST_CASE("fit is deterministic given a seed") {
    const auto dir = oracle::scratch_dir("cli_determinism");
    const auto a = load_manifest(fit_demo(dir, "factorized-pp", "a.json", {"--seed", "5", "--epochs", "2"}));
    const auto b = load_manifest(fit_demo(dir, "factorized-pp", "b.json", {"--seed", "5", "--epochs", "2"}));
    const auto c = load_manifest(fit_demo(dir, "factorized-pp", "c.json", {"--seed", "6", "--epochs", "2"}));
    REQUIRE(a.parameters.size() == b.parameters.size());
    bool any_diff = false;
    for (std::size_t p = 0; p < a.parameters.size(); ++p) {
        CHECK(same_bits(a.parameters[p].values, b.parameters[p].values));
        if (!same_bits(a.parameters[p].values, c.parameters[p].values)) any_diff = true;
    }
    CHECK(any_diff);
    CHECK(a.provenance.config_hash == b.provenance.config_hash);
    CHECK(a.provenance.config_hash != c.provenance.config_hash);
}

TEST_CASE("usage errors exit with code 2 and a json line") {
    const auto r = run({"fit", kDemo, "--preset", "no-such-model"});
    CHECK(r.code == kExitUsage);
    const auto j = json::parse(r.err);
    CHECK(j.at("exit_code") == 2);
    const auto msg = j.at("error").get<std::string>();
    for (const auto& name : preset_names()) CHECK(msg.find(name) != std::string::npos);

    CHECK(run({"fit"}).code == kExitUsage);
    CHECK(run({"fit", kDemo, "--no-such-flag"}).code == kExitUsage);
    CHECK(run({"bogus"}).code == kExitUsage);
    const auto missing = run({"inspect", "/nonexistent/model.json"});
    CHECK(missing.code == kExitFailure);
    CHECK(json::parse(missing.err).contains("error"));
}

TEST_CASE("config file supplies defaults and flags take precedence") {
    const auto dir = oracle::scratch_dir("cli_config");
    const auto cfg = path_in(dir, "cfg.json");
    oracle::write_file(cfg, R"({"epochs": 2, "preset": "linear-hawkes-exp", "lr": 0.02})");
    auto r = run({"fit", kDemo, "--config", cfg, "-o", path_in(dir, "a.json")});
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out).at("epochs") == 2);
    r = run({"fit", kDemo, "--config", cfg, "--epochs", "1", "-o", path_in(dir, "b.json")});
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out).at("epochs") == 1);
    oracle::write_file(cfg, R"({"epochs": 2, "no-such-option": 1})");
    r = run({"fit", kDemo, "--config", cfg, "-o", path_in(dir, "c.json")});
    CHECK(r.code == kExitUsage);
    CHECK(json::parse(r.err).at("error").get<std::string>().find("no-such-option") != std::string::npos);
}

TEST_CASE("output directory comes from the environment") {
    const auto dir = oracle::scratch_dir("cli_env");
    ::setenv("PPKIT_OUTPUT_DIR", dir.c_str(), 1);
    const auto r = run({"fit", kDemo, "--preset", "linear-hawkes-exp", "--epochs", "1"});
    ::unsetenv("PPKIT_OUTPUT_DIR");
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir / "model.json"));
    CHECK(fs::exists(dir / "model.report.jsonl"));
}

TEST_CASE("simulated csv is re-ingestable") {
    const auto dir = oracle::scratch_dir("cli_simulate");
    const auto model = fit_demo(dir, "linear-hawkes-exp", "m.json");
    const auto out = path_in(dir, "sim.csv");
    auto r = run({"simulate", "-m", model, "--sequences", "3", "--t-end", "50", "--seed", "4", "-o", out});
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    const auto db = load_sequences_csv(out, ColumnMapping{});
    CHECK(validate_database(db).empty());
    CHECK(db.num_events() == json::parse(r.out).at("events").get<std::size_t>());
    const auto first = oracle::read_file(out);
    REQUIRE(run({"simulate", "-m", model, "--sequences", "3", "--t-end", "50", "--seed", "4", "-o", out}).code == 0);
    CHECK(oracle::read_file(out) == first);

    const auto cont = path_in(dir, "cont.csv");
    r = run({"simulate", "-m", model, "--data", kDemo, "--t-end", "1e9", "--max-events", "5", "-o", cont});
    CAPTURE(r.err);
    CHECK(r.code == kExitOk);
    r = run({"simulate", "-m", model, "--data", kDemo, "--t-end", "0", "-o", cont});
    CHECK(r.code == kExitIncompatible);
}

TEST_CASE("predict writes one row per sequence and checks the horizon") {
    const auto dir = oracle::scratch_dir("cli_predict");
    const auto model = fit_demo(dir, "linear-hawkes-exp", "m.json");
    const auto db = load_sequences_csv(kDemo, ColumnMapping{});
    double latest = 0.0, earliest = std::numeric_limits<double>::infinity();
    for (const auto& s : db.sequences) {
        latest = std::max(latest, s.t_stop);
        earliest = std::min(earliest, s.t_stop);
    }
    const auto out = path_in(dir, "pred.csv");
    auto r = run({"predict", "-m", model, kDemo, "--t0", csv::format_double(latest), "--t1",
                  csv::format_double(latest * 1.01 + 1), "--replicates", "5", "--with-errors", "-o", out});
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(out);
    REQUIRE(rows.size() == db.sequences.size() + 1);
    CHECK(rows[0].size() == 1 + 2 * db.num_types);

    r = run({"predict", "-m", model, kDemo, "--t0", csv::format_double(earliest), "--t1",
             csv::format_double(latest + 1), "-o", out});
    CHECK(r.code == kExitIncompatible);
    const auto msg = json::parse(r.err).at("error").get<std::string>();
    bool names_sequence = false;
    for (const auto& id : db.idx2seq) names_sequence = names_sequence || msg.find("'" + id + "'") != std::string::npos;
    CHECK(names_sequence);
}

TEST_CASE("validate reproduces the final training evaluation") {
    const auto dir = oracle::scratch_dir("cli_validate");
    const auto model = fit_demo(dir, "linear-hawkes-exp", "m.json",
                                {"--epochs", "2", "--val-fraction", "0", "--no-shuffle"});
    std::istringstream lines(oracle::read_file(path_in(dir, "m.report.jsonl")));
    std::string line, last;
    while (std::getline(lines, line)) last = line;
    const double reported = json::parse(last).at("train_eval_loss").get<double>();
    const auto r = run({"validate", "-m", model, kDemo});
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out).at("average_loss").get<double>() == doctest::Approx(reported).epsilon(1e-12));
}

TEST_CASE("data with unknown event types is incompatible") {
    const auto dir = oracle::scratch_dir("cli_incompatible");
    const auto model = fit_demo(dir, "linear-hawkes-exp", "m.json");
    const auto data = path_in(dir, "other.csv");
    oracle::write_file(data, "id,time,event\nu,1.0,never-seen\nu,2.0,never-seen\n");
    const auto r = run({"validate", "-m", model, data});
    CHECK(r.code == kExitIncompatible);
    CHECK(json::parse(r.err).at("exit_code") == 3);
}

TEST_CASE("export causality matches the infectivity matrix") {
    const auto dir = oracle::scratch_dir("cli_causality");
    ModelDims dims;
    auto m = basic_model(4, dims);
    auto& alpha = m.find_parameter("impact.alpha")->values;
    for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t s = 0; s < 4; ++s) alpha[c * 4 + s] = (c / 2 == s / 2) ? 0.3 + 0.01 * (c + s) : 0.0;
    }
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const auto path = save_model(m, dims, names, path_in(dir, "block.json"));
    const auto csv_path = path_in(dir, "m.csv");
    auto r = run({"export-causality", "-m", path, "--csv", csv_path, "--svg", path_in(dir, "m.svg")});
    CAPTURE(r.err);
    REQUIRE(r.code == kExitOk);
    const auto expect = infectivity_matrix(m);
    const auto rows = read_csv(csv_path);
    REQUIRE(rows.size() == 5);
    CHECK(std::vector<std::string>(rows[0].begin() + 1, rows[0].end()) == names);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(rows[c + 1][0] == names[c]);
        for (std::size_t s = 0; s < 4; ++s) {
            const double v = std::stod(rows[c + 1][s + 1]);
            CHECK(std::abs(v - expect[c * 4 + s]) <= 1e-12);
            if (c / 2 != s / 2) CHECK(v == 0.0);
            else CHECK(v > 0.25);
        }
    }
    CHECK(oracle::read_file(path_in(dir, "m.svg")).find("<svg") != std::string::npos);
}

TEST_CASE("zero impact exports an all-zero matrix and a uniform heatmap") {
    const auto dir = oracle::scratch_dir("cli_zero");
    ModelDims dims;
    auto m = basic_model(3, dims);
    const auto path = save_model(m, dims, {"x", "y", "z"}, path_in(dir, "zero.json"));
    const auto svg_path = path_in(dir, "z.svg");
    const auto r = run({"export-causality", "-m", path, "--csv", path_in(dir, "z.csv"), "--svg", svg_path});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(path_in(dir, "z.csv"));
    for (std::size_t c = 1; c < rows.size(); ++c) {
        for (std::size_t s = 1; s < rows[c].size(); ++s) CHECK(std::stod(rows[c][s]) == 0.0);
    }
    const auto svg = oracle::read_file(svg_path);
    const std::regex cell(R"re(<rect[^>]*fill="(#[0-9a-fA-F]{6})"><title>)re");
    std::set<std::string> fills;
    std::size_t cells = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
        fills.insert((*it)[1]);
        ++cells;
    }
    CHECK(cells == 9);
    CHECK(fills.size() == 1);
}

TEST_CASE("export exogenous and inspect") {
    const auto dir = oracle::scratch_dir("cli_exogenous");
    ModelDims dims;
    auto m = basic_model(2, dims);
    m.find_parameter("exo.mu")->values = {0.25, 0.75};
    const auto path = save_model(m, dims, {"p", "q"}, path_in(dir, "m.json"));
    auto r = run({"export-exogenous", "-m", path, "--csv", path_in(dir, "e.csv"), "--svg", path_in(dir, "e.svg")});
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(path_in(dir, "e.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "p");
    CHECK(std::stod(rows[1][1]) == 0.25);
    CHECK(std::stod(rows[2][1]) == 0.75);
    CHECK(oracle::read_file(path_in(dir, "e.svg")).find("<svg") != std::string::npos);

    r = run({"inspect", path});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("exo.mu") != std::string::npos);
    CHECK(r.out.find("impact.alpha") != std::string::npos);
    CHECK(r.out.find("p q") != std::string::npos);

    auto text = json::parse(oracle::read_file(path));
    text["format_version"] = 99;
    oracle::write_file(path_in(dir, "future.json"), text.dump());
    r = run({"inspect", path_in(dir, "future.json")});
    CHECK(r.code != kExitOk);
    CHECK(json::parse(r.err).at("error").get<std::string>().find("99") != std::string::npos);

    const auto full = oracle::read_file(path);
    oracle::write_file(path_in(dir, "cut.json"), full.substr(0, full.size() / 3));
    r = run({"inspect", path_in(dir, "cut.json")});
    CHECK(r.code != kExitOk);
    CHECK(json::parse(r.err).contains("error"));
}

TEST_CASE("every preset survives the full command chain") {
    const auto dir = oracle::scratch_dir("cli_presets");
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const auto model = fit_demo(dir, name, name + ".json");
        auto r = run({"simulate", "-m", model, "--max-events", "10", "-o", path_in(dir, name + ".sim.csv")});
        CAPTURE(r.err);
        CHECK(r.code == kExitOk);
        r = run({"export-causality", "-m", model, "--csv", path_in(dir, name + ".csv"), "--svg",
                 path_in(dir, name + ".svg")});
        CHECK(r.code == kExitOk);
        r = run({"inspect", model});
        CHECK(r.code == kExitOk);
    }
}
