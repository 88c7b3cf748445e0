#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"

using namespace wavelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wavelab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("lab") {
    TEST_CASE("every scenario is registered with defaults") {
        const char* names[] = {"spectrum-table",          "lambdaQ-zeros",   "nodal-domains",  "zero-energy",
                               "ground-dichotomy",        "excited-blowup",  "negative-time",
                               "stationary-inequalities", "manifold-scaling", "channel-bounds", "convergence-suite"};
        CHECK(scenarios().size() == 11);
        for (const char* n : names) CHECK(find_scenario(n).defaults.is_object());
        CHECK_THROWS_AS(find_scenario("nope"), Error);
    }

    TEST_CASE("parameter validation") {
        const auto& s = find_scenario("ground-dichotomy");
        const auto p = merge_params(s, {{"alpha", -0.1}});
        CHECK(p.at("alpha").get<double>() == -0.1);
        CHECK(p.at("t_end").get<double>() == 60.0);
        CHECK_THROWS_AS(merge_params(s, {{"bogus", 1}}), Error);
        CHECK_THROWS_AS(merge_params(s, {{"alpha", "big"}}), Error);
        CHECK_THROWS_AS(merge_params(s, {{"n", 1.5}}), Error);
    }

    TEST_CASE("override parsing") {
        const auto o = parse_overrides({"alpha=-1e-2", "n=4097", "quick=true", "name=x", "deltas=0.1,0.01"});
        CHECK(o.at("alpha").get<double>() == -1e-2);
        CHECK(o.at("n").is_number_integer());
        CHECK(o.at("quick").get<bool>());
        CHECK(o.at("name").get<std::string>() == "x");
        CHECK(o.at("deltas").size() == 2);
        CHECK_THROWS_AS(parse_overrides({"novalue"}), Error);
    }

    TEST_CASE("spectrum-table with Q = 0 reports no eigenvalues") {
        const auto r = run_scenario("spectrum-table", {{"k_max", 0}, {"zero_potential", true}});
        CHECK_FALSE(r.failed);
        CHECK(r.matched);
        CHECK(r.outcome.at("counts") == json::array({0}));
        CHECK(exit_code(r) == 0);
    }

    TEST_CASE("records round-trip, replay and refuse other versions") {
        const auto dir = scratch_dir("records");
        const RunOptions opt{dir};
        const auto r = run_scenario("spectrum-table", {{"k_max", 1}}, opt);
        REQUIRE(r.matched);
        CHECK(r.outcome.at("counts") == json::array({1, 2}));
        fs::path rec;
        for (const auto& a : r.artifacts)
            if (fs::path(a).filename() == "record.json") rec = a;
        REQUIRE(fs::exists(rec));
        const auto csv = fs::path(rec).parent_path() / "spectrum.csv";
        const std::string first = slurp(csv);
        const auto loaded = load_record(rec);
        CHECK(loaded.params == r.params);
        const auto again = replay(loaded, opt);
        CHECK(again.outcome.at("counts") == r.outcome.at("counts"));
        CHECK(slurp(csv) == first);  // byte-identical rerun
        json j = to_json(loaded);
        j["format_version"] = kFormatVersion + 1;
        CHECK_THROWS_AS(record_from_json(j), Error);
        fs::remove_all(dir);
    }

    TEST_CASE("sweeps keep input order and capture failures") {
        CHECK(sweep("spectrum-table", {}, 2).empty());
        const std::vector<json> pts = {{{"k_max", 1}}, {{"bogus", 1}}, {{"k_max", 0}}};
        const auto rs = sweep("spectrum-table", pts, 2);
        REQUIRE(rs.size() == 3);
        CHECK(rs[0].outcome.at("counts") == json::array({1, 2}));
        CHECK(rs[1].failed);
        CHECK(rs[2].outcome.at("counts") == json::array({1}));
        CHECK(exit_code(rs) == 1);
    }

    TEST_CASE("ground-dichotomy sweep is sign consistent") {
        std::vector<json> pts;
        for (double a : {1e-1, -1e-1, 1e-2, -1e-2}) pts.push_back({{"alpha", a}, {"t_end", 40.0}, {"n", 8193}});
        const auto rs = sweep("ground-dichotomy", pts, 1);
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const bool up = pts[i].at("alpha").get<double>() > 0;
            CHECK(rs[i].outcome.at("kind").get<std::string>() == (up ? "PositiveBlowUp" : "ScattersToZero"));
            CHECK(rs[i].matched);
        }
    }

    TEST_CASE("exit codes") {
        RunRecord ok, bad, err;
        ok.matched = true;
        err.failed = true;
        CHECK(exit_code(ok) == 0);
        CHECK(exit_code(bad) == 2);
        CHECK(exit_code(err) == 1);
        CHECK(exit_code(std::vector<RunRecord>{ok, bad}) == 2);
    }

    TEST_CASE("csv and gnuplot output") {
        const Table t{"series", {"t", "x"}, {{0.1, 1.0 / 3.0}}};
        CHECK(to_csv(t) == "t,x\n0.10000000000000001,0.33333333333333331\n");
        const Plot p{"fig", "series", "t", "x", {2}, true};
        const auto gp = to_gnuplot(p);
        CHECK(gp.find("'series.csv' using 1:2") != std::string::npos);
        CHECK(gp.find("set logscale y") != std::string::npos);
        const auto dir = scratch_dir("atomic");
        write_atomic(dir / "a" / "b.txt", "hello");
        CHECK(slurp(dir / "a" / "b.txt") == "hello");
        write_atomic(dir / "a" / "b.txt", "again");
        CHECK(slurp(dir / "a" / "b.txt") == "again");
        CHECK(std::distance(fs::directory_iterator(dir / "a"), fs::directory_iterator()) == 1);
        fs::remove_all(dir);
    }

    TEST_CASE("evolve configs from TOML") {
        const auto r = parse_evolve_config(R"(
k = 1
expected = "NegativeBlowUp"
[grid]
r_max = 60.0
[evolve]
t_end = 50.0
boundary = "sommerfeld"
[perturbation]
alpha = -0.01
)");
        CHECK(r.k == 1);
        CHECK(r.alpha == -0.01);
        CHECK(r.boundary == OuterBoundary::Sommerfeld);
        CHECK(r.expected == "NegativeBlowUp");
        CHECK_THROWS_AS(parse_evolve_config("m = 5"), Error);
        CHECK_THROWS_AS(parse_evolve_config("[evolve]\ndt_factor = 1.5"), Error);
        CHECK_THROWS_AS(parse_evolve_config("[evolve]\nboundary = \"open\""), Error);
        CHECK_THROWS_AS(parse_evolve_config("k = ["), Error);
    }

    TEST_CASE("scenarios that finish quickly") {
        CHECK(run_scenario("nodal-domains", {{"k_max", 1}}).matched);
        CHECK(run_scenario("zero-energy", {{"k_max", 1}}).matched);
        CHECK(run_scenario("stationary-inequalities", {{"k_max", 1}}).matched);
        CHECK(run_scenario("lambdaQ-zeros", {{"k_max", 2}}).matched);
        const auto ch = run_scenario("channel-bounds", {{"c_frozen", 201.0}});
        CHECK(ch.matched);
        const auto nt = run_scenario("negative-time", json::object());
        CHECK(nt.outcome.at("kind").get<std::string>() == "PositiveBlowUp");
    }

    TEST_CASE("default output root honours WAVELAB_OUT") {
        ::setenv("WAVELAB_OUT", "/tmp/somewhere", 1);
        CHECK(default_out_root() == fs::path("/tmp/somewhere"));
        ::unsetenv("WAVELAB_OUT");
        CHECK(default_out_root() == fs::path("wavelab_out"));
    }
}
