#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "firelab/expcli.hpp"

using namespace firelab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("firelab_expcli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

RunOutcome run_json(const json& j, const fs::path& dir)
{
    auto c = config_from_json(j);
    return run_config(c, dir);
}

int config_error_code(const json& j)
{
    try {
        config_from_json(j);
    } catch (const Error& e) {
        return exit_code(e.kind());
    }
    return 0;
}

} // namespace

TEST_CASE("graph descriptors")
{
    CHECK(parse_graph("zd(3)").dimension() == 3);
    CHECK(parse_graph("heisenberg").family() == Family::Heisenberg);
    CHECK(parse_graph("grigorchuk").name() == "grigorchuk(012)");
    CHECK(parse_graph("grigorchuk0(12)").name() == "grigorchuk0(12)");
    for (auto bad : {"zd(0)", "zd(17)", "zd", "torus", "grigorchuk(013)", "grigorchuk()"})
        CHECK_THROWS_AS(parse_graph(bad), Error);
}

TEST_CASE("configs round-trip")
{
    std::vector<json> configs = {
        {{"action", "growth"}, {"graph", "zd(2)"}, {"radius", 10}},
        {{"action", "simulate"},
         {"graph", "zd(2)"},
         {"strategy", "greedy"},
         {"budget", {{"kind", "poly_floor"}, {"c", 2}, {"p", 0.5}, {"banking", true}}},
         {"initial", {{"vertices", {"(0,0)", "(1,0)"}}}},
         {"horizon", 12}},
        {{"action", "phi"}, {"graph", "heisenberg"}, {"k_max", 3}, {"mode", "all-subsets"}},
        {{"action", "spherical"}, {"graph", "lamplighter"}, {"n_max", 3}},
        {{"action", "recurrence"},
         {"profile", {{"kind", "exact_table"}, {"k_max", 6}}},
         {"budget", {{"kind", "explicit"}, {"values", {1, 2, 3}}}},
         {"k0", 5}},
        {{"action", "constants"},
         {"profile", {{"kind", "stretched"}, {"c", 1}, {"alpha", 0.5}}},
         {"budget", {{"kind", "stretched_floor"}, {"c", 1}, {"beta", 0.2}}},
         {"beta", 0.3},
         {"perturb", true}},
        {{"action", "threshold"}, {"class", "stretched"}, {"alpha", 0.25}},
        {{"action", "growth"}, {"graph", "grigorchuk0(12)"}, {"signature_level", 12}},
    };
    for (const auto& j : configs) {
        CAPTURE(j.dump());
        auto c = config_from_json(j);
        auto canonical = config_to_json(c);
        auto again = config_to_json(config_from_json(canonical));
        CHECK(canonical == again);
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                for (const auto& [inner, v] : value.items())
                    CHECK(canonical.at(key).at(inner) == v);
            } else {
                CHECK(canonical.at(key) == value);
            }
        }
    }
}

TEST_CASE("config rejections carry their exit codes")
{
    CHECK(config_error_code({{"radius", 5}, {"radus", 5}}) == 2);
    CHECK(config_error_code({{"action", "growth"}, {"horizon", 5}}) == 2); // a simulate key
    CHECK(config_error_code({{"action", "fly"}}) == 2);
    CHECK(config_error_code({{"graph", "zd(2"}}) == 2);
    CHECK(config_error_code({{"radius", "ten"}}) == 2);
    CHECK(config_error_code({{"radius", 1}}) == 2);
    CHECK(config_error_code({{"action", "simulate"}, {"strategy", "teleport"}}) == 2);
    CHECK(config_error_code({{"action", "simulate"}, {"budget", {{"kind", "constant"}, {"c", -1}}}}) == 2);
    CHECK(config_error_code({{"action", "constants"}, {"profile", {{"kind", "cubic"}}}}) == 2);
    CHECK(config_error_code({{"action", "threshold"}, {"class", "hyperbolic"}}) == 2);
    CHECK(config_error_code(json::array()) == 2);
    try {
        config_from_json({{"action", "simulate"}, {"initial", {{"vertices", {"(0,0,0)"}}}}});
        FAIL("expected a malformed vertex");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MalformedVertex);
        CHECK(exit_code(e.kind()) == 2);
    }
    CHECK_THROWS_AS(config_from_json({{"action", "phi"}}, "growth"), Error);

    CHECK(exit_code(ErrorKind::Config) == 2);
    CHECK(exit_code(ErrorKind::MalformedVertex) == 2);
    CHECK(exit_code(ErrorKind::Unsupported) == 2);
    CHECK(exit_code(ErrorKind::Capacity) == 3);
    CHECK(exit_code(ErrorKind::Precondition) == 4);
    CHECK(exit_code(ErrorKind::Infeasible) == 5);
    CHECK(exit_code(ErrorKind::Domain) == 6);
    CHECK(exit_code(ErrorKind::StrategyViolation) == 6);
}

TEST_CASE("run failures write an error record")
{
    struct Case {
        json config;
        int code;
        const char* kind;
    };
    std::vector<Case> cases = {
        {{{"action", "simulate"}, {"strategy", "canopy_cut"}}, 2, "unsupported"},
        {{{"action", "growth"}, {"radius", 30}, {"max_vertices", 100}}, 3, "capacity"},
        {{{"action", "constants"},
          {"profile", {{"kind", "stretched"}, {"c", 1}, {"alpha", 1}}},
          {"budget", {{"kind", "constant"}, {"c", 1}}},
          {"beta", 0.6}},
         4,
         "precondition"},
        {{{"action", "constants"},
          {"profile", {{"kind", "poly"}, {"c", 1}, {"d", 3}}},
          {"budget", {{"kind", "poly_floor"}, {"c", 1}, {"p", 2}}},
          {"N", 2000}},
         5,
         "infeasible"},
        {{{"action", "threshold"}, {"class", "poly"}, {"d", 1}}, 2, "unsupported"},
    };
    int i = 0;
    for (const auto& c : cases) {
        CAPTURE(c.config.dump());
        auto dir = scratch("fail" + std::to_string(i++));
        auto outcome = run_json(c.config, dir);
        CHECK(outcome.exit_code == c.code);
        REQUIRE(fs::exists(dir / "error.json"));
        auto err = read_json(dir / "error.json");
        CHECK(err["error"] == c.kind);
        CHECK(err["exit_code"] == c.code);
        CHECK(fs::exists(dir / "manifest.json"));
        CHECK(fs::exists(dir / "config.json"));
    }
}

TEST_CASE("growth runs")
{
    auto dir = scratch("growth");
    auto outcome = run_json({{"action", "growth"}, {"graph", "zd(2)"}, {"radius", 10}}, dir);
    REQUIRE(outcome.exit_code == 0);
    auto rows = read_csv(dir / "growth.csv");
    REQUIRE(rows.size() == 12);
    CHECK(rows[0] == std::vector<std::string>{"n", "v", "s", "vpp"});
    for (int n = 2; n <= 10; ++n)
        CHECK(rows[n + 1][3] == "4");
    CHECK(rows[11][1] == "221");

    auto gdir = scratch("grig");
    REQUIRE(run_json({{"action", "growth"}, {"graph", "grigorchuk"}, {"radius", 6}}, gdir).exit_code == 0);
    auto g = read_csv(gdir / "growth.csv");
    CHECK(g[2][1] == "5");
    CHECK(g[3][1] == "11");
}

TEST_CASE("constants run emits a certificate")
{
    auto dir = scratch("constants");
    auto outcome = run_json({{"action", "constants"},
                             {"profile", {{"kind", "poly"}, {"c", 1}, {"d", 3}}},
                             {"budget", {{"kind", "poly_floor"}, {"c", 1}, {"p", 0.5}}}},
                            dir);
    REQUIRE(outcome.exit_code == 0);
    auto cert = read_json(dir / "certificate.json");
    CHECK(cert["type"] == "poly");
    CHECK(cert["parameters"]["R"].get<double>() > 12);
    CHECK(cert["verified_range"] == json::array({0, 10000}));
    auto search = read_json(dir / "search.json");
    CHECK(search["replay"]["ok"] == true);
}

TEST_CASE("manifest")
{
    auto dir = scratch("manifest");
    json config = {{"action", "threshold"}, {"class", "grigorchuk"}};
    auto outcome = run_json(config, dir);
    REQUIRE(outcome.exit_code == 0);
    auto m = read_json(dir / "manifest.json");
    CHECK(m["version"] == kToolVersion);
    CHECK(m["config_sha256"] == sha256_hex(config_to_json(config_from_json(config)).dump()));
    CHECK(m["artifacts"] == json(outcome.artifacts));
    for (const auto& a : outcome.artifacts)
        CHECK(fs::exists(dir / a));
    CHECK(m["started"].get<std::string>().ends_with("Z"));
    CHECK(read_json(dir / "threshold.json")["statement"] == "no containment for f = o(e^{√n})");

    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("identical configs give identical artifacts")
{
    std::vector<json> configs = {
        {{"action", "simulate"},
         {"graph", "zd(2)"},
         {"budget", {{"kind", "constant"}, {"c", 12}}},
         {"initial", {{"ball", 3}}}},
        {{"action", "simulate"}, {"graph", "lamplighter"}, {"strategy", "greedy"}, {"horizon", 8}},
        {{"action", "phi"}, {"graph", "zd(2)"}, {"k_max", 5}},
        {{"action", "spherical"}, {"graph", "lamplighter"}, {"n_max", 3}},
        {{"action", "recurrence"}, {"profile", {{"kind", "grig_log"}, {"c", 1}}}, {"k0", 10}, {"steps", 40}},
        {{"action", "constants"},
         {"profile", {{"kind", "grig_log"}, {"c", 1}}},
         {"budget", {{"kind", "stretched_floor"}, {"c", 1}, {"beta", 0.3}}},
         {"N", 500}},
    };
    int i = 0;
    for (const auto& c : configs) {
        CAPTURE(c.dump());
        auto a = scratch("det_a" + std::to_string(i));
        auto b = scratch("det_b" + std::to_string(i));
        ++i;
        auto ra = run_json(c, a);
        auto rb = run_json(c, b);
        REQUIRE(ra.exit_code == 0);
        REQUIRE(ra.artifacts == rb.artifacts);
        for (const auto& name : ra.artifacts)
            CHECK(slurp(a / name) == slurp(b / name));
    }
}

TEST_CASE("cli batch mode")
{
    auto dir = scratch("batch");
    fs::create_directories(dir);
    json batch = json::array();
    for (int r : {3, 4, 5, 6})
        batch.push_back({{"action", "growth"}, {"graph", "zd(3)"}, {"radius", r}, {"out", dir.string()}});
    std::ofstream(dir / "batch.json") << batch.dump();

    CliOptions opts;
    opts.action = "growth";
    opts.config_path = (dir / "batch.json").string();
    opts.batch = true;
    REQUIRE(run_cli(opts) == 0);
    for (int i = 0; i < 4; ++i) {
        auto run = dir / ("run-00" + std::to_string(i));
        CHECK(read_json(run / "growth.json")["radius"] == i + 3);
        CHECK(fs::exists(run / "manifest.json"));
    }

    opts.batch = false;
    CHECK(run_cli(opts) == 2); // an array without --batch

    CliOptions wrong;
    wrong.action = "phi";
    std::ofstream(dir / "one.json") << json{{"action", "growth"}}.dump();
    wrong.config_path = (dir / "one.json").string();
    CHECK(run_cli(wrong) == 2);

    CliOptions capped;
    capped.action = "growth";
    capped.config_path = (dir / "one.json").string();
    capped.out = (dir / "capped").string();
    capped.max_vertices = 10;
    CHECK(run_cli(capped) == 3);
}
