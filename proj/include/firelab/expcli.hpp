#pragma once

// Experiment runner: JSON configs in, CSV/JSON artifacts plus a manifest out.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "firelab/bound_lab.hpp"
#include "firelab/budget.hpp"
#include "firelab/error.hpp"
#include "firelab/graph_spaces.hpp"
#include "firelab/isoperimetry.hpp"

namespace firelab {

inline constexpr const char* kToolVersion = "0.1.0";

/// "zd(d)", "heisenberg", "lamplighter", "canopy", "grigorchuk" or
/// "grigorchuk<pre>(<period>)", e.g. "grigorchuk(012)".
GraphSpec parse_graph(std::string_view text, int signature_level = 10);

nlohmann::json budget_to_json(const Budget& f);
Budget budget_from_json(const nlohmann::json& j);

struct ProfileSpec {
    std::string kind = "poly"; ///< poly, stretched, grig_log, linear, exact_table
    double c = 1;
    int d = 2;
    double alpha = 1;
    // exact_table
    std::int64_t k_max = 12;
    int window = 4;
    PhiMode mode = PhiMode::Connected;
    bool fallback = true;

    friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

nlohmann::json profile_to_json(const ProfileSpec& p);
ProfileSpec profile_from_json(const nlohmann::json& j);

/// Builds the profile; exact tables are computed on `spec`.
PhiProfile build_profile(const ProfileSpec& p, const GraphSpec& spec, const SearchLimits& limits);

struct InitialFire {
    std::optional<int> ball_radius = 0;
    std::vector<std::string> vertices;

    friend bool operator==(const InitialFire&, const InitialFire&) = default;
};

inline const std::vector<std::string> kActions = {"simulate",  "growth",    "phi",      "spherical",
                                                  "recurrence", "constants", "threshold"};

struct ExperimentConfig {
    std::string action = "growth";
    std::string graph = "zd(2)";
    int signature_level = 10;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::uint64_t max_vertices = 5'000'000;
    unsigned precision_bits = 256;

    // simulate
    std::string strategy = "sphere_wall";
    Budget budget = Budget::constant(1);
    InitialFire initial;
    std::int64_t horizon = 50;
    std::optional<int> wall_radius;

    // growth
    int radius = 10;

    // phi, spherical
    std::int64_t k_max = 4;
    int window = 4;
    PhiMode mode = PhiMode::Connected;
    std::uint64_t max_nodes = 4'000'000'000ULL;
    int n_min = 1;
    int n_max = 4;
    std::int64_t max_k = 8;

    // recurrence, constants
    ProfileSpec profile;
    double k0 = 1;
    std::int64_t steps = 50;
    double beta = 0.49;
    std::int64_t N = 10'000;
    bool perturb = false;
    PolySearchBounds poly_search;
    StretchedSearchBounds stretched_search;

    // threshold
    std::string growth_class = "poly";
    double d = 3;
    double alpha = 0.5;

    Limits limits() const { return {static_cast<std::size_t>(max_vertices)}; }
};

/// Canonical form: common keys plus the keys of the config's action, with
/// defaults filled in.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Throws Config on unknown keys, wrong types, out-of-range values and
/// unknown names. `action` (if nonempty) must agree with any "action" key.
ExperimentConfig config_from_json(const nlohmann::json& j, std::string_view action = {});

/// 0 ok, 2 config, 3 capacity, 4 precondition, 5 infeasible, 6 domain or
/// strategy violation, 1 anything else.
int exit_code(ErrorKind kind);

nlohmann::json error_record(ErrorKind kind, std::string_view message);

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> artifacts; ///< relative to the output directory
    std::optional<nlohmann::json> error;
};

/// Runs one config into `out_dir` (created if needed). Writes config.json,
/// the action's artifacts, error.json on failure and manifest.json last.
RunOutcome run_config(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct CliOptions {
    std::string action;
    std::optional<std::string> config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> max_vertices;
    std::optional<unsigned> precision_bits;
    bool batch = false;
};

/// Loads the config (an array of configs with `batch`), applies the flag
/// overrides and runs. Batch entries go to <out>/run-NNN and run in parallel.
/// Returns the first nonzero exit code in batch order, or 0.
int run_cli(const CliOptions& options);

std::string sha256_hex(std::string_view data);

} // namespace firelab
