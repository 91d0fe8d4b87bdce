#pragma once

// Outer vertex boundaries, window-restricted isoperimetric values, closed-form
// profile lower bounds and spherical isoperimetry diagnostics.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "firelab/budget.hpp"
#include "firelab/graph_spaces.hpp"
#include "firelab/kernels.hpp"

namespace firelab {

/// {w not in K : w adjacent to some vertex of K}
VertexSet outer_boundary(const GraphSpec& spec, const VertexSet& set);

enum class PhiMode { Connected, AllSubsets };

const char* to_string(PhiMode mode);

struct PhiResult {
    std::size_t k = 0;
    std::int64_t value = 0;
    VertexSet witness;
    int window = 0;
    PhiMode mode = PhiMode::Connected;
};

struct SearchLimits {
    Limits graph;
    /// search-tree nodes before a Capacity error
    std::uint64_t max_nodes = 4'000'000'000ULL;
};

/// Minimum |dK| over k-subsets of B_window.
///
/// Connected mode ranges over connected sets containing the root on group
/// families (any connected set on the canopy) and gives an upper bound for
/// Phi(k). All-subsets mode ranges over every k-subset and is exact whenever
/// a minimizer fits in the window. The witness is the first minimizer in
/// size-then-lexicographic enumeration order, whichever execution is chosen.
PhiResult phi_exact(const GraphSpec& spec, std::size_t k, int window, PhiMode mode, const SearchLimits& limits = {},
                    Execution exec = Execution::Parallel);

// Profiles ------------------------------------------------------------------

struct ExactTableProfile {
    std::map<std::int64_t, PhiResult> values;
    /// Poly coefficients used above the table, if any.
    std::optional<std::pair<double, int>> poly_fallback;
};
struct PolyProfile {
    double c = 1;
    int d = 2;
};
struct StretchedProfile {
    double c = 1;
    double alpha = 1;
};
struct GrigLogProfile {
    double c = 1;
};
/// c*k; a stand-in for the doubling recurrence.
struct LinearProfile {
    double c = 1;
};

using PhiProfile = std::variant<ExactTableProfile, PolyProfile, StretchedProfile, GrigLogProfile, LinearProfile>;

PhiProfile make_poly(double c, int d);
PhiProfile make_stretched(double c, double alpha);
PhiProfile make_grig_log(double c);

/// Smallest k at which the profile is defined.
double domain_floor(const PhiProfile& profile);

/// Throws Domain outside the profile's domain. ExactTable needs an integral k
/// present in the table (or covered by its fallback).
double phi_profile_eval(const PhiProfile& profile, double k);

std::string describe(const PhiProfile& profile);

/// min_k value(k)/sqrt(k) over the table; the desk-scale constant for a
/// planar Poly(c, 2) floor.
double fitted_sqrt_constant(const ExactTableProfile& table);

// Spherical isoperimetry -------------------------------------------------------

using Ratio = boost::rational<std::int64_t>;

struct SphericalReport {
    int n = 0;
    VertexSet subset;
    std::int64_t forward = 0; ///< |dA n S_{n+1}|
    std::int64_t sphere = 0;  ///< |S_n|
    std::int64_t next_sphere = 0;
    Ratio ratio;
    Ratio threshold;
    bool satisfied = false;
};

/// Throws Domain unless the subset is a nonempty part of S_n.
SphericalReport spherical_check(const GraphSpec& spec, int n, const VertexSet& subset, const Limits& limits = {});

/// Smallest-first, then lexicographic, search for A in S_n with |A| <= max_k
/// violating |dA n S_{n+1}|/|A| >= |S_{n+1}|/|S_n|.
std::optional<SphericalReport> spherical_violation_search(const GraphSpec& spec, int n, std::size_t max_k,
                                                          const SearchLimits& limits = {});

// Budget against sphere sizes --------------------------------------------------

using BigRational = boost::multiprecision::cpp_rational;

enum class Trend { Decreasing, Flat, Increasing, Mixed };

const char* to_string(Trend trend);

struct SphereSumReport {
    std::vector<BigRational> increments; ///< f(n)/s(n), n = 1..N
    std::vector<BigRational> partial;    ///< partial sums through n = 1..N
    Trend trend = Trend::Mixed;          ///< over the second half of the horizon
    bool increments_vanishing = false;
    std::string note;
};

/// Finite-horizon look at sum f(n)/|S_n|. The trend is a heuristic only.
SphereSumReport budget_sphere_sum(const GrowthTable& growth, const Budget& f, int horizon);

} // namespace firelab
