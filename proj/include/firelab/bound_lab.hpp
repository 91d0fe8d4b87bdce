#pragma once

// The lower-bound side: iterate k_{n+1} = k_n + Phi(k_n) - g(n), search and
// replay the inductive constants for polynomial and stretched exponential
// profiles, and state the resulting non-containment thresholds.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "firelab/budget.hpp"
#include "firelab/error.hpp"
#include "firelab/isoperimetry.hpp"
#include "firelab/kernels.hpp"

namespace firelab {

/// Cumulative protections g(n), n >= 0.
struct Cumulative {
    std::function<double(std::int64_t)> fn;
    std::string description;

    double operator()(std::int64_t n) const { return fn(n); }

    /// g(n) = f(1) + ... + f(n)
    static Cumulative from_budget(const Budget& f);
    static Cumulative constant(double value);
    /// values[n], repeating the last entry past the end
    static Cumulative from_values(std::vector<double> values, std::string description);
};

/// Absolute slack subtracted from every margin before it is compared with 0.
inline constexpr double kMarginSlack = 1e-9;

/// Digits of binary precision for near-tie rechecks.
struct Precision {
    unsigned bits = 256;
};

// Recurrence -------------------------------------------------------------------

struct RecurrenceParams {
    PhiProfile profile;
    Cumulative g;
    double k0 = 1;
};

enum class RecurrenceStatus { Survived, Collapsed };

struct Trajectory {
    std::vector<double> k_hat; ///< k_hat[0..]
    std::vector<double> phi;   ///< Phi(k_hat[n]), NaN where not evaluated
    std::vector<double> g;     ///< g(n)
    RecurrenceStatus status = RecurrenceStatus::Survived;
    std::int64_t collapsed_at = -1; ///< step whose update left the domain
    std::string cause;
};

/// k_hat_{n+1} = k_hat_n + Phi(k_hat_n) - g(n) for n < N. Stops as Collapsed
/// when Phi cannot be evaluated at k_hat_n or k_hat_{n+1} falls below the
/// profile's domain floor.
Trajectory iterate_recurrence(const RecurrenceParams& params, std::int64_t steps);

void write_trajectory_csv(std::ostream& out, const Trajectory& t);

// Polynomial growth --------------------------------------------------------------

struct PolyStep {
    double F = 1;
    double R = 1;
    double c = 1;
    int d = 2;
};

/// [T + c T^{(d-1)/d} - g] - (n+F+1)^d/R^d with T = (n+F)^d/R^d.
double check_poly_step(std::int64_t n, const PolyStep& p, double g_n);
/// Same, evaluated with `precision.bits` of mantissa.
double check_poly_step_precise(std::int64_t n, const PolyStep& p, double g_n, Precision precision);

struct PolySearchBounds {
    int r_steps = 17;     ///< R = 4cd(1 + 2^-j), j < r_steps
    int f_doublings = 17; ///< F = 2^i, i < f_doublings
};

struct PolyCertificate {
    PolyStep step;
    std::int64_t N = 0; ///< verified range [0, N]
    double min_margin = 0;
    std::int64_t argmin = 0;
    double escape_threshold = 0; ///< floor(F^d/R^d) + 1
    std::string assumption;      ///< caller-asserted g = o(n^{d-1})
};

struct PolySearchResult {
    std::optional<PolyCertificate> certificate;
    double best_margin = 0; ///< largest min-margin over the grid
    double best_F = 0;
    double best_R = 0;
    std::int64_t candidates = 0;
    std::string diagnostics;
};

PolySearchResult find_poly_constants(double c, int d, const Cumulative& g, std::int64_t N,
                                     const PolySearchBounds& bounds = {}, Precision precision = {},
                                     Execution exec = Execution::Parallel);

struct Replay {
    bool ok = false;
    double min_margin = 0;
    std::int64_t first_failure = -1;
    std::int64_t rechecked = 0; ///< near ties settled in extended precision
};

/// Re-evaluates check_poly_step for n = 0..N from the certificate alone.
Replay verify_poly_certificate(const PolyCertificate& cert, const Cumulative& g, Precision precision = {});

nlohmann::json to_json(const PolyCertificate& cert);

// Stretched exponential growth ----------------------------------------------------

/// e^{(n+2)^beta} <= e^{n^beta} (1 + 3/n^{1-beta}), in extended precision.
bool check_stretched_aux(std::int64_t n, double beta, Precision precision = {});

/// Least n0 with check_stretched_aux true on [n0, N], if any.
std::optional<std::int64_t> stretched_aux_floor(double beta, std::int64_t N, Precision precision = {});

struct StretchedParams {
    double c = 1;
    double alpha = 1;
    double beta = 0.49;
};

/// Step margin divided by k = C e^{n^beta}:
///   c/(log k)^{1/alpha} - g(n)/k - (e^{(n+1)^beta - n^beta} - 1).
double check_stretched_step(std::int64_t n, double C, const StretchedParams& p, double g_n);
double check_stretched_step_precise(std::int64_t n, double C, const StretchedParams& p, double g_n,
                                    Precision precision);

struct StretchedSearchBounds {
    int c_doublings = 64;     ///< C = 2^i, i < c_doublings
    std::int64_t n0_max = 100;
};

struct StretchedCertificate {
    StretchedParams params;
    double C = 1;
    std::int64_t n0 = 1;
    std::int64_t N = 0; ///< verified range [n0, N]
    double min_margin = 0;
    std::int64_t argmin = 0;
    double escape_threshold = 0; ///< C e^{n0^beta}
    std::string assumption;
};

struct StretchedSearchResult {
    std::optional<StretchedCertificate> certificate;
    std::optional<std::int64_t> aux_floor;
    std::int64_t best_n0 = -1; ///< smallest n0 reached by any C, -1 if none
    double best_C = 0;
    std::string diagnostics;
};

/// Throws Precondition unless 0 < alpha <= 1, 0 < beta < alpha/(alpha+1), c > 0.
void require_admissible(const StretchedParams& p);

StretchedSearchResult find_stretched_constants(const StretchedParams& p, const Cumulative& g, std::int64_t N,
                                               const StretchedSearchBounds& bounds = {}, Precision precision = {},
                                               Execution exec = Execution::Parallel);

/// beta + (alpha/(alpha+1) - beta)/2, absorbing the 1/n in f = o(e^{n^beta}/n).
double perturbed_beta(double alpha, double beta);

/// Runs the finder at perturbed_beta with g unchanged.
StretchedSearchResult find_stretched_constants_perturbed(const StretchedParams& p, const Cumulative& g,
                                                         std::int64_t N, const StretchedSearchBounds& bounds = {},
                                                         Precision precision = {});

/// Replays the step, auxiliary and exponent comparison on [n0, N].
Replay verify_stretched_certificate(const StretchedCertificate& cert, const Cumulative& g, Precision precision = {});

nlohmann::json to_json(const StretchedCertificate& cert);

// Thresholds ----------------------------------------------------------------------

enum class GrowthClass { Poly, Stretched, Grigorchuk, Intermediate };

struct ThresholdReport {
    GrowthClass growth = GrowthClass::Poly;
    std::string statement;
    std::string envelope;
    double sup_beta = 0; ///< stretched kinds only
    std::string certificate_op;
};

/// Poly needs d >= 2 (Unsupported otherwise); Stretched needs 0 < alpha < 1.
ThresholdReport threshold_report(GrowthClass growth, double parameter = 0);

nlohmann::json to_json(const ThresholdReport& report);

} // namespace firelab
