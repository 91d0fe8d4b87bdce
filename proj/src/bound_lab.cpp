#include "firelab/bound_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

#include <boost/multiprecision/mpfr.hpp>
#include <fmt/format.h>

#include "firelab/error.hpp"

namespace firelab {

namespace {

using Big = boost::multiprecision::mpfr_float;

// The default mpfr precision is process-wide, so extended-precision sections
// are serialized.
std::mutex& precision_lock()
{
    static std::mutex m;
    return m;
}

class PrecisionScope {
public:
    explicit PrecisionScope(Precision p) : guard_(precision_lock()), old_(Big::default_precision())
    {
        if (p.bits < 64)
            fail(ErrorKind::Precondition, fmt::format("precision of {} bits is below double", p.bits));
        Big::default_precision(static_cast<unsigned>(std::ceil(p.bits * 0.30102999566398120)) + 1);
    }
    ~PrecisionScope() { Big::default_precision(old_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    std::lock_guard<std::mutex> guard_;
    unsigned old_;
};

enum class Check { Pass, Fail, Tie };

// Margins within a relative band of the slack are decided in extended precision.
Check classify(double margin, double scale)
{
    double x = margin - kMarginSlack;
    double band = 1e-12 * std::max(1.0, scale);
    if (!std::isfinite(x))
        return Check::Fail;
    if (x > band)
        return Check::Pass;
    if (x < -band)
        return Check::Fail;
    return Check::Tie;
}

std::vector<double> tabulate(const Cumulative& g, std::int64_t N)
{
    std::vector<double> out(static_cast<std::size_t>(N + 1));
    for (std::int64_t n = 0; n <= N; ++n)
        out[n] = g(n);
    return out;
}

double poly_scale(std::int64_t n, const PolyStep& p, double g_n)
{
    return std::pow((n + p.F + 1) / p.R, p.d) + std::abs(g_n);
}

struct PolyScan {
    double min_margin = std::numeric_limits<double>::infinity();
    std::int64_t argmin = 0;
    std::int64_t first_fail = -1;
    std::vector<std::int64_t> ties;
};

PolyScan scan_poly(const PolyStep& p, const std::vector<double>& g)
{
    PolyScan s;
    for (std::int64_t n = 0; n < static_cast<std::int64_t>(g.size()); ++n) {
        double m = check_poly_step(n, p, g[n]);
        if (m < s.min_margin || std::isnan(m)) {
            s.min_margin = m;
            s.argmin = n;
        }
        switch (classify(m, poly_scale(n, p, g[n]))) {
        case Check::Pass: break;
        case Check::Tie: s.ties.push_back(n); break;
        case Check::Fail:
            if (s.first_fail < 0)
                s.first_fail = n;
            break;
        }
    }
    return s;
}

std::string short_real(double x)
{
    return fmt::format("{:.6g}", x);
}

} // namespace

// Cumulative -------------------------------------------------------------------

Cumulative Cumulative::from_budget(const Budget& f)
{
    // prefix sums grow on demand; copies of the Cumulative share them
    struct Prefix {
        Budget f;
        std::mutex lock;
        std::vector<std::int64_t> sums{0};
    };
    auto prefix = std::make_shared<Prefix>();
    prefix->f = f;
    return {[prefix](std::int64_t n) {
                if (n <= 0)
                    return 0.0;
                std::lock_guard guard(prefix->lock);
                auto& sums = prefix->sums;
                while (static_cast<std::int64_t>(sums.size()) <= n) {
                    auto i = static_cast<std::int64_t>(sums.size());
                    sums.push_back(std::min(sums.back() + prefix->f(i), Budget::kAllowanceCap));
                }
                return static_cast<double>(sums[n]);
            },
            fmt::format("sum of {}", f.describe())};
}

Cumulative Cumulative::constant(double value)
{
    return {[value](std::int64_t) { return value; }, fmt::format("constant({})", value)};
}

Cumulative Cumulative::from_values(std::vector<double> values, std::string description)
{
    if (values.empty())
        fail(ErrorKind::Precondition, "cumulative table is empty");
    return {[v = std::move(values)](std::int64_t n) {
                auto i = static_cast<std::size_t>(std::max<std::int64_t>(n, 0));
                return v[std::min(i, v.size() - 1)];
            },
            std::move(description)};
}

// Recurrence -------------------------------------------------------------------

Trajectory iterate_recurrence(const RecurrenceParams& params, std::int64_t steps)
{
    if (!(params.k0 >= 1))
        fail(ErrorKind::Precondition, fmt::format("k0 must be at least 1, got {}", params.k0));
    if (steps < 0)
        fail(ErrorKind::Precondition, "step count must be nonnegative");

    const double floor = domain_floor(params.profile);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Trajectory t;
    t.k_hat.push_back(params.k0);
    for (std::int64_t n = 0; n < steps; ++n) {
        double k = t.k_hat.back();
        t.g.push_back(params.g(n));
        double phi;
        try {
            phi = phi_profile_eval(params.profile, k);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Domain)
                throw;
            t.phi.push_back(nan);
            t.status = RecurrenceStatus::Collapsed;
            t.collapsed_at = n;
            t.cause = e.what();
            return t;
        }
        t.phi.push_back(phi);
        double next = k + phi - t.g.back();
        t.k_hat.push_back(next);
        if (!(next >= floor)) {
            t.status = RecurrenceStatus::Collapsed;
            t.collapsed_at = n;
            t.cause = fmt::format("k_hat({}) = {} is below the domain floor {} of {}", n + 1, next, floor,
                                  describe(params.profile));
            t.phi.push_back(nan);
            t.g.push_back(params.g(n + 1));
            return t;
        }
    }
    double last = t.k_hat.back();
    try {
        t.phi.push_back(phi_profile_eval(params.profile, last));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain)
            throw;
        t.phi.push_back(nan);
    }
    t.g.push_back(params.g(steps));
    return t;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t)
{
    out << "n,k_hat,phi_at_k,g_n\n";
    for (std::size_t n = 0; n < t.k_hat.size(); ++n)
        out << fmt::format("{},{},{},{}\n", n, t.k_hat[n], t.phi[n], t.g[n]);
}

// Polynomial growth --------------------------------------------------------------

double check_poly_step(std::int64_t n, const PolyStep& p, double g_n)
{
    double base = (static_cast<double>(n) + p.F) / p.R;
    double T = std::pow(base, p.d);
    double next = std::pow((static_cast<double>(n) + p.F + 1) / p.R, p.d);
    return T + p.c * std::pow(T, static_cast<double>(p.d - 1) / p.d) - g_n - next;
}

double check_poly_step_precise(std::int64_t n, const PolyStep& p, double g_n, Precision precision)
{
    PrecisionScope scope(precision);
    Big R(p.R);
    Big T = pow((Big(n) + Big(p.F)) / R, p.d);
    Big next = pow((Big(n) + Big(p.F) + 1) / R, p.d);
    Big exponent = Big(p.d - 1) / Big(p.d);
    Big m = T + Big(p.c) * pow(T, exponent) - Big(g_n) - next;
    return m.convert_to<double>();
}

PolySearchResult find_poly_constants(double c, int d, const Cumulative& g, std::int64_t N,
                                     const PolySearchBounds& bounds, Precision precision, Execution exec)
{
    if (!(c > 0) || d < 2 || N < 0 || bounds.r_steps < 1 || bounds.f_doublings < 1)
        fail(ErrorKind::Precondition, "poly search needs c > 0, d >= 2, N >= 0 and a nonempty grid");

    auto gv = tabulate(g, N);
    const std::int64_t count = std::int64_t{bounds.r_steps} * bounds.f_doublings;
    auto candidate = [&](std::int64_t idx) {
        auto j = static_cast<int>(idx / bounds.f_doublings);
        auto i = static_cast<int>(idx % bounds.f_doublings);
        return PolyStep{std::ldexp(1.0, i), 4 * c * d * (1 + std::ldexp(1.0, -j)), c, d};
    };

    std::vector<PolyScan> scans(static_cast<std::size_t>(count));
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t idx = 0; idx < count; ++idx)
            scans[idx] = scan_poly(candidate(idx), gv);
    } else {
        for (std::int64_t idx = 0; idx < count; ++idx)
            scans[idx] = scan_poly(candidate(idx), gv);
    }

    PolySearchResult result;
    result.candidates = count;
    result.best_margin = -std::numeric_limits<double>::infinity();
    for (std::int64_t idx = 0; idx < count; ++idx) {
        const auto& s = scans[idx];
        auto p = candidate(idx);
        if (s.min_margin > result.best_margin) {
            result.best_margin = s.min_margin;
            result.best_F = p.F;
            result.best_R = p.R;
        }
        if (result.certificate || s.first_fail >= 0)
            continue;
        bool ties_hold = std::all_of(s.ties.begin(), s.ties.end(), [&](std::int64_t n) {
            return check_poly_step_precise(n, p, gv[n], precision) - kMarginSlack >= 0;
        });
        if (!ties_hold)
            continue;
        PolyCertificate cert;
        cert.step = p;
        cert.N = N;
        cert.min_margin = s.min_margin;
        cert.argmin = s.argmin;
        cert.escape_threshold = std::floor(std::pow(p.F / p.R, d)) + 1;
        cert.assumption = fmt::format("g = o(n^{}) asserted by the caller for g = {}", d - 1, g.description);
        result.certificate = cert;
    }
    if (!result.certificate)
        result.diagnostics = fmt::format("no (F, R) among {} candidates keeps the margin nonnegative on [0, {}]; "
                                         "best min-margin {} at F={}, R={}",
                                         count, N, result.best_margin, result.best_F, short_real(result.best_R));
    return result;
}

Replay verify_poly_certificate(const PolyCertificate& cert, const Cumulative& g, Precision precision)
{
    Replay r;
    const auto& p = cert.step;
    if (!(p.R > 4 * p.c * p.d))
        return r;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (std::int64_t n = 0; n <= cert.N; ++n) {
        double gn = g(n);
        double m = check_poly_step(n, p, gn);
        r.min_margin = std::min(r.min_margin, m);
        auto verdict = classify(m, poly_scale(n, p, gn));
        if (verdict == Check::Tie) {
            ++r.rechecked;
            verdict = check_poly_step_precise(n, p, gn, precision) - kMarginSlack >= 0 ? Check::Pass : Check::Fail;
        }
        if (verdict == Check::Fail && r.first_failure < 0)
            r.first_failure = n;
    }
    r.ok = r.first_failure < 0;
    return r;
}

nlohmann::json to_json(const PolyCertificate& cert)
{
    return {
        {"type", "poly"},
        {"parameters",
         {{"c", cert.step.c}, {"d", cert.step.d}, {"F", cert.step.F}, {"R", cert.step.R},
          {"assumption", cert.assumption}}},
        {"verified_range", {0, cert.N}},
        {"min_margin", cert.min_margin},
        {"argmin", cert.argmin},
        {"escape_threshold", cert.escape_threshold},
    };
}

// Stretched exponential growth ----------------------------------------------------

bool check_stretched_aux(std::int64_t n, double beta, Precision precision)
{
    if (n < 1 || !(beta > 0 && beta < 1))
        fail(ErrorKind::Precondition, "auxiliary check needs n >= 1 and 0 < beta < 1");
    PrecisionScope scope(precision);
    Big b(beta);
    Big lhs = pow(Big(n + 2), b) - pow(Big(n), b);
    Big rhs = log1p(3 / pow(Big(n), 1 - b));
    return lhs <= rhs;
}

std::optional<std::int64_t> stretched_aux_floor(double beta, std::int64_t N, Precision precision)
{
    std::optional<std::int64_t> n0;
    for (std::int64_t n = N; n >= 1; --n) {
        if (!check_stretched_aux(n, beta, precision))
            break;
        n0 = n;
    }
    return n0;
}

double check_stretched_step(std::int64_t n, double C, const StretchedParams& p, double g_n)
{
    double nb = std::pow(static_cast<double>(n), p.beta);
    double log_k = std::log(C) + nb;
    double k = C * std::exp(nb);
    return p.c / std::pow(log_k, 1 / p.alpha) - g_n / k - std::expm1(std::pow(n + 1.0, p.beta) - nb);
}

double check_stretched_step_precise(std::int64_t n, double C, const StretchedParams& p, double g_n,
                                    Precision precision)
{
    PrecisionScope scope(precision);
    Big beta(p.beta);
    Big nb = pow(Big(n), beta);
    Big log_k = log(Big(C)) + nb;
    Big k = Big(C) * exp(nb);
    Big m = Big(p.c) / pow(log_k, 1 / Big(p.alpha)) - Big(g_n) / k - expm1(pow(Big(n + 1), beta) - nb);
    return m.convert_to<double>();
}

namespace {

bool exponent_comparison(std::int64_t n, const StretchedParams& p)
{
    double x = static_cast<double>(n);
    return std::pow(x, 1 - p.beta) > std::pow(x, p.beta / p.alpha);
}

double stretched_scale(std::int64_t n, double C, const StretchedParams& p, double g_n)
{
    return 1 + g_n / (C * std::exp(std::pow(static_cast<double>(n), p.beta)));
}

bool stretched_step_holds(std::int64_t n, double C, const StretchedParams& p, double g_n, Precision precision,
                          std::int64_t* rechecked = nullptr)
{
    double m = check_stretched_step(n, C, p, g_n);
    switch (classify(m, stretched_scale(n, C, p, g_n))) {
    case Check::Pass: return true;
    case Check::Fail: return false;
    case Check::Tie: break;
    }
    if (rechecked)
        ++*rechecked;
    return check_stretched_step_precise(n, C, p, g_n, precision) - kMarginSlack >= 0;
}

} // namespace

void require_admissible(const StretchedParams& p)
{
    if (!(p.c > 0))
        fail(ErrorKind::Precondition, fmt::format("c must be positive, got {}", p.c));
    if (!(p.alpha > 0 && p.alpha <= 1))
        fail(ErrorKind::Precondition, fmt::format("alpha must lie in (0, 1], got {}", p.alpha));
    double bound = p.alpha / (p.alpha + 1);
    if (!(p.beta > 0 && p.beta < bound))
        fail(ErrorKind::Precondition,
             fmt::format("beta must satisfy 0 < beta < alpha/(alpha+1) = {}; got beta = {}", short_real(bound),
                         p.beta));
}

StretchedSearchResult find_stretched_constants(const StretchedParams& p, const Cumulative& g, std::int64_t N,
                                               const StretchedSearchBounds& bounds, Precision precision,
                                               Execution exec)
{
    require_admissible(p);
    if (N < 2 || bounds.c_doublings < 1)
        fail(ErrorKind::Precondition, "stretched search needs N >= 2 and a nonempty C grid");

    auto gv = tabulate(g, N);
    StretchedSearchResult result;
    result.aux_floor = stretched_aux_floor(p.beta, N, precision);
    if (!result.aux_floor) {
        result.diagnostics = fmt::format("the auxiliary inequality fails at n = {}", N);
        return result;
    }

    // least n with the exponent comparison on [n, N]; it fails only at n = 1
    std::int64_t side_floor = *result.aux_floor;
    while (side_floor <= N && !exponent_comparison(side_floor, p))
        ++side_floor;

    std::vector<char> holds(static_cast<std::size_t>(N + 1));
    for (int i = 0; i < bounds.c_doublings; ++i) {
        double C = std::ldexp(1.0, i);
        if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
            for (std::int64_t n = 1; n <= N; ++n) {
                auto v = classify(check_stretched_step(n, C, p, gv[n]), stretched_scale(n, C, p, gv[n]));
                holds[n] = static_cast<char>(v);
            }
        } else {
            for (std::int64_t n = 1; n <= N; ++n) {
                auto v = classify(check_stretched_step(n, C, p, gv[n]), stretched_scale(n, C, p, gv[n]));
                holds[n] = static_cast<char>(v);
            }
        }

        std::int64_t n0 = N + 1;
        for (std::int64_t n = N; n >= std::max<std::int64_t>(side_floor, 1); --n) {
            auto v = static_cast<Check>(holds[n]);
            bool ok = v == Check::Pass ||
                      (v == Check::Tie &&
                       check_stretched_step_precise(n, C, p, gv[n], precision) - kMarginSlack >= 0);
            if (!ok)
                break;
            n0 = n;
        }
        if (n0 > N)
            continue;
        if (result.best_n0 < 0 || n0 < result.best_n0) {
            result.best_n0 = n0;
            result.best_C = C;
        }
        if (n0 > bounds.n0_max)
            continue;

        StretchedCertificate cert;
        cert.params = p;
        cert.C = C;
        cert.n0 = n0;
        cert.N = N;
        cert.min_margin = std::numeric_limits<double>::infinity();
        for (std::int64_t n = n0; n <= N; ++n) {
            double m = check_stretched_step(n, C, p, gv[n]);
            if (m < cert.min_margin) {
                cert.min_margin = m;
                cert.argmin = n;
            }
        }
        cert.escape_threshold = C * std::exp(std::pow(static_cast<double>(n0), p.beta));
        cert.assumption =
            fmt::format("f = o(e^(n^{})/n) asserted by the caller for g = {}", p.beta, g.description);
        result.certificate = cert;
        return result;
    }
    result.diagnostics =
        result.best_n0 < 0
            ? fmt::format("no C in [1, 2^{}] satisfies the step at n = {}", bounds.c_doublings - 1, N)
            : fmt::format("smallest n0 reached is {} (C = {}), above the limit {}", result.best_n0, result.best_C,
                          bounds.n0_max);
    return result;
}

double perturbed_beta(double alpha, double beta)
{
    return beta + (alpha / (alpha + 1) - beta) / 2;
}

StretchedSearchResult find_stretched_constants_perturbed(const StretchedParams& p, const Cumulative& g,
                                                         std::int64_t N, const StretchedSearchBounds& bounds,
                                                         Precision precision)
{
    require_admissible(p);
    auto q = p;
    q.beta = perturbed_beta(p.alpha, p.beta);
    return find_stretched_constants(q, g, N, bounds, precision);
}

Replay verify_stretched_certificate(const StretchedCertificate& cert, const Cumulative& g, Precision precision)
{
    Replay r;
    require_admissible(cert.params);
    if (cert.n0 < 1 || cert.N < cert.n0 || !(cert.C >= 1))
        return r;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (std::int64_t n = cert.n0; n <= cert.N; ++n) {
        double gn = g(n);
        r.min_margin = std::min(r.min_margin, check_stretched_step(n, cert.C, cert.params, gn));
        bool ok = stretched_step_holds(n, cert.C, cert.params, gn, precision, &r.rechecked) &&
                  check_stretched_aux(n, cert.params.beta, precision) && exponent_comparison(n, cert.params);
        if (!ok && r.first_failure < 0)
            r.first_failure = n;
    }
    r.ok = r.first_failure < 0;
    return r;
}

nlohmann::json to_json(const StretchedCertificate& cert)
{
    return {
        {"type", "stretched"},
        {"parameters",
         {{"c", cert.params.c}, {"alpha", cert.params.alpha}, {"beta", cert.params.beta}, {"C", cert.C},
          {"n0", cert.n0}, {"assumption", cert.assumption}}},
        {"verified_range", {cert.n0, cert.N}},
        {"min_margin", cert.min_margin},
        {"argmin", cert.argmin},
        {"escape_threshold", cert.escape_threshold},
    };
}

// Thresholds ----------------------------------------------------------------------

ThresholdReport threshold_report(GrowthClass growth, double parameter)
{
    ThresholdReport r;
    r.growth = growth;
    switch (growth) {
    case GrowthClass::Poly: {
        if (!(parameter >= 2) || parameter != std::floor(parameter))
            fail(ErrorKind::Unsupported, fmt::format("polynomial thresholds need an integer d >= 2, got {}", parameter));
        auto d = static_cast<int>(parameter);
        r.envelope = d == 2 ? "1" : d == 3 ? "n" : fmt::format("n^{}", d - 2);
        r.statement = fmt::format("no containment for f = o({})", r.envelope);
        r.certificate_op = "find_poly_constants";
        break;
    }
    case GrowthClass::Stretched: {
        if (!(parameter > 0 && parameter < 1))
            fail(ErrorKind::Precondition, fmt::format("stretched thresholds need 0 < alpha < 1, got {}", parameter));
        r.sup_beta = parameter / (parameter + 1);
        r.envelope = fmt::format("e^(n^beta) for beta < {}", short_real(r.sup_beta));
        r.statement = fmt::format("no containment for f = o(e^(n^beta)) for any beta < {}", short_real(r.sup_beta));
        r.certificate_op = "find_stretched_constants";
        break;
    }
    case GrowthClass::Grigorchuk:
        r.sup_beta = 0.5;
        r.envelope = "e^(n^(1/2))";
        r.statement = "no containment for f = o(e^{√n})";
        r.certificate_op = "find_stretched_constants with alpha = 1";
        break;
    case GrowthClass::Intermediate:
        r.envelope = "n^k for every k";
        r.statement = "no polynomial containment of any degree";
        r.certificate_op = "find_poly_constants for every d";
        break;
    }
    return r;
}

nlohmann::json to_json(const ThresholdReport& report)
{
    static const char* names[] = {"poly", "stretched", "grigorchuk", "intermediate"};
    nlohmann::json j = {
        {"class", names[static_cast<int>(report.growth)]},
        {"statement", report.statement},
        {"envelope", report.envelope},
        {"certificate_op", report.certificate_op},
    };
    if (report.growth == GrowthClass::Stretched || report.growth == GrowthClass::Grigorchuk)
        j["sup_beta"] = report.sup_beta;
    return j;
}

} // namespace firelab
