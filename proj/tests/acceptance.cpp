// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "firelab/bound_lab.hpp"
#include "firelab/expcli.hpp"
#include "firelab/fire_engine.hpp"
#include "firelab/graph_spaces.hpp"
#include "firelab/isoperimetry.hpp"
#include "oracles.hpp"

using namespace firelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

VertexSet ball_set(const GraphSpec& spec, int r)
{
    auto b = ball(spec, r);
    return VertexSet(b.vertices().begin(), b.vertices().end());
}

bool subset_of(const VertexSet& a, const VertexSet& b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Plays to containment or the horizon, checking the game rules on every turn.
// Returns the states K_0, K_1, ...
std::vector<FireState> play(const GraphSpec& spec, const VertexSet& initial, Strategy& s, const Budget& f,
                            int horizon, Outcome& out)
{
    std::vector<FireState> states{FireState::ignite(initial)};
    s.reset(spec, states.back());
    std::int64_t total = 0;
    while (static_cast<int>(states.size()) <= horizon && !is_contained(spec, states.back())) {
        const auto& cur = states.back();
        auto next = step(spec, cur, s, f);
        total += f(cur.time + 1);
        auto grown = cur.burning;
        for (const auto& w : outer_boundary(spec, cur.burning))
            if (!next.protected_vertices.contains(w))
                grown.insert(w);
        out.require(next.burning == grown, fmt::format("spread is not the unprotected boundary at turn {}", next.time));
        out.require(subset_of(cur.burning, next.burning) &&
                        subset_of(cur.protected_vertices, next.protected_vertices),
                    "sets shrank");
        for (const auto& v : next.burning)
            out.require(!next.protected_vertices.contains(v), "burning and protected overlap");
        out.require(next.spent <= total, fmt::format("budget exceeded at turn {}", next.time));
        states.push_back(std::move(next));
    }
    return states;
}

Outcome growth_tables()
{
    Outcome out;
    auto z2 = growth_table(GraphSpec::zd(2), 50);
    for (int n = 0; n <= 50; ++n)
        out.require(z2.v[n] == 2 * n * n + 2 * n + 1, fmt::format("Z^2 v({}) = {}", n, z2.v[n]));
    for (int n = 2; n <= 50; ++n)
        out.require(z2.vpp[n] == 4, fmt::format("Z^2 v''({}) = {}", n, z2.vpp[n]));

    auto z3 = growth_table(GraphSpec::zd(3), 30);
    for (int n = 0; n <= 30; ++n)
        out.require(z3.v[n] == oracle::lattice_ball(3, n), fmt::format("Z^3 v({}) = {}", n, z3.v[n]));

    auto g = growth_table(GraphSpec::grigorchuk(), 8);
    out.require(g.v[1] == 5 && g.v[2] == 11, fmt::format("Grigorchuk v(1) = {}, v(2) = {}", g.v[1], g.v[2]));
    for (int m = 0; m <= 8; ++m)
        for (int n = 0; m + n <= 8; ++n)
            out.require(g.v[m + n] <= g.v[m] * g.v[n], fmt::format("submultiplicativity at ({}, {})", m, n));
    if (out.ok)
        out.detail = fmt::format("Z^2 v(50) = {}, Z^3 v(30) = {}, Grigorchuk v(8) = {}", z2.v[50], z3.v[30], g.v[8]);
    return out;
}

Outcome isoperimetry_oracle()
{
    Outcome out;
    auto z2 = GraphSpec::zd(2);
    const std::int64_t expected[] = {4, 6, 7, 8};
    for (std::size_t k = 1; k <= 4; ++k) {
        auto connected = phi_exact(z2, k, 4, PhiMode::Connected);
        auto all = phi_exact(z2, k, 4, PhiMode::AllSubsets);
        auto wider = phi_exact(z2, k, 5, PhiMode::Connected);
        out.require(connected.value == expected[k - 1], fmt::format("Phi({}) = {}", k, connected.value));
        out.require(all.value == connected.value, fmt::format("all-subsets differs at k = {}", k));
        out.require(wider.value == connected.value, fmt::format("window 5 differs at k = {}", k));
        out.require(static_cast<std::int64_t>(outer_boundary(z2, connected.witness).size()) == connected.value,
                    fmt::format("witness does not realize Phi({})", k));
    }
    if (out.ok)
        out.detail = "Phi = 4, 6, 7, 8";
    return out;
}

Outcome spherical()
{
    Outcome out;
    auto z2 = GraphSpec::zd(2);
    for (int n = 1; n <= 4; ++n) {
        auto cap = std::min<std::size_t>(8, static_cast<std::size_t>(ball(z2, n).sphere_size(n)));
        out.require(!spherical_violation_search(z2, n, cap), fmt::format("Z^2 violates at n = {}", n));
    }
    auto lamp = GraphSpec::lamplighter();
    std::optional<SphericalReport> found;
    for (int n = 1; n <= 6 && !found; ++n) {
        auto cap = std::min<std::size_t>(8, static_cast<std::size_t>(ball(lamp, n).sphere_size(n)));
        found = spherical_violation_search(lamp, n, cap);
    }
    out.require(found.has_value(), "no lamplighter violation for n <= 6");
    if (found) {
        auto again = spherical_check(lamp, found->n, found->subset);
        out.require(!again.satisfied && again.ratio == found->ratio, "witness does not re-verify");
        std::string names;
        for (const auto& v : found->subset)
            names += (names.empty() ? "" : " ") + to_text(lamp, v);
        if (out.ok)
            out.detail = fmt::format("lamplighter n = {}: {{{}}} ratio {}/{} < {}/{}", found->n, names,
                                     found->ratio.numerator(), found->ratio.denominator(),
                                     found->threshold.numerator(), found->threshold.denominator());
    }
    return out;
}

Outcome sphere_wall()
{
    Outcome out;
    auto z2 = GraphSpec::zd(2);
    auto f = Budget::constant(12);
    std::string detail;
    for (int r : {1, 3}) {
        SphereWall wall(f);
        auto trace = run(z2, ball_set(z2, r), wall, f, 100);
        out.require(trace.verdict == Verdict::Contained, fmt::format("B_{} not contained", r));
        SphereWall again(f);
        auto states = play(z2, ball_set(z2, r), again, f, 100, out);
        out.require(is_contained(z2, states.back()), fmt::format("B_{} replay not contained", r));
        detail += fmt::format("{}B_{}: wall at m = {}, contained at n = {}, burned {}", detail.empty() ? "" : "; ",
                              r, wall.plan().radius, trace.step, trace.total_burned);
    }
    if (out.ok)
        out.detail = detail;
    return out;
}

Outcome canopy()
{
    Outcome out;
    auto c = GraphSpec::canopy();
    auto near = ball(c, 13);
    int fires = 0;
    std::int64_t worst = 0;
    for (const auto& v : near.vertices()) {
        if (v.key[0] > 6)
            continue;
        CanopyCut cut;
        auto trace = run(c, {v}, cut, Budget::constant(1), 200);
        out.require(trace.verdict == Verdict::Contained, "fire at " + to_text(c, v) + " not contained");
        worst = std::max(worst, trace.total_burned);
        ++fires;
    }
    // spine 0..6 plus trees of 2^{n+1} - 1 vertices
    out.require(fires == 7 + 254 - 7, fmt::format("tested {} start vertices", fires));
    if (out.ok)
        out.detail = fmt::format("{} single-vertex fires, largest burned set {}", fires, worst);
    return out;
}

Cumulative sqrt_sum() { return Cumulative::from_budget(Budget::poly_floor(1, 0.5)); }

Outcome poly_certificate()
{
    Outcome out;
    auto g = sqrt_sum();
    auto result = find_poly_constants(1, 3, g, 10'000);
    out.require(result.certificate.has_value(), "no certificate: " + result.diagnostics);
    if (!result.certificate)
        return out;
    const auto& cert = *result.certificate;
    out.require(cert.step.R > 12, "R <= 4cd");
    out.require(cert.min_margin - kMarginSlack >= 0, "negative min margin");
    auto replay = verify_poly_certificate(cert, g);
    out.require(replay.ok, "replay failed");
    for (std::int64_t n = 0; n <= cert.N; ++n)
        out.require(check_poly_step(n, cert.step, g(n)) - kMarginSlack >= 0 ||
                        check_poly_step_precise(n, cert.step, g(n), {}) - kMarginSlack >= 0,
                    fmt::format("step fails at n = {}", n));
    auto t = iterate_recurrence({make_poly(1, 3), g, cert.escape_threshold}, cert.N);
    std::int64_t passed = -1;
    for (std::size_t n = 0; n < t.k_hat.size() && passed < 0; ++n)
        if (t.k_hat[n] > 10 * cert.escape_threshold)
            passed = static_cast<std::int64_t>(n);
    out.require(passed >= 0, "trajectory never exceeds 10 k0*");
    if (out.ok)
        out.detail = fmt::format("F = {}, R = {}, k0* = {}, min margin {:.3g} at n = {}, 10 k0* passed at n = {}",
                                 cert.step.F, cert.step.R, cert.escape_threshold, cert.min_margin, cert.argmin,
                                 passed);
    return out;
}

Outcome poly_boundary()
{
    Outcome out;
    auto g = Cumulative::from_budget(Budget::poly_floor(1, 1));
    auto result = find_poly_constants(1, 3, g, 10'000);
    out.require(!result.certificate, "the boundary budget was certified");
    if (out.ok)
        out.detail = fmt::format("no certificate over {} candidates; best margin {:.4g} (F = {}, R = {})",
                                 result.candidates, result.best_margin, result.best_F, result.best_R);
    return out;
}

Outcome stretched_certificate()
{
    Outcome out;
    auto g = Cumulative::from_budget(Budget::stretched_floor(1, 0.3));
    auto result = find_stretched_constants({1, 1, 0.49}, g, 2000);
    out.require(result.certificate.has_value(), "no certificate: " + result.diagnostics);
    if (result.certificate) {
        const auto& cert = *result.certificate;
        out.require(verify_stretched_certificate(cert, g).ok, "replay failed");
        for (std::int64_t n = cert.n0; n <= cert.N; ++n)
            out.require(check_stretched_aux(n, 0.49), fmt::format("auxiliary inequality fails at n = {}", n));
        if (out.ok)
            out.detail = fmt::format("C = {}, n0 = {}", cert.C, cert.n0);
    }
    try {
        find_stretched_constants({1, 1, 0.6}, g, 2000);
        out.require(false, "beta = 0.6 accepted");
    } catch (const Error& e) {
        out.require(e.kind() == ErrorKind::Precondition, "beta = 0.6 raised the wrong error");
        out.require(std::string(e.what()).find("beta < alpha/(alpha+1) = 0.5") != std::string::npos,
                    std::string("message does not cite the bound: ") + e.what());
        if (out.ok)
            out.detail += fmt::format("; beta = 0.6 rejected: {}", e.what());
    }
    return out;
}

Outcome cross_validation()
{
    Outcome out;
    auto z2 = GraphSpec::zd(2);
    auto f = Budget::constant(2);
    ProfileSpec spec;
    spec.kind = "exact_table";
    spec.k_max = 12;
    auto profile = build_profile(spec, z2, {});
    const double certified = 12;
    int compared = 0;
    for (auto name : {"null", "greedy", "sphere_wall"}) {
        for (int r : {0, 1, 2}) {
            auto s = make_strategy(name, f);
            auto states = play(z2, ball_set(z2, r), *s, f, 20, out);
            std::vector<double> spent;
            for (const auto& st : states)
                spent.push_back(static_cast<double>(st.spent));
            for (std::size_t n = 0; n + 1 < states.size(); ++n) {
                auto k = static_cast<std::int64_t>(states[n].burning.size());
                auto k1 = static_cast<std::int64_t>(states[n + 1].burning.size());
                auto boundary = static_cast<std::int64_t>(outer_boundary(z2, states[n].burning).size());
                out.require(k1 >= k + boundary - states[n + 1].spent,
                            fmt::format("{} from B_{}: inequality fails at n = {}", name, r, n));
            }
            // the recurrence charges g(n+1) of the game against its step n
            std::vector<double> shifted(spent.begin() + 1, spent.end());
            if (shifted.empty())
                shifted.push_back(0);
            auto g = Cumulative::from_values(shifted, "simulated");
            auto t = iterate_recurrence({profile, g, static_cast<double>(states[0].burning.size())},
                                        static_cast<std::int64_t>(states.size()) - 1);
            for (std::size_t n = 0; n < t.k_hat.size() && n < states.size(); ++n) {
                if (t.k_hat[n] > certified)
                    break;
                out.require(t.k_hat[n] <= static_cast<double>(states[n].burning.size()) + 1e-9,
                            fmt::format("{} from B_{}: trajectory exceeds k_{}", name, r, n));
                ++compared;
            }
        }
    }
    if (out.ok)
        out.detail = fmt::format("9 runs, {} trajectory points compared", compared);
    return out;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism()
{
    Outcome out;
    using nlohmann::json;
    std::vector<json> configs = {
        {{"action", "simulate"}, {"budget", {{"kind", "constant"}, {"c", 12}}}, {"initial", {{"ball", 3}}}},
        {{"action", "simulate"}, {"graph", "heisenberg"}, {"strategy", "greedy"}, {"horizon", 10}},
        {{"action", "growth"}, {"graph", "grigorchuk"}, {"radius", 8}},
        {{"action", "phi"}, {"k_max", 5}},
        {{"action", "spherical"}, {"graph", "lamplighter"}, {"n_max", 4}},
        {{"action", "recurrence"}, {"profile", {{"kind", "exact_table"}, {"k_max", 8}}}, {"k0", 5}},
        {{"action", "constants"},
         {"profile", {{"kind", "poly"}, {"c", 1}, {"d", 3}}},
         {"budget", {{"kind", "poly_floor"}, {"c", 1}, {"p", 0.5}}}},
        {{"action", "threshold"}, {"class", "stretched"}, {"alpha", 0.5}},
    };
    auto root = fs::temp_directory_path() / "firelab_acceptance";
    fs::remove_all(root);
    int files = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        auto c = config_from_json(configs[i]);
        auto a = run_config(c, root / fmt::format("a{}", i));
        auto b = run_config(c, root / fmt::format("b{}", i));
        out.require(a.exit_code == 0 && b.exit_code == 0, "run failed: " + configs[i].dump());
        out.require(a.artifacts == b.artifacts, "artifact lists differ");
        for (const auto& name : a.artifacts) {
            out.require(slurp(root / fmt::format("a{}", i) / name) == slurp(root / fmt::format("b{}", i) / name),
                        fmt::format("{} differs for {}", name, configs[i].dump()));
            ++files;
        }
        // the manifest differs only in its timestamps
        auto ma = json::parse(slurp(root / fmt::format("a{}", i) / "manifest.json"));
        auto mb = json::parse(slurp(root / fmt::format("b{}", i) / "manifest.json"));
        for (auto* m : {&ma, &mb}) {
            m->erase("started");
            m->erase("finished");
        }
        out.require(ma == mb, "manifests differ beyond timestamps");
    }
    fs::remove_all(root);
    if (out.ok)
        out.detail = fmt::format("{} configs, {} artifacts byte-identical", configs.size(), files);
    return out;
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        double limit_s; // 0 for no time limit
        std::function<Outcome()> body;
    };
    std::vector<Criterion> criteria = {
        {1, "growth tables", 5, growth_tables},
        {2, "isoperimetry oracle", 60, isoperimetry_oracle},
        {3, "spherical isoperimetry", 300, spherical},
        {4, "sphere wall on Z^2", 10, sphere_wall},
        {5, "canopy with one firefighter", 10, canopy},
        {6, "polynomial certificate", 30, poly_certificate},
        {7, "polynomial boundary not certified", 0, poly_boundary},
        {8, "stretched certificate", 30, stretched_certificate},
        {9, "cross-validation", 60, cross_validation},
        {10, "determinism", 0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("threw: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            o.ok = false;
            o.detail = fmt::format("took {:.1f} s, limit {:.0f} s; {}", secs, c.limit_s, o.detail);
        }
        failures += !o.ok;
        std::cout << fmt::format("criterion {:>2} {:<36} {} ({:.2f} s) {}\n", c.id, c.name, o.ok ? "PASS" : "FAIL",
                                 secs, o.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
