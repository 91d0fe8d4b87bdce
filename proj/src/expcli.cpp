#include "firelab/expcli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "firelab/fire_engine.hpp"

namespace firelab {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what)
{
    fail(ErrorKind::Config, what);
}

// Reads typed keys from one JSON object and remembers which were consulted,
// so that finish() can reject everything else.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object())
            bad_config(fmt::format("{} must be a JSON object", where_));
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            bad_config(fmt::format("{}.{} must be an integer", where_, key));
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi))
            bad_config(fmt::format("{}.{} must lie in [{}, {}]", where_, key, lo, hi));
        auto x = v.get<std::int64_t>();
        if (x < lo || x > hi)
            bad_config(fmt::format("{}.{} must lie in [{}, {}]", where_, key, lo, hi));
        return x;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            bad_config(fmt::format("{}.{} must be a nonnegative integer", where_, key));
        return v.get<std::uint64_t>();
    }

    double real(const std::string& key, double fallback, double lo, double hi)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number())
            bad_config(fmt::format("{}.{} must be a number", where_, key));
        auto x = v.get<double>();
        if (!(x >= lo && x <= hi))
            bad_config(fmt::format("{}.{} must lie in [{}, {}]", where_, key, lo, hi));
        return x;
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean())
            bad_config(fmt::format("{}.{} must be a boolean", where_, key));
        return v.get<bool>();
    }

    std::string text(const std::string& key, std::string fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string())
            bad_config(fmt::format("{}.{} must be a string", where_, key));
        return v.get<std::string>();
    }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key))
                bad_config(fmt::format("unknown key '{}' in {}", key, where_));
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

constexpr double kHuge = 1e300;
constexpr std::int64_t kMaxInt = std::numeric_limits<std::int64_t>::max();

PhiMode parse_mode(const std::string& text)
{
    if (text == "connected")
        return PhiMode::Connected;
    if (text == "all-subsets")
        return PhiMode::AllSubsets;
    bad_config(fmt::format("unknown mode '{}' (connected, all-subsets)", text));
}

std::string iso_utc_now()
{
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

std::string ratio_text(const Ratio& r)
{
    return fmt::format("{}/{}", r.numerator(), r.denominator());
}

// Artifacts are written whole and recorded in order.
class Artifacts {
public:
    explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content)
    {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out)
            fail(ErrorKind::Config, fmt::format("cannot write {}", (dir_ / name).string()));
        out << content;
        if (std::find(names_.begin(), names_.end(), name) == names_.end())
            names_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

json phi_record(const GraphSpec& spec, const PhiResult& r)
{
    return {{"kind", "phi"},           {"k", r.k},           {"value", r.value},
            {"witness", to_text(spec, r.witness)}, {"window", r.window}, {"mode", to_string(r.mode)}};
}

json spherical_record(const GraphSpec& spec, const SphericalReport& r)
{
    return {{"n", r.n},
            {"subset", to_text(spec, r.subset)},
            {"forward", r.forward},
            {"sphere", r.sphere},
            {"next_sphere", r.next_sphere},
            {"ratio", ratio_text(r.ratio)},
            {"threshold", ratio_text(r.threshold)},
            {"satisfied", r.satisfied}};
}

VertexSet initial_fire(const ExperimentConfig& c, const GraphSpec& spec)
{
    VertexSet out;
    if (c.initial.ball_radius) {
        auto b = ball(spec, *c.initial.ball_radius, c.limits());
        out.insert(b.vertices().begin(), b.vertices().end());
    }
    for (const auto& text : c.initial.vertices)
        out.insert(parse_vertex(spec, text));
    return out;
}

void run_simulate(const ExperimentConfig& c, const GraphSpec& spec, Artifacts& art)
{
    auto fire = initial_fire(c, spec);
    auto strategy = make_strategy(c.strategy, c.budget, c.wall_radius, c.limits());
    auto emit = [&](const Trace& trace) {
        std::ostringstream csv;
        write_trace_csv(csv, trace);
        art.write("trace.csv", csv.str());
    };
    Trace trace;
    try {
        trace = run(spec, fire, *strategy, c.budget, c.horizon, c.limits());
    } catch (const TraceCapacityError& e) {
        emit(e.partial());
        throw;
    }
    emit(trace);
    art.write_json("verdict.json", verdict_json(trace));
    if (auto* wall = dynamic_cast<SphereWall*>(strategy.get())) {
        const auto& p = wall->plan();
        art.write_json("wall.json", {{"feasible", p.feasible},
                                     {"fire_radius", p.fire_radius},
                                     {"radius", p.radius},
                                     {"wall_size", p.wall.size()},
                                     {"per_turn", p.per_turn},
                                     {"searched_radius", p.searched_radius},
                                     {"reason", p.reason}});
    }
}

void run_growth(const ExperimentConfig& c, const GraphSpec& spec, Artifacts& art)
{
    auto t = growth_table(spec, c.radius, c.limits());
    std::string csv = "n,v,s,vpp\n";
    for (int n = 0; n <= t.radius; ++n) {
        csv += fmt::format("{},{},{},{}\n", n, t.v[n], t.s[n], n >= 2 ? fmt::format("{}", t.vpp[n]) : "");
    }
    art.write("growth.csv", csv);
    art.write_json("growth.json", {{"graph", spec.name()},
                                   {"radius", t.radius},
                                   {"vpp_nonnegative_nondecreasing", t.vpp_nonnegative_nondecreasing}});
}

void run_phi(const ExperimentConfig& c, const GraphSpec& spec, Artifacts& art)
{
    SearchLimits limits{c.limits(), c.max_nodes};
    json records = json::array();
    std::string csv = "k,value\n";
    for (std::int64_t k = 1; k <= c.k_max; ++k) {
        auto r = phi_exact(spec, static_cast<std::size_t>(k), c.window, c.mode, limits);
        records.push_back(phi_record(spec, r));
        csv += fmt::format("{},{}\n", k, r.value);
    }
    art.write("phi.csv", csv);
    art.write_json("phi.json", records);
}

void run_spherical(const ExperimentConfig& c, const GraphSpec& spec, Artifacts& art)
{
    SearchLimits limits{c.limits(), c.max_nodes};
    json results = json::array();
    for (int n = c.n_min; n <= c.n_max; ++n) {
        auto b = ball(spec, n + 1, c.limits());
        auto cap = std::min<std::size_t>(static_cast<std::size_t>(c.max_k), b.sphere_size(n));
        auto found = spherical_violation_search(spec, n, cap, limits);
        json entry = {{"n", n}, {"max_k", cap}, {"violation", nullptr}};
        if (found) {
            auto replay = spherical_check(spec, n, found->subset, c.limits());
            entry["violation"] = spherical_record(spec, *found);
            entry["replayed"] = !replay.satisfied && replay.ratio == found->ratio;
        }
        results.push_back(entry);
        if (found)
            break;
    }
    art.write_json("spherical.json", results);
}

Cumulative cumulative_for(const ExperimentConfig& c)
{
    return Cumulative::from_budget(c.budget);
}

void run_recurrence(const ExperimentConfig& c, const GraphSpec& spec, Artifacts& art)
{
    SearchLimits limits{c.limits(), c.max_nodes};
    auto profile = build_profile(c.profile, spec, limits);
    auto t = iterate_recurrence({profile, cumulative_for(c), c.k0}, c.steps);
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    art.write("trajectory.csv", csv.str());
    art.write_json("recurrence.json",
                   {{"profile", describe(profile)},
                    {"status", t.status == RecurrenceStatus::Survived ? "survived" : "collapsed"},
                    {"collapsed_at", t.status == RecurrenceStatus::Survived ? json(nullptr) : json(t.collapsed_at)},
                    {"cause", t.cause}});
}

void run_constants(const ExperimentConfig& c, const GraphSpec&, Artifacts& art)
{
    Precision precision{c.precision_bits};
    auto g = cumulative_for(c);
    const auto& p = c.profile;
    if (p.kind == "poly") {
        auto r = find_poly_constants(p.c, p.d, g, c.N, c.poly_search, precision);
        json search = {{"candidates", r.candidates},
                       {"best_margin", r.best_margin},
                       {"best_F", r.best_F},
                       {"best_R", r.best_R},
                       {"diagnostics", r.diagnostics}};
        if (r.certificate) {
            auto replay = verify_poly_certificate(*r.certificate, g, precision);
            search["replay"] = {{"ok", replay.ok}, {"min_margin", replay.min_margin}, {"rechecked", replay.rechecked}};
            art.write_json("certificate.json", to_json(*r.certificate));
        }
        art.write_json("search.json", search);
        if (!r.certificate)
            fail(ErrorKind::Infeasible, r.diagnostics);
        return;
    }
    if (p.kind == "stretched" || p.kind == "grig_log") {
        StretchedParams sp{p.c, p.kind == "grig_log" ? 1.0 : p.alpha, c.beta};
        auto r = c.perturb ? find_stretched_constants_perturbed(sp, g, c.N, c.stretched_search, precision)
                           : find_stretched_constants(sp, g, c.N, c.stretched_search, precision);
        json search = {{"aux_floor", r.aux_floor ? json(*r.aux_floor) : json(nullptr)},
                       {"best_n0", r.best_n0},
                       {"best_C", r.best_C},
                       {"diagnostics", r.diagnostics}};
        if (c.perturb)
            search["beta_used"] = perturbed_beta(sp.alpha, sp.beta);
        if (r.certificate) {
            auto replay = verify_stretched_certificate(*r.certificate, g, precision);
            search["replay"] = {{"ok", replay.ok}, {"min_margin", replay.min_margin}, {"rechecked", replay.rechecked}};
            art.write_json("certificate.json", to_json(*r.certificate));
        }
        art.write_json("search.json", search);
        if (!r.certificate)
            fail(ErrorKind::Infeasible, r.diagnostics);
        return;
    }
    fail(ErrorKind::Config, fmt::format("constants needs a poly, stretched or grig_log profile, not {}", p.kind));
}

void run_threshold(const ExperimentConfig& c, const GraphSpec&, Artifacts& art)
{
    ThresholdReport r;
    if (c.growth_class == "poly")
        r = threshold_report(GrowthClass::Poly, c.d);
    else if (c.growth_class == "stretched")
        r = threshold_report(GrowthClass::Stretched, c.alpha);
    else if (c.growth_class == "grigorchuk")
        r = threshold_report(GrowthClass::Grigorchuk);
    else
        r = threshold_report(GrowthClass::Intermediate);
    art.write_json("threshold.json", to_json(r));
}

} // namespace

// Graphs, budgets, profiles ---------------------------------------------------------

GraphSpec parse_graph(std::string_view text, int signature_level)
{
    if (text == "heisenberg")
        return GraphSpec::heisenberg();
    if (text == "lamplighter")
        return GraphSpec::lamplighter();
    if (text == "canopy")
        return GraphSpec::canopy();
    if (text.starts_with("zd(") && text.ends_with(")")) {
        auto inner = std::string(text.substr(3, text.size() - 4));
        if (inner.empty() || inner.size() > 2 || !std::all_of(inner.begin(), inner.end(), ::isdigit))
            bad_config(fmt::format("bad dimension in graph '{}'", text));
        int d = std::stoi(inner);
        if (d < 1 || d > 16)
            bad_config(fmt::format("zd dimension must lie in [1, 16], got {}", d));
        return GraphSpec::zd(d);
    }
    if (text.starts_with("grigorchuk")) {
        auto rest = text.substr(std::string_view("grigorchuk").size());
        if (rest.empty())
            return GraphSpec::grigorchuk(grig::Omega::first_group(), signature_level);
        auto open = rest.find('(');
        if (open == std::string_view::npos || !rest.ends_with(")"))
            bad_config(fmt::format("grigorchuk sequence must read pre(period), got '{}'", rest));
        try {
            auto omega = grig::Omega::parse(rest.substr(0, open), rest.substr(open + 1, rest.size() - open - 2));
            return GraphSpec::grigorchuk(omega, signature_level);
        } catch (const Error& e) {
            bad_config(e.what());
        }
    }
    bad_config(fmt::format("unknown graph '{}'", text));
}

json budget_to_json(const Budget& f)
{
    json j;
    switch (f.kind()) {
    case Budget::Kind::Constant:
        j = {{"kind", "constant"}, {"c", static_cast<std::int64_t>(f.c())}};
        break;
    case Budget::Kind::PolyFloor:
        j = {{"kind", "poly_floor"}, {"c", f.c()}, {"p", f.exponent()}};
        break;
    case Budget::Kind::StretchedFloor:
        j = {{"kind", "stretched_floor"}, {"c", f.c()}, {"beta", f.exponent()}};
        break;
    case Budget::Kind::Explicit:
        j = {{"kind", "explicit"}, {"values", f.values()}};
        break;
    }
    j["banking"] = f.banking();
    return j;
}

Budget budget_from_json(const json& j)
{
    Reader r(j, "budget");
    auto kind = r.text("kind", "constant");
    Budget f;
    if (kind == "constant") {
        f = Budget::constant(r.integer("c", 1, 0, Budget::kAllowanceCap));
    } else if (kind == "poly_floor") {
        auto c = r.real("c", 1, 0, kHuge);
        f = Budget::poly_floor(c, r.real("p", 1, 0, 64));
    } else if (kind == "stretched_floor") {
        auto c = r.real("c", 1, 0, kHuge);
        f = Budget::stretched_floor(c, r.real("beta", 0.5, 0, 1));
    } else if (kind == "explicit") {
        if (!r.has("values") || !r.raw("values").is_array())
            bad_config("budget.values must be an array of nonnegative integers");
        std::vector<std::int64_t> values;
        for (const auto& v : r.raw("values")) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                bad_config("budget.values must be an array of nonnegative integers");
            values.push_back(v.get<std::int64_t>());
        }
        f = Budget::explicit_values(std::move(values));
    } else {
        bad_config(fmt::format("unknown budget kind '{}'", kind));
    }
    f = f.with_banking(r.boolean("banking", false));
    r.finish();
    return f;
}

json profile_to_json(const ProfileSpec& p)
{
    json j = {{"kind", p.kind}};
    if (p.kind == "exact_table") {
        j["k_max"] = p.k_max;
        j["window"] = p.window;
        j["mode"] = to_string(p.mode);
        j["fallback"] = p.fallback;
        return j;
    }
    j["c"] = p.c;
    if (p.kind == "poly")
        j["d"] = p.d;
    if (p.kind == "stretched")
        j["alpha"] = p.alpha;
    return j;
}

ProfileSpec profile_from_json(const json& j)
{
    Reader r(j, "profile");
    ProfileSpec p;
    p.kind = r.text("kind", "poly");
    if (p.kind == "exact_table") {
        p.k_max = r.integer("k_max", p.k_max, 1, 64);
        p.window = static_cast<int>(r.integer("window", p.window, 0, 64));
        p.mode = parse_mode(r.text("mode", "connected"));
        p.fallback = r.boolean("fallback", p.fallback);
    } else if (p.kind == "poly" || p.kind == "stretched" || p.kind == "grig_log" || p.kind == "linear") {
        p.c = r.real("c", p.c, std::numeric_limits<double>::min(), kHuge);
        if (p.kind == "poly")
            p.d = static_cast<int>(r.integer("d", p.d, 2, 64));
        if (p.kind == "stretched")
            p.alpha = r.real("alpha", p.alpha, std::numeric_limits<double>::min(), 1);
    } else {
        bad_config(fmt::format("unknown profile kind '{}'", p.kind));
    }
    r.finish();
    return p;
}

PhiProfile build_profile(const ProfileSpec& p, const GraphSpec& spec, const SearchLimits& limits)
{
    if (p.kind == "poly")
        return make_poly(p.c, p.d);
    if (p.kind == "stretched")
        return make_stretched(p.c, p.alpha);
    if (p.kind == "grig_log")
        return make_grig_log(p.c);
    if (p.kind == "linear")
        return LinearProfile{p.c};
    ExactTableProfile table;
    for (std::int64_t k = 1; k <= p.k_max; ++k)
        table.values.emplace(k, phi_exact(spec, static_cast<std::size_t>(k), p.window, p.mode, limits));
    if (p.fallback && spec.family() == Family::ZD && spec.dimension() == 2)
        table.poly_fallback = std::pair{fitted_sqrt_constant(table), 2};
    return table;
}

// Configs ------------------------------------------------------------------------------

json config_to_json(const ExperimentConfig& c)
{
    json j = {{"action", c.action},         {"graph", c.graph},
              {"seed", c.seed},             {"out", c.out},
              {"max_vertices", c.max_vertices}, {"precision_bits", c.precision_bits}};
    if (c.graph.starts_with("grigorchuk"))
        j["signature_level"] = c.signature_level;
    const auto& a = c.action;
    if (a == "simulate") {
        j["strategy"] = c.strategy;
        j["budget"] = budget_to_json(c.budget);
        json init = json::object();
        if (c.initial.ball_radius)
            init["ball"] = *c.initial.ball_radius;
        if (!c.initial.vertices.empty())
            init["vertices"] = c.initial.vertices;
        j["initial"] = init;
        j["horizon"] = c.horizon;
        if (c.wall_radius)
            j["wall_radius"] = *c.wall_radius;
    } else if (a == "growth") {
        j["radius"] = c.radius;
    } else if (a == "phi") {
        j["k_max"] = c.k_max;
        j["window"] = c.window;
        j["mode"] = to_string(c.mode);
        j["max_nodes"] = c.max_nodes;
    } else if (a == "spherical") {
        j["n_min"] = c.n_min;
        j["n_max"] = c.n_max;
        j["max_k"] = c.max_k;
        j["max_nodes"] = c.max_nodes;
    } else if (a == "recurrence") {
        j["profile"] = profile_to_json(c.profile);
        j["budget"] = budget_to_json(c.budget);
        j["k0"] = c.k0;
        j["steps"] = c.steps;
        if (c.profile.kind == "exact_table")
            j["max_nodes"] = c.max_nodes;
    } else if (a == "constants") {
        j["profile"] = profile_to_json(c.profile);
        j["budget"] = budget_to_json(c.budget);
        j["N"] = c.N;
        if (c.profile.kind == "poly") {
            j["search"] = {{"r_steps", c.poly_search.r_steps}, {"f_doublings", c.poly_search.f_doublings}};
        } else {
            j["beta"] = c.beta;
            j["perturb"] = c.perturb;
            j["search"] = {{"c_doublings", c.stretched_search.c_doublings},
                           {"n0_max", c.stretched_search.n0_max}};
        }
    } else if (a == "threshold") {
        j["class"] = c.growth_class;
        if (c.growth_class == "poly")
            j["d"] = c.d;
        if (c.growth_class == "stretched")
            j["alpha"] = c.alpha;
    }
    return j;
}

ExperimentConfig config_from_json(const json& j, std::string_view action)
{
    Reader r(j, "config");
    ExperimentConfig c;
    c.action = r.text("action", std::string(action.empty() ? "growth" : action));
    if (!action.empty() && c.action != action)
        bad_config(fmt::format("config action '{}' disagrees with subcommand '{}'", c.action, action));
    if (std::find(kActions.begin(), kActions.end(), c.action) == kActions.end())
        bad_config(fmt::format("unknown action '{}'", c.action));

    c.graph = r.text("graph", c.graph);
    c.seed = r.unsigned_integer("seed", c.seed);
    c.out = r.text("out", c.out);
    c.max_vertices = r.integer("max_vertices", static_cast<std::int64_t>(c.max_vertices), 1, std::int64_t{1} << 40);
    c.precision_bits = static_cast<unsigned>(r.integer("precision_bits", c.precision_bits, 64, 1 << 16));
    if (c.graph.starts_with("grigorchuk"))
        c.signature_level = static_cast<int>(r.integer("signature_level", c.signature_level, 1, 20));
    parse_graph(c.graph, c.signature_level);

    const auto& a = c.action;
    if (a == "simulate") {
        c.strategy = r.text("strategy", c.strategy);
        if (c.strategy != "null" && c.strategy != "greedy" && c.strategy != "sphere_wall" && c.strategy != "canopy_cut")
            bad_config(fmt::format("unknown strategy '{}' (null, greedy, sphere_wall, canopy_cut)", c.strategy));
        if (r.has("budget"))
            c.budget = budget_from_json(r.raw("budget"));
        if (r.has("initial")) {
            Reader init(r.raw("initial"), "initial");
            c.initial.ball_radius.reset();
            if (init.has("ball"))
                c.initial.ball_radius = static_cast<int>(init.integer("ball", 0, 0, 1000));
            if (init.has("vertices")) {
                const auto& vs = init.raw("vertices");
                if (!vs.is_array())
                    bad_config("initial.vertices must be an array of vertex strings");
                for (const auto& v : vs) {
                    if (!v.is_string())
                        bad_config("initial.vertices must be an array of vertex strings");
                    c.initial.vertices.push_back(v.get<std::string>());
                }
            }
            init.finish();
            if (!c.initial.ball_radius && c.initial.vertices.empty())
                bad_config("initial needs a ball radius or a vertex list");
            auto spec = parse_graph(c.graph, c.signature_level);
            for (const auto& v : c.initial.vertices) {
                try {
                    parse_vertex(spec, v);
                } catch (const Error& e) {
                    throw Error(e.kind(), fmt::format("initial vertex '{}': {}", v, e.what()));
                }
            }
        }
        c.horizon = r.integer("horizon", c.horizon, 1, 1'000'000);
        if (r.has("wall_radius"))
            c.wall_radius = static_cast<int>(r.integer("wall_radius", 0, 1, 1000));
    } else if (a == "growth") {
        c.radius = static_cast<int>(r.integer("radius", c.radius, 2, 100'000));
    } else if (a == "phi") {
        c.k_max = r.integer("k_max", c.k_max, 1, 64);
        c.window = static_cast<int>(r.integer("window", c.window, 0, 64));
        c.mode = parse_mode(r.text("mode", to_string(c.mode)));
        c.max_nodes = r.unsigned_integer("max_nodes", c.max_nodes);
    } else if (a == "spherical") {
        c.n_min = static_cast<int>(r.integer("n_min", c.n_min, 0, 1000));
        c.n_max = static_cast<int>(r.integer("n_max", c.n_max, c.n_min, 1000));
        c.max_k = r.integer("max_k", c.max_k, 0, 64);
        c.max_nodes = r.unsigned_integer("max_nodes", c.max_nodes);
    } else if (a == "recurrence" || a == "constants") {
        if (r.has("profile"))
            c.profile = profile_from_json(r.raw("profile"));
        if (r.has("budget"))
            c.budget = budget_from_json(r.raw("budget"));
        if (a == "recurrence") {
            c.k0 = r.real("k0", c.k0, 1, kHuge);
            c.steps = r.integer("steps", c.steps, 0, 10'000'000);
            if (c.profile.kind == "exact_table")
                c.max_nodes = r.unsigned_integer("max_nodes", c.max_nodes);
        } else {
            c.N = r.integer("N", c.N, 0, 10'000'000);
            if (c.profile.kind == "exact_table" || c.profile.kind == "linear")
                bad_config(fmt::format("constants needs a poly, stretched or grig_log profile, not {}", c.profile.kind));
            bool poly = c.profile.kind == "poly";
            if (!poly) {
                c.beta = r.real("beta", c.beta, 0, 1);
                c.perturb = r.boolean("perturb", c.perturb);
            }
            if (r.has("search")) {
                Reader s(r.raw("search"), "search");
                if (poly) {
                    c.poly_search.r_steps = static_cast<int>(s.integer("r_steps", c.poly_search.r_steps, 1, 60));
                    c.poly_search.f_doublings =
                        static_cast<int>(s.integer("f_doublings", c.poly_search.f_doublings, 1, 60));
                } else {
                    c.stretched_search.c_doublings =
                        static_cast<int>(s.integer("c_doublings", c.stretched_search.c_doublings, 1, 1000));
                    c.stretched_search.n0_max = s.integer("n0_max", c.stretched_search.n0_max, 1, kMaxInt);
                }
                s.finish();
            }
        }
    } else if (a == "threshold") {
        c.growth_class = r.text("class", c.growth_class);
        if (c.growth_class == "poly")
            c.d = r.real("d", c.d, -kHuge, kHuge);
        else if (c.growth_class == "stretched")
            c.alpha = r.real("alpha", c.alpha, -kHuge, kHuge);
        else if (c.growth_class != "grigorchuk" && c.growth_class != "intermediate")
            bad_config(fmt::format("unknown growth class '{}' (poly, stretched, grigorchuk, intermediate)",
                                   c.growth_class));
    }
    r.finish();
    return c;
}

// Running --------------------------------------------------------------------------------

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::MalformedVertex:
    case ErrorKind::Unsupported: return 2;
    case ErrorKind::Capacity: return 3;
    case ErrorKind::Precondition: return 4;
    case ErrorKind::Infeasible: return 5;
    case ErrorKind::Domain:
    case ErrorKind::StrategyViolation: return 6;
    }
    return 1;
}

json error_record(ErrorKind kind, std::string_view message)
{
    return {{"error", to_string(kind)}, {"message", message}, {"exit_code", exit_code(kind)}};
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &size, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::string out;
    for (unsigned i = 0; i < size; ++i)
        out += fmt::format("{:02x}", digest[i]);
    return out;
}

RunOutcome run_config(const ExperimentConfig& config, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    Artifacts art(out_dir);
    RunOutcome outcome;
    auto canonical = config_to_json(config);
    auto started = iso_utc_now();
    art.write_json("config.json", canonical);

    auto record_error = [&](ErrorKind kind, const std::string& message) {
        outcome.exit_code = exit_code(kind);
        outcome.error = error_record(kind, message);
        art.write_json("error.json", *outcome.error);
        std::cerr << outcome.error->dump() << "\n";
    };
    try {
        auto spec = parse_graph(config.graph, config.signature_level);
        const auto& a = config.action;
        if (a == "simulate")
            run_simulate(config, spec, art);
        else if (a == "growth")
            run_growth(config, spec, art);
        else if (a == "phi")
            run_phi(config, spec, art);
        else if (a == "spherical")
            run_spherical(config, spec, art);
        else if (a == "recurrence")
            run_recurrence(config, spec, art);
        else if (a == "constants")
            run_constants(config, spec, art);
        else if (a == "threshold")
            run_threshold(config, spec, art);
        else
            bad_config(fmt::format("unknown action '{}'", a));
    } catch (const Error& e) {
        record_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        outcome.exit_code = 1;
        outcome.error = json{{"error", "internal"}, {"message", e.what()}, {"exit_code", 1}};
        art.write_json("error.json", *outcome.error);
        std::cerr << outcome.error->dump() << "\n";
    }

    outcome.artifacts = art.names();
    json manifest = {{"version", kToolVersion},
                     {"config_sha256", sha256_hex(canonical.dump())},
                     {"started", started},
                     {"finished", iso_utc_now()},
                     {"artifacts", outcome.artifacts}};
    art.write_json("manifest.json", manifest);
    return outcome;
}

int run_cli(const CliOptions& options)
{
    auto fail_early = [&](ErrorKind kind, const std::string& message) {
        std::cerr << error_record(kind, message).dump() << "\n";
        return exit_code(kind);
    };

    std::vector<json> raw;
    try {
        if (std::find(kActions.begin(), kActions.end(), options.action) == kActions.end())
            bad_config(fmt::format("unknown action '{}'", options.action));
        json doc = json::object();
        if (options.config_path) {
            std::ifstream in(*options.config_path);
            if (!in)
                bad_config(fmt::format("cannot read config {}", *options.config_path));
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                bad_config(fmt::format("config is not valid JSON: {}", e.what()));
            }
        }
        if (options.batch) {
            if (!doc.is_array() || doc.empty())
                bad_config("--batch needs a config file holding a nonempty JSON array");
            raw.assign(doc.begin(), doc.end());
        } else {
            raw.push_back(doc);
        }
    } catch (const Error& e) {
        return fail_early(e.kind(), e.what());
    }

    std::vector<ExperimentConfig> configs;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        try {
            auto c = config_from_json(raw[i], options.action);
            if (options.out)
                c.out = *options.out;
            if (options.max_vertices)
                c.max_vertices = *options.max_vertices;
            if (options.precision_bits) {
                if (*options.precision_bits < 64)
                    bad_config("--precision-bits must be at least 64");
                c.precision_bits = *options.precision_bits;
            }
            configs.push_back(std::move(c));
        } catch (const Error& e) {
            auto where = options.batch ? fmt::format("batch entry {}: ", i) : std::string();
            return fail_early(e.kind(), where + e.what());
        }
    }

    if (!options.batch)
        return run_config(configs[0], configs[0].out).exit_code;

    std::vector<int> codes(configs.size(), 0);
    const auto count = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < count; ++i) {
        auto dir = std::filesystem::path(configs[i].out) / fmt::format("run-{:03}", i);
        codes[i] = run_config(configs[i], dir).exit_code;
    }
    for (int code : codes) {
        if (code != 0)
            return code;
    }
    return 0;
}

} // namespace firelab
