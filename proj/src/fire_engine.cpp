#include "firelab/fire_engine.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include <fmt/format.h>

#include "firelab/kernels.hpp"

namespace firelab {

FireState FireState::ignite(VertexSet initial, VertexSet protected_vertices)
{
    FireState s;
    s.front = initial;
    s.burning = std::move(initial);
    s.protected_vertices = std::move(protected_vertices);
    return s;
}

VertexSet threatened(const GraphSpec& spec, const FireState& state)
{
    std::vector<Vertex> front(state.front.begin(), state.front.end());
    auto lists = kernels::neighbor_lists(spec, front);
    VertexSet out;
    for (auto& list : lists) {
        for (auto& u : list) {
            if (!state.burning.contains(u) && !state.protected_vertices.contains(u))
                out.insert(std::move(u));
        }
    }
    return out;
}

VertexSet GreedySaturation::choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance)
{
    if (allowance <= 0)
        return {};
    auto candidates = threatened(spec, state);
    std::vector<std::pair<std::int64_t, Vertex>> ranked;
    ranked.reserve(candidates.size());
    for (const auto& v : candidates) {
        std::int64_t hot = 0;
        for (const auto& u : neighbors(spec, v))
            hot += state.burning.contains(u) ? 1 : 0;
        ranked.emplace_back(hot, v);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    VertexSet out;
    for (auto& [hot, v] : ranked) {
        if (static_cast<std::int64_t>(out.size()) >= allowance)
            break;
        out.insert(std::move(v));
    }
    return out;
}

WallPlan plan_sphere_wall(const GraphSpec& spec, int fire_radius, const Budget& f, int max_radius,
                          const Limits& limits)
{
    WallPlan plan;
    plan.fire_radius = fire_radius;
    if (fire_radius < 0)
        fail(ErrorKind::Precondition, "fire radius must be nonnegative");

    Ball b = Ball::origin(spec);
    try {
        while (b.radius() < fire_radius)
            b.extend(spec, limits);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Capacity)
            throw;
        plan.reason = e.what();
        return plan;
    }

    std::int64_t cumulative = 0;
    for (int m = fire_radius + 1; m <= max_radius; ++m) {
        try {
            b.extend(spec, limits);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Capacity)
                throw;
            plan.reason = fmt::format("no wall up to radius {}: {}", m - 1, e.what());
            return plan;
        }
        plan.searched_radius = m;
        // the fire reaches S_m in the spread of turn m - r, after that turn's protections
        cumulative += f(m - fire_radius);
        auto need = static_cast<std::int64_t>(b.sphere_size(m));
        if (cumulative < need)
            continue;
        plan.feasible = true;
        plan.radius = m;
        auto sphere = b.sphere(m);
        plan.wall.assign(sphere.begin(), sphere.end());
        std::int64_t remaining = need;
        std::int64_t carry = 0;
        for (int t = 1; t <= m - fire_radius; ++t) {
            std::int64_t allowance = f(t) + (f.banking() ? carry : 0);
            std::int64_t take = std::min(allowance, remaining);
            plan.per_turn.push_back(take);
            remaining -= take;
            carry = f.banking() ? allowance - take : 0;
        }
        return plan;
    }
    plan.reason = fmt::format("no sphere S_m with {} < m <= {} fits the budget {}", fire_radius, max_radius,
                              f.describe());
    return plan;
}

SphereWall::SphereWall(const Budget& f, std::optional<int> fixed_radius, int search_margin, Limits limits)
    : budget_(f), fixed_radius_(fixed_radius), search_margin_(search_margin), limits_(limits)
{
}

void SphereWall::reset(const GraphSpec& spec, const FireState& initial)
{
    plan_ = WallPlan{};
    ball_.reset();
    adjacency_.clear();

    // radius of the smallest ball around the root holding the fire
    Ball b = Ball::origin(spec);
    int fire_radius = -1;
    try {
        while (fire_radius < 0) {
            bool all = std::all_of(initial.burning.begin(), initial.burning.end(),
                                   [&](const Vertex& v) { return b.index_of(v).has_value(); });
            if (all) {
                fire_radius = b.radius();
                break;
            }
            if (b.radius() >= search_margin_) {
                plan_.reason = "initial fire lies outside the search radius";
                return;
            }
            b.extend(spec, limits_);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Capacity)
            throw;
        plan_.reason = e.what();
        return;
    }

    if (fixed_radius_) {
        plan_.fire_radius = fire_radius;
        plan_.searched_radius = *fixed_radius_;
        if (*fixed_radius_ <= fire_radius) {
            plan_.reason = fmt::format("wall radius {} does not enclose the fire radius {}", *fixed_radius_, fire_radius);
            return;
        }
        plan_.feasible = true;
        plan_.radius = *fixed_radius_;
    } else {
        plan_ = plan_sphere_wall(spec, fire_radius, budget_, fire_radius + search_margin_, limits_);
        if (!plan_.feasible)
            return;
    }
    ball_ = ball(spec, plan_.radius, limits_);
    auto sphere = ball_->sphere(plan_.radius);
    plan_.wall.assign(sphere.begin(), sphere.end());
    adjacency_ = inner_adjacency(spec, *ball_);
}

VertexSet SphereWall::choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance)
{
    if (!plan_.feasible)
        return fallback_.choose(spec, state, allowance);
    if (allowance <= 0)
        return {};

    // breadth-first distances from the fire inside B_m, through unprotected vertices
    constexpr int kFar = std::numeric_limits<int>::max();
    std::vector<int> dist(ball_->size(), kFar);
    std::deque<std::uint32_t> queue;
    for (const auto& v : state.burning) {
        if (auto idx = ball_->index_of(v)) {
            dist[*idx] = 0;
            queue.push_back(static_cast<std::uint32_t>(*idx));
        }
    }
    while (!queue.empty()) {
        auto i = queue.front();
        queue.pop_front();
        for (auto j : adjacency_[i]) {
            if (dist[j] != kFar || state.protected_vertices.contains(ball_->vertex(j)))
                continue;
            dist[j] = dist[i] + 1;
            queue.push_back(j);
        }
    }

    std::vector<std::pair<int, std::size_t>> pending;
    std::size_t base = ball_->sphere_begin(plan_.radius);
    for (std::size_t i = 0; i < plan_.wall.size(); ++i) {
        const auto& w = plan_.wall[i];
        if (state.protected_vertices.contains(w) || state.burning.contains(w))
            continue;
        pending.emplace_back(dist[base + i], i);
    }
    std::sort(pending.begin(), pending.end());
    VertexSet out;
    for (auto [d, i] : pending) {
        if (static_cast<std::int64_t>(out.size()) >= allowance)
            break;
        out.insert(plan_.wall[i]);
    }
    return out;
}

VertexSet CanopyCut::choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance)
{
    if (spec.family() != Family::Canopy)
        fail(ErrorKind::Unsupported, "canopy_cut only plays on the canopy tree");
    if (allowance <= 0 || state.burning.empty())
        return {};
    std::int64_t reach = 0;
    for (const auto& v : state.burning)
        reach = std::max(reach, v.key[0]);
    Vertex cut{{reach + 1, -1, 0}, {}};
    if (state.protected_vertices.contains(cut))
        return {};
    return {cut};
}

VertexSet ScriptedStrategy::choose(const GraphSpec&, const FireState& state, std::int64_t)
{
    auto it = schedule_.find(state.time + 1);
    return it == schedule_.end() ? VertexSet{} : it->second;
}

std::unique_ptr<Strategy> make_strategy(std::string_view name, const Budget& f, std::optional<int> wall_radius,
                                        const Limits& limits)
{
    if (name == "null")
        return std::make_unique<NullStrategy>();
    if (name == "greedy")
        return std::make_unique<GreedySaturation>();
    if (name == "sphere_wall")
        return std::make_unique<SphereWall>(f, wall_radius, 48, limits);
    if (name == "canopy_cut")
        return std::make_unique<CanopyCut>();
    fail(ErrorKind::Config, fmt::format("unknown strategy '{}'", name));
}

FireState step(const GraphSpec& spec, const FireState& state, Strategy& strategy, const Budget& f)
{
    std::int64_t allowance = f(state.time + 1) + (f.banking() ? state.carry : 0);
    auto chosen = strategy.choose(spec, state, allowance);
    if (static_cast<std::int64_t>(chosen.size()) > allowance)
        fail(ErrorKind::StrategyViolation,
             fmt::format("{} placed {} protections with allowance {} at turn {}", strategy.name(), chosen.size(),
                         allowance, state.time + 1));
    for (const auto& v : chosen) {
        validate(spec, v);
        if (state.burning.contains(v))
            fail(ErrorKind::StrategyViolation,
                 fmt::format("{} protected burning vertex {}", strategy.name(), to_text(spec, v)));
        if (state.protected_vertices.contains(v))
            fail(ErrorKind::StrategyViolation,
                 fmt::format("{} protected {} twice", strategy.name(), to_text(spec, v)));
    }

    FireState next = state;
    auto placed = static_cast<std::int64_t>(chosen.size());
    next.protected_vertices.insert(chosen.begin(), chosen.end());
    next.spent += placed;
    next.carry = f.banking() ? allowance - placed : 0;

    auto spread = threatened(spec, next);
    next.burning.insert(spread.begin(), spread.end());
    next.front = std::move(spread);
    next.time += 1;
    return next;
}

bool is_contained(const GraphSpec& spec, const FireState& state)
{
    return threatened(spec, state).empty();
}

Trace run(const GraphSpec& spec, const VertexSet& initial, Strategy& strategy, const Budget& f, std::int64_t horizon,
          const Limits& limits, FireState* final_state)
{
    if (initial.empty())
        fail(ErrorKind::Precondition, "the initial fire must be nonempty");
    if (horizon < 1)
        fail(ErrorKind::Precondition, "horizon must be at least 1");
    for (const auto& v : initial)
        validate(spec, v);

    auto state = FireState::ignite(initial);
    strategy.reset(spec, state);

    Trace trace;
    bool contained = is_contained(spec, state);
    trace.rows.push_back({0, static_cast<std::int64_t>(state.burning.size()), 0, 0, contained});
    while (!contained && state.time < horizon) {
        auto before = state.spent;
        state = step(spec, state, strategy, f);
        contained = is_contained(spec, state);
        trace.rows.push_back({state.time, static_cast<std::int64_t>(state.burning.size()), state.spent - before,
                              state.spent, contained});
        if (state.burning.size() > limits.max_vertices) {
            trace.step = state.time;
            trace.total_burned = static_cast<std::int64_t>(state.burning.size());
            trace.total_protected = static_cast<std::int64_t>(state.protected_vertices.size());
            throw TraceCapacityError(fmt::format("fire exceeded max_vertices={} at turn {}", limits.max_vertices,
                                                 state.time),
                                     std::move(trace));
        }
    }
    trace.verdict = contained ? Verdict::Contained : Verdict::Undecided;
    trace.step = state.time;
    trace.total_burned = static_cast<std::int64_t>(state.burning.size());
    trace.total_protected = static_cast<std::int64_t>(state.protected_vertices.size());
    if (final_state)
        *final_state = std::move(state);
    return trace;
}

void write_trace_csv(std::ostream& out, const Trace& trace)
{
    out << "n,k_n,protected_this_turn,g_n,contained\n";
    for (const auto& r : trace.rows)
        out << fmt::format("{},{},{},{},{}\n", r.n, r.burning, r.protected_this_turn, r.spent, r.contained ? 1 : 0);
}

nlohmann::json verdict_json(const Trace& trace)
{
    return {
        {"verdict", trace.verdict == Verdict::Contained ? "contained" : "undecided"},
        {"step", trace.step},
        {"total_burned", trace.total_burned},
        {"total_protected", trace.total_protected},
    };
}

} // namespace firelab
