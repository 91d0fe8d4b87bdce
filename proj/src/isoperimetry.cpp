#include "firelab/isoperimetry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>

#include <fmt/format.h>

#include "firelab/error.hpp"

namespace firelab {

namespace {

constexpr std::int64_t kInfinity = std::numeric_limits<std::int64_t>::max();

struct LocalGraph {
    Ball ball;
    std::size_t inside = 0; // |B_window|, a prefix of the ball
    std::vector<std::vector<std::uint32_t>> adj;
};

LocalGraph local_graph(const GraphSpec& spec, int window, const Limits& limits)
{
    LocalGraph g{ball(spec, window + 1, limits), 0, {}};
    g.inside = g.ball.sphere_begin(window + 1);
    g.adj = inner_adjacency(spec, g.ball);
    return g;
}

struct NodeBudget {
    std::uint64_t max_nodes;
    std::atomic<std::uint64_t> used{0};
};

// Incremental boundary bookkeeping plus the two enumerations. One instance
// per task in parallel runs, a single instance across all tasks serially.
class SubsetSearch {
public:
    SubsetSearch(const LocalGraph& g, std::size_t k, NodeBudget& budget, std::atomic<std::int64_t>* shared)
        : g_(g), k_(k), budget_(budget), shared_(shared), in_set_(g.ball.size(), 0), mark_(g.ball.size(), 0),
          count_(g.ball.size(), 0)
    {
    }

    ~SubsetSearch() { budget_.used.fetch_add(local_nodes_); }

    std::int64_t best() const { return best_; }
    const std::vector<std::uint32_t>& best_set() const { return best_set_; }

    void connected_task(std::uint32_t anchor, std::size_t branch)
    {
        add(anchor);
        mark_[anchor] = 1;
        if (k_ == 1) {
            evaluate();
        } else {
            auto ext = allowed_neighbors(anchor, anchor);
            for (auto u : ext)
                mark_[u] = 1;
            if (branch < ext.size()) {
                std::uint32_t w = ext[branch];
                add(w);
                std::vector<std::uint32_t> next(ext.begin() + static_cast<std::ptrdiff_t>(branch) + 1, ext.end());
                auto fresh = allowed_neighbors(w, anchor);
                for (auto u : fresh)
                    mark_[u] = 1;
                next.insert(next.end(), fresh.begin(), fresh.end());
                extend_connected(next, anchor);
                for (auto u : fresh)
                    mark_[u] = 0;
                remove(w);
            }
            for (auto u : ext)
                mark_[u] = 0;
        }
        mark_[anchor] = 0;
        remove(anchor);
    }

    /// number of top-level branches below `anchor`
    std::size_t branch_count(std::uint32_t anchor)
    {
        if (k_ == 1)
            return 1;
        mark_[anchor] = 1;
        auto n = allowed_neighbors(anchor, anchor).size();
        mark_[anchor] = 0;
        return n;
    }

    void combination_task(std::uint32_t first)
    {
        add(first);
        extend_combination(first + 1);
        remove(first);
    }

private:
    void add(std::uint32_t v)
    {
        if (count_[v] > 0)
            --boundary_;
        in_set_[v] = 1;
        members_.push_back(v);
        for (auto u : g_.adj[v]) {
            if (count_[u]++ == 0 && !in_set_[u])
                ++boundary_;
        }
    }

    void remove(std::uint32_t v)
    {
        for (auto u : g_.adj[v]) {
            if (--count_[u] == 0 && !in_set_[u])
                --boundary_;
        }
        in_set_[v] = 0;
        members_.pop_back();
        if (count_[v] > 0)
            ++boundary_;
    }

    std::vector<std::uint32_t> allowed_neighbors(std::uint32_t v, std::uint32_t anchor) const
    {
        std::vector<std::uint32_t> out;
        for (auto u : g_.adj[v]) {
            if (u < g_.inside && u >= anchor && !mark_[u] && std::find(out.begin(), out.end(), u) == out.end())
                out.push_back(u);
        }
        return out;
    }

    void tick()
    {
        if (++local_nodes_ >= 4096)
            flush();
    }

    void flush()
    {
        if (local_nodes_ == 0)
            return;
        auto total = budget_.used.fetch_add(local_nodes_) + local_nodes_;
        local_nodes_ = 0;
        // the node cap is checked in batches of 4096
        if (total > budget_.max_nodes)
            fail(ErrorKind::Capacity, fmt::format("subset search exceeded max_nodes={}", budget_.max_nodes));
    }

    // |dK| >= |dS| - (k - |S|): each added vertex absorbs at most one
    // boundary vertex of S.
    bool pruned() const
    {
        auto bound = boundary_ - static_cast<std::int64_t>(k_ - members_.size());
        if (bound >= best_)
            return true;
        return shared_ && bound > shared_->load(std::memory_order_relaxed);
    }

    void evaluate()
    {
        if (boundary_ < best_) {
            best_ = boundary_;
            best_set_ = members_;
            if (shared_) {
                auto cur = shared_->load();
                while (best_ < cur && !shared_->compare_exchange_weak(cur, best_)) {
                }
            }
        }
    }

    void extend_connected(const std::vector<std::uint32_t>& ext, std::uint32_t anchor)
    {
        tick();
        if (members_.size() == k_) {
            evaluate();
            return;
        }
        if (pruned())
            return;
        for (std::size_t i = 0; i < ext.size(); ++i) {
            std::uint32_t w = ext[i];
            add(w);
            std::vector<std::uint32_t> next(ext.begin() + static_cast<std::ptrdiff_t>(i) + 1, ext.end());
            auto fresh = allowed_neighbors(w, anchor);
            for (auto u : fresh)
                mark_[u] = 1;
            next.insert(next.end(), fresh.begin(), fresh.end());
            extend_connected(next, anchor);
            for (auto u : fresh)
                mark_[u] = 0;
            remove(w);
            // w stays marked: later branches exclude it
        }
    }

    void extend_combination(std::uint32_t start)
    {
        tick();
        if (members_.size() == k_) {
            evaluate();
            return;
        }
        if (pruned())
            return;
        auto need = k_ - members_.size();
        for (std::uint32_t i = start; i + need <= g_.inside; ++i) {
            add(i);
            extend_combination(i + 1);
            remove(i);
        }
    }

    const LocalGraph& g_;
    std::size_t k_;
    NodeBudget& budget_;
    std::atomic<std::int64_t>* shared_;
    std::vector<std::uint8_t> in_set_;
    std::vector<std::uint8_t> mark_;
    std::vector<std::uint32_t> count_;
    std::vector<std::uint32_t> members_;
    std::int64_t boundary_ = 0;
    std::int64_t best_ = kInfinity;
    std::vector<std::uint32_t> best_set_;
    std::uint64_t local_nodes_ = 0;
};

struct Task {
    std::uint32_t anchor;
    std::size_t branch;
};

PhiResult phi_on_local(const GraphSpec& spec, const LocalGraph& g, std::size_t k, int window, PhiMode mode,
                       const SearchLimits& limits, Execution exec)
{
    if (k < 1)
        fail(ErrorKind::Precondition, "phi_exact needs k >= 1");
    if (k > g.inside)
        fail(ErrorKind::Infeasible, fmt::format("k={} exceeds |B_{}|={}", k, window, g.inside));

    NodeBudget budget{limits.max_nodes};
    std::vector<Task> tasks;
    {
        SubsetSearch probe(g, k, budget, nullptr);
        if (mode == PhiMode::Connected) {
            // transitivity lets group families anchor at the root
            std::uint32_t anchors = spec.is_group() ? 1 : static_cast<std::uint32_t>(g.inside);
            for (std::uint32_t a = 0; a < anchors; ++a) {
                auto branches = probe.branch_count(a);
                for (std::size_t b = 0; b < branches; ++b)
                    tasks.push_back({a, b});
            }
        } else {
            for (std::uint32_t first = 0; first + k <= g.inside; ++first)
                tasks.push_back({first, 0});
        }
    }

    auto run_task = [&](SubsetSearch& search, const Task& t) {
        if (mode == PhiMode::Connected)
            search.connected_task(t.anchor, t.branch);
        else
            search.combination_task(t.anchor);
    };

    std::int64_t best = kInfinity;
    std::vector<std::uint32_t> best_set;

    if (exec == Execution::Serial) {
        SubsetSearch search(g, k, budget, nullptr);
        for (const auto& t : tasks)
            run_task(search, t);
        best = search.best();
        best_set = search.best_set();
    } else {
        std::atomic<std::int64_t> shared{kInfinity};
        std::vector<std::int64_t> values(tasks.size(), kInfinity);
        std::vector<std::vector<std::uint32_t>> sets(tasks.size());
        std::exception_ptr error;
        auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                SubsetSearch search(g, k, budget, &shared);
                run_task(search, tasks[static_cast<std::size_t>(i)]);
                values[static_cast<std::size_t>(i)] = search.best();
                sets[static_cast<std::size_t>(i)] = search.best_set();
            } catch (...) {
#pragma omp critical(firelab_phi_error)
                if (!error)
                    error = std::current_exception();
            }
        }
        if (error)
            std::rethrow_exception(error);
        // lowest task index among the minima reproduces the serial witness
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (values[i] < best) {
                best = values[i];
                best_set = sets[i];
            }
        }
    }

    if (best == kInfinity)
        fail(ErrorKind::Infeasible, fmt::format("no admissible {}-subset in window {}", k, window));

    PhiResult result;
    result.k = k;
    result.value = best;
    result.window = window;
    result.mode = mode;
    for (auto idx : best_set)
        result.witness.insert(g.ball.vertex(idx));
    return result;
}

} // namespace

VertexSet outer_boundary(const GraphSpec& spec, const VertexSet& set)
{
    VertexSet out;
    for (const auto& v : set) {
        for (auto& u : neighbors(spec, v)) {
            if (!set.contains(u))
                out.insert(std::move(u));
        }
    }
    return out;
}

const char* to_string(PhiMode mode)
{
    return mode == PhiMode::Connected ? "connected" : "all-subsets";
}

PhiResult phi_exact(const GraphSpec& spec, std::size_t k, int window, PhiMode mode, const SearchLimits& limits,
                    Execution exec)
{
    if (window < 0)
        fail(ErrorKind::Precondition, "window must be nonnegative");
    auto g = local_graph(spec, window, limits.graph);
    return phi_on_local(spec, g, k, window, mode, limits, exec);
}

PhiProfile make_poly(double c, int d)
{
    if (!(c > 0) || d < 2)
        fail(ErrorKind::Precondition, "Poly profile needs c > 0 and d >= 2");
    return PolyProfile{c, d};
}

PhiProfile make_stretched(double c, double alpha)
{
    if (!(c > 0) || !(alpha > 0 && alpha <= 1))
        fail(ErrorKind::Precondition, "Stretched profile needs c > 0 and 0 < alpha <= 1");
    return StretchedProfile{c, alpha};
}

PhiProfile make_grig_log(double c)
{
    if (!(c > 0))
        fail(ErrorKind::Precondition, "GrigLog profile needs c > 0");
    return GrigLogProfile{c};
}

double domain_floor(const PhiProfile& profile)
{
    struct Visitor {
        double operator()(const ExactTableProfile& t) const
        {
            return t.values.empty() ? 1.0 : static_cast<double>(t.values.begin()->first);
        }
        double operator()(const PolyProfile&) const { return 0.0; }
        double operator()(const StretchedProfile&) const { return 2.0; }
        double operator()(const GrigLogProfile&) const { return 2.0; }
        double operator()(const LinearProfile&) const { return 0.0; }
    };
    return std::visit(Visitor{}, profile);
}

double phi_profile_eval(const PhiProfile& profile, double k)
{
    if (!std::isfinite(k) || k < domain_floor(profile))
        fail(ErrorKind::Domain, fmt::format("k={} is below the domain of {}", k, describe(profile)));
    struct Visitor {
        double k;
        double operator()(const ExactTableProfile& t) const
        {
            if (t.poly_fallback && !t.values.empty() && k > static_cast<double>(t.values.rbegin()->first)) {
                auto [c, d] = *t.poly_fallback;
                return c * std::pow(k, static_cast<double>(d - 1) / d);
            }
            double rounded = std::round(k);
            if (std::abs(k - rounded) > 1e-9)
                fail(ErrorKind::Domain, fmt::format("exact table needs integral k, got {}", k));
            auto key = static_cast<std::int64_t>(rounded);
            if (auto it = t.values.find(key); it != t.values.end())
                return static_cast<double>(it->second.value);
            fail(ErrorKind::Domain, fmt::format("k={} is not covered by the exact table", key));
        }
        double operator()(const PolyProfile& p) const
        {
            return p.c * std::pow(k, static_cast<double>(p.d - 1) / p.d);
        }
        double operator()(const StretchedProfile& p) const
        {
            return p.c * k / std::pow(std::log(k), 1.0 / p.alpha);
        }
        double operator()(const GrigLogProfile& p) const { return p.c * k / std::log(k); }
        double operator()(const LinearProfile& p) const { return p.c * k; }
    };
    return std::visit(Visitor{k}, profile);
}

std::string describe(const PhiProfile& profile)
{
    struct Visitor {
        std::string operator()(const ExactTableProfile& t) const
        {
            std::string out = fmt::format("exact_table[{}]", t.values.size());
            if (t.poly_fallback)
                out += fmt::format("+poly({},{})", t.poly_fallback->first, t.poly_fallback->second);
            return out;
        }
        std::string operator()(const PolyProfile& p) const { return fmt::format("poly({},{})", p.c, p.d); }
        std::string operator()(const StretchedProfile& p) const
        {
            return fmt::format("stretched({},{})", p.c, p.alpha);
        }
        std::string operator()(const GrigLogProfile& p) const { return fmt::format("grig_log({})", p.c); }
        std::string operator()(const LinearProfile& p) const { return fmt::format("linear({})", p.c); }
    };
    return std::visit(Visitor{}, profile);
}

double fitted_sqrt_constant(const ExactTableProfile& table)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [k, r] : table.values)
        best = std::min(best, static_cast<double>(r.value) / std::sqrt(static_cast<double>(k)));
    return best;
}

SphericalReport spherical_check(const GraphSpec& spec, int n, const VertexSet& subset, const Limits& limits)
{
    if (subset.empty())
        fail(ErrorKind::Domain, "spherical_check needs a nonempty subset");
    if (n < 0)
        fail(ErrorKind::Domain, "sphere radius must be nonnegative");
    auto b = ball(spec, n + 1, limits);
    for (const auto& v : subset) {
        auto idx = b.index_of(v);
        if (!idx || b.distance(*idx) != n)
            fail(ErrorKind::Domain, fmt::format("{} is not on S_{}", to_text(spec, v), n));
    }
    VertexSet forward;
    for (const auto& v : subset) {
        for (auto& u : neighbors(spec, v)) {
            auto idx = b.index_of(u);
            if (idx && b.distance(*idx) == n + 1)
                forward.insert(std::move(u));
        }
    }
    SphericalReport r;
    r.n = n;
    r.subset = subset;
    r.forward = static_cast<std::int64_t>(forward.size());
    r.sphere = static_cast<std::int64_t>(b.sphere_size(n));
    r.next_sphere = static_cast<std::int64_t>(b.sphere_size(n + 1));
    r.ratio = Ratio(r.forward, static_cast<std::int64_t>(subset.size()));
    r.threshold = Ratio(r.next_sphere, r.sphere);
    r.satisfied = r.ratio >= r.threshold;
    return r;
}

std::optional<SphericalReport> spherical_violation_search(const GraphSpec& spec, int n, std::size_t max_k,
                                                          const SearchLimits& limits)
{
    if (n < 0)
        fail(ErrorKind::Domain, "sphere radius must be nonnegative");
    auto b = ball(spec, n + 1, limits.graph);
    std::size_t base = b.sphere_begin(n);
    std::size_t size = b.sphere_size(n);
    if (max_k > size)
        fail(ErrorKind::Domain, fmt::format("max_k={} exceeds |S_{}|={}", max_k, n, size));
    auto next_base = b.sphere_begin(n + 1);
    auto s_n = static_cast<std::int64_t>(size);
    auto s_next = static_cast<std::int64_t>(b.sphere_size(n + 1));

    std::vector<std::vector<std::uint32_t>> forward(size);
    for (std::size_t i = 0; i < size; ++i) {
        for (const auto& u : neighbors(spec, b.vertex(base + i))) {
            auto idx = b.index_of(u);
            if (idx && b.distance(*idx) == n + 1)
                forward[i].push_back(static_cast<std::uint32_t>(*idx - next_base));
        }
    }

    std::vector<std::uint32_t> cover(static_cast<std::size_t>(s_next), 0);
    std::vector<std::uint32_t> chosen;
    std::int64_t covered = 0;
    std::uint64_t nodes = 0;
    std::optional<std::vector<std::uint32_t>> found;

    auto push = [&](std::uint32_t i) {
        chosen.push_back(i);
        for (auto u : forward[i])
            if (cover[u]++ == 0)
                ++covered;
    };
    auto pop = [&]() {
        auto i = chosen.back();
        chosen.pop_back();
        for (auto u : forward[i])
            if (--cover[u] == 0)
                --covered;
    };

    // ratio < threshold  <=>  covered * |S_n| < |S_{n+1}| * |A|
    auto search = [&](auto&& self, std::size_t target, std::uint32_t start) -> bool {
        if (++nodes > limits.max_nodes)
            fail(ErrorKind::Capacity, fmt::format("spherical search exceeded max_nodes={}", limits.max_nodes));
        if (chosen.size() == target) {
            if (covered * s_n < s_next * static_cast<std::int64_t>(target)) {
                found = chosen;
                return true;
            }
            return false;
        }
        for (std::uint32_t i = start; i + (target - chosen.size()) <= size; ++i) {
            push(i);
            bool hit = self(self, target, i + 1);
            pop();
            if (hit)
                return true;
        }
        return false;
    };

    for (std::size_t target = 1; target <= max_k; ++target) {
        if (search(search, target, 0)) {
            VertexSet subset;
            for (auto i : *found)
                subset.insert(b.vertex(base + i));
            return spherical_check(spec, n, subset, limits.graph);
        }
    }
    return std::nullopt;
}

const char* to_string(Trend trend)
{
    switch (trend) {
    case Trend::Decreasing: return "decreasing";
    case Trend::Flat: return "flat";
    case Trend::Increasing: return "increasing";
    case Trend::Mixed: return "mixed";
    }
    return "?";
}

SphereSumReport budget_sphere_sum(const GrowthTable& growth, const Budget& f, int horizon)
{
    if (horizon < 1 || horizon > growth.radius)
        fail(ErrorKind::Domain, fmt::format("horizon {} must lie in [1, {}]", horizon, growth.radius));
    SphereSumReport r;
    BigRational sum = 0;
    for (int n = 1; n <= horizon; ++n) {
        if (growth.s[static_cast<std::size_t>(n)] == 0)
            fail(ErrorKind::Domain, fmt::format("sphere S_{} is empty; the graph is exhausted", n));
        BigRational inc(f(n), growth.s[static_cast<std::size_t>(n)]);
        sum += inc;
        r.increments.push_back(inc);
        r.partial.push_back(sum);
    }

    bool down = true, up = true, flat = true;
    auto from = static_cast<std::size_t>(std::max(1, horizon / 2));
    for (std::size_t i = from; i < r.increments.size(); ++i) {
        const auto& prev = r.increments[i - 1];
        const auto& cur = r.increments[i];
        down = down && cur < prev;
        up = up && cur > prev;
        flat = flat && cur == prev;
    }
    if (r.increments.size() < 2)
        r.trend = Trend::Mixed;
    else if (flat)
        r.trend = Trend::Flat;
    else if (down)
        r.trend = Trend::Decreasing;
    else if (up)
        r.trend = Trend::Increasing;
    else
        r.trend = Trend::Mixed;
    r.increments_vanishing = r.trend == Trend::Decreasing;
    r.note = fmt::format("increments {} over n in [{}, {}]; finite-horizon heuristic, not a convergence proof",
                         to_string(r.trend), from, horizon);
    return r;
}

} // namespace firelab
