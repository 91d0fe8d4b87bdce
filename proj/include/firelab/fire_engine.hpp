#pragma once

// The firefighter game: each turn n first protects at most f(n) vertices that
// are not burning, then the fire spreads to every unprotected neighbor.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "firelab/budget.hpp"
#include "firelab/error.hpp"
#include "firelab/graph_spaces.hpp"

namespace firelab {

struct FireState {
    VertexSet burning;
    VertexSet protected_vertices;
    /// Vertices that caught fire last turn (all of `burning` initially). Every
    /// unburnt, unprotected neighbor of the fire is adjacent to the front.
    VertexSet front;
    std::int64_t time = 0;
    std::int64_t spent = 0; ///< g(n)
    std::int64_t carry = 0; ///< unspent banked allowance

    static FireState ignite(VertexSet initial, VertexSet protected_vertices = {});
};

/// Vertices that burn next turn unless protected: neighbors of the front that
/// are neither burning nor protected.
VertexSet threatened(const GraphSpec& spec, const FireState& state);

class Strategy {
public:
    virtual ~Strategy() = default;

    virtual std::string name() const = 0;

    /// Called once by run() before the first turn.
    virtual void reset(const GraphSpec& /*spec*/, const FireState& /*initial*/) {}

    /// At most `allowance` vertices, disjoint from burning and protected.
    virtual VertexSet choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance) = 0;
};

class NullStrategy final : public Strategy {
public:
    std::string name() const override { return "null"; }
    VertexSet choose(const GraphSpec&, const FireState&, std::int64_t) override { return {}; }
};

/// Protects threatened vertices by burning-neighbor count (descending), ties
/// by vertex key.
class GreedySaturation final : public Strategy {
public:
    std::string name() const override { return "greedy"; }
    VertexSet choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance) override;
};

struct WallPlan {
    bool feasible = false;
    int fire_radius = 0;
    int radius = 0;                       ///< target sphere m
    std::vector<Vertex> wall;             ///< S_m in vertex_order
    std::vector<std::int64_t> per_turn;   ///< protections scheduled for turns 1..m-r
    int searched_radius = 0;              ///< largest radius examined
    std::string reason;                   ///< why the plan is infeasible
};

/// Smallest m > r whose sphere S_m can be fully protected by turn m - r, when
/// a fire inside B_r reaches it. Infeasibility is a value, not an error.
WallPlan plan_sphere_wall(const GraphSpec& spec, int fire_radius, const Budget& f, int max_radius,
                          const Limits& limits = {});

/// Builds the sphere wall from plan_sphere_wall, nearest-to-fire first. Falls
/// back to GreedySaturation when no wall is plannable, or uses a fixed radius
/// when one is given.
class SphereWall final : public Strategy {
public:
    explicit SphereWall(const Budget& f, std::optional<int> fixed_radius = std::nullopt, int search_margin = 48,
                        Limits limits = {});

    std::string name() const override { return "sphere_wall"; }
    void reset(const GraphSpec& spec, const FireState& initial) override;
    VertexSet choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance) override;

    const WallPlan& plan() const { return plan_; }

private:
    Budget budget_;
    std::optional<int> fixed_radius_;
    int search_margin_;
    Limits limits_;
    WallPlan plan_;
    std::optional<Ball> ball_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
    GreedySaturation fallback_;
};

/// Canopy only: protects the spine vertex just past the fire's largest spine
/// index, which confines the fire to finitely many finite trees.
class CanopyCut final : public Strategy {
public:
    std::string name() const override { return "canopy_cut"; }
    VertexSet choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance) override;
};

/// Fixed per-turn protections, mostly for tests.
class ScriptedStrategy final : public Strategy {
public:
    explicit ScriptedStrategy(std::map<std::int64_t, VertexSet> schedule) : schedule_(std::move(schedule)) {}
    std::string name() const override { return "scripted"; }
    VertexSet choose(const GraphSpec& spec, const FireState& state, std::int64_t allowance) override;

private:
    std::map<std::int64_t, VertexSet> schedule_;
};

/// "null", "greedy", "sphere_wall", "canopy_cut". Throws Config otherwise.
std::unique_ptr<Strategy> make_strategy(std::string_view name, const Budget& f, std::optional<int> wall_radius = {},
                                        const Limits& limits = {});

/// One turn. Throws StrategyViolation on overspending or on protecting a
/// burning or already protected vertex.
FireState step(const GraphSpec& spec, const FireState& state, Strategy& strategy, const Budget& f);

/// dK is a subset of P: the burning set can never grow again.
bool is_contained(const GraphSpec& spec, const FireState& state);

struct TraceRow {
    std::int64_t n = 0;
    std::int64_t burning = 0;
    std::int64_t protected_this_turn = 0;
    std::int64_t spent = 0;
    bool contained = false;
};

enum class Verdict { Contained, Undecided };

struct Trace {
    std::vector<TraceRow> rows;
    Verdict verdict = Verdict::Undecided;
    std::int64_t step = 0; ///< containment step, or the horizon
    std::int64_t total_burned = 0;
    std::int64_t total_protected = 0;
};

/// Thrown by run() when the fire outgrows the vertex cap.
class TraceCapacityError : public Error {
public:
    TraceCapacityError(const std::string& what, Trace partial)
        : Error(ErrorKind::Capacity, what), partial_(std::move(partial))
    {
    }
    const Trace& partial() const { return partial_; }

private:
    Trace partial_;
};

/// Plays until containment or `horizon` turns. Undecided never means escape.
/// `final_state`, when given, receives the last state.
Trace run(const GraphSpec& spec, const VertexSet& initial, Strategy& strategy, const Budget& f, std::int64_t horizon,
          const Limits& limits = {}, FireState* final_state = nullptr);

void write_trace_csv(std::ostream& out, const Trace& trace);
nlohmann::json verdict_json(const Trace& trace);

} // namespace firelab
