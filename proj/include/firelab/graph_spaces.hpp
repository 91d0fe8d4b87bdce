#pragma once

// Graph families: Z^d, the discrete Heisenberg group, the lamplighter group
// Z_2 wr Z, Grigorchuk groups G_omega and the canopy tree. Group families are
// Cayley graphs for right multiplication by a symmetric generating set, so
// left translation is a graph automorphism.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "firelab/error.hpp"
#include "firelab/grigorchuk.hpp"

namespace firelab {

enum class Family { ZD, Heisenberg, Lamplighter, Grigorchuk, Canopy };

const char* to_string(Family family);

/// A vertex in canonical form. `key` alone decides identity:
///   Z^d         (a1, ..., ad)
///   Heisenberg  (a, b, c)
///   Lamplighter (cursor, lit lamps ascending)
///   Grigorchuk  portrait bits at the GraphSpec signature level
///   Canopy      (spine index n, address length or -1 on the spine, address bits)
/// `word` is a representing generator word for Grigorchuk vertices and empty
/// otherwise; it is carried for display and ignored by comparisons.
struct Vertex {
    std::vector<std::int64_t> key;
    std::string word;

    friend bool operator==(const Vertex& a, const Vertex& b) { return a.key == b.key; }
    friend auto operator<=>(const Vertex& a, const Vertex& b) { return a.key <=> b.key; }
};

struct VertexHash {
    std::size_t operator()(const Vertex& v) const noexcept;
};

using VertexSet = std::set<Vertex>;

class GraphSpec {
public:
    static GraphSpec zd(int d);
    static GraphSpec heisenberg();
    static GraphSpec lamplighter();
    /// `level` is the tree level whose permutation serves as the vertex key.
    static GraphSpec grigorchuk(grig::Omega omega = grig::Omega::first_group(), int level = 10);
    static GraphSpec canopy();

    Family family() const { return family_; }
    int dimension() const { return dimension_; }
    const grig::Omega& omega() const { return omega_; }
    int signature_level() const { return level_; }
    bool is_group() const { return family_ != Family::Canopy; }

    /// Identity element, or spine vertex 0 for the canopy.
    Vertex root() const;

    /// Number of generators (group families); maximum degree for the canopy.
    int degree() const;

    /// "zd(2)", "heisenberg", "lamplighter", "grigorchuk(012)", "canopy"
    std::string name() const;

    const grig::Portrait& generator_portrait(int index) const { return (*portraits_)[index]; }

    friend bool operator==(const GraphSpec& a, const GraphSpec& b)
    {
        return a.family_ == b.family_ && a.dimension_ == b.dimension_ && a.omega_ == b.omega_ && a.level_ == b.level_;
    }

private:
    Family family_ = Family::ZD;
    int dimension_ = 0;
    grig::Omega omega_;
    int level_ = 0;
    std::shared_ptr<const std::vector<grig::Portrait>> portraits_;
};

/// Throws MalformedVertex unless `v` is canonical for `spec`.
void validate(const GraphSpec& spec, const Vertex& v);

/// Distinct neighbors of `v`, in generator order.
std::vector<Vertex> neighbors(const GraphSpec& spec, const Vertex& v);

/// Group product g*k. Throws Unsupported for the canopy.
Vertex multiply(const GraphSpec& spec, const Vertex& g, const Vertex& k);

VertexSet translate(const GraphSpec& spec, const Vertex& g, const VertexSet& set);

std::string to_text(const GraphSpec& spec, const Vertex& v);
Vertex parse_vertex(const GraphSpec& spec, std::string_view text);

/// Sorted text encodings, for serialization.
std::vector<std::string> to_text(const GraphSpec& spec, const VertexSet& set);

/// Deterministic ordering within a sphere: shortlex on the word for
/// Grigorchuk vertices, lexicographic on the key otherwise.
bool vertex_order(const GraphSpec& spec, const Vertex& a, const Vertex& b);

struct Limits {
    std::size_t max_vertices = 5'000'000;
};

/// B_R(root) in (distance, vertex_order) order.
class Ball {
public:
    /// B_0 = {root}.
    static Ball origin(const GraphSpec& spec);

    /// Adds the next sphere. Throws Capacity past `limits.max_vertices`.
    void extend(const GraphSpec& spec, const Limits& limits = {});

    int radius() const { return radius_; }
    std::size_t size() const { return vertices_.size(); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const Vertex& vertex(std::size_t i) const { return vertices_[i]; }
    int distance(std::size_t i) const { return distance_[i]; }
    std::optional<std::size_t> index_of(const Vertex& v) const;

    /// Vertices at distance exactly n.
    std::span<const Vertex> sphere(int n) const;
    std::size_t sphere_begin(int n) const { return layer_start_[n]; }
    std::size_t sphere_size(int n) const { return layer_start_[n + 1] - layer_start_[n]; }

private:
    int radius_ = 0;
    std::vector<Vertex> vertices_;
    std::vector<int> distance_;
    std::vector<std::size_t> layer_start_;
    std::unordered_map<Vertex, std::size_t, VertexHash> index_;
};

/// Breadth-first enumeration of B_R. Throws Capacity when the ball would
/// exceed `limits.max_vertices`.
Ball ball(const GraphSpec& spec, int radius, const Limits& limits = {});

/// Neighbor indices of every vertex at distance < radius (whose neighbors
/// all lie inside the ball). Outer-layer entries are left empty.
std::vector<std::vector<std::uint32_t>> inner_adjacency(const GraphSpec& spec, const Ball& b);

struct GrowthTable {
    Vertex root;
    int radius = 0;
    std::vector<std::int64_t> v;   ///< |B_n|
    std::vector<std::int64_t> s;   ///< |S_n|, s[0] = 1
    std::vector<std::int64_t> vpp; ///< v(n) - 2v(n-1) + v(n-2); entries 0 and 1 unused
    /// v'' nonnegative and nondecreasing on [2, radius]
    bool vpp_nonnegative_nondecreasing = false;
};

GrowthTable growth_table(const GraphSpec& spec, int radius, const Limits& limits = {});
GrowthTable growth_table(const Ball& b);

} // namespace firelab
