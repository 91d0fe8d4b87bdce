#include "firelab/graph_spaces.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "firelab/error.hpp"
#include "firelab/kernels.hpp"

namespace firelab {

namespace {

constexpr char kGrigLetters[] = {'a', 'b', 'c', 'd'};
constexpr std::int64_t kMaxCanopySpine = 62;

std::vector<std::int64_t> pack_portrait(const grig::Portrait& p)
{
    const auto& words = p.words();
    return {words.begin(), words.end()};
}

grig::Portrait unpack_portrait(const GraphSpec& spec, const Vertex& v)
{
    std::vector<std::uint64_t> words(v.key.begin(), v.key.end());
    return grig::Portrait::from_words(spec.signature_level(), std::move(words));
}

[[noreturn]] void malformed(const GraphSpec& spec, const std::string& why)
{
    fail(ErrorKind::MalformedVertex, fmt::format("malformed {} vertex: {}", spec.name(), why));
}

std::int64_t parse_int(std::string_view text, const GraphSpec& spec)
{
    std::int64_t value = 0;
    auto first = text.data();
    auto last = text.data() + text.size();
    if (!text.empty() && text.front() == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last)
        malformed(spec, fmt::format("bad integer '{}'", text));
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    if (text.empty())
        return parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

std::string_view strip_parens(const GraphSpec& spec, std::string_view text)
{
    if (text.size() < 2 || text.front() != '(' || text.back() != ')')
        malformed(spec, fmt::format("expected parenthesized text, got '{}'", text));
    return text.substr(1, text.size() - 2);
}

Vertex canopy_vertex(std::int64_t spine, std::int64_t len, std::int64_t bits)
{
    return Vertex{{spine, len, bits}, {}};
}

} // namespace

const char* to_string(Family family)
{
    switch (family) {
    case Family::ZD: return "zd";
    case Family::Heisenberg: return "heisenberg";
    case Family::Lamplighter: return "lamplighter";
    case Family::Grigorchuk: return "grigorchuk";
    case Family::Canopy: return "canopy";
    }
    return "?";
}

std::size_t VertexHash::operator()(const Vertex& v) const noexcept
{
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ v.key.size();
    for (auto x : v.key) {
        h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
}

GraphSpec GraphSpec::zd(int d)
{
    if (d < 1)
        fail(ErrorKind::Precondition, "Z^d needs d >= 1");
    GraphSpec spec;
    spec.family_ = Family::ZD;
    spec.dimension_ = d;
    return spec;
}

GraphSpec GraphSpec::heisenberg()
{
    GraphSpec spec;
    spec.family_ = Family::Heisenberg;
    return spec;
}

GraphSpec GraphSpec::lamplighter()
{
    GraphSpec spec;
    spec.family_ = Family::Lamplighter;
    return spec;
}

GraphSpec GraphSpec::grigorchuk(grig::Omega omega, int level)
{
    if (omega.period().empty())
        fail(ErrorKind::Precondition, "Grigorchuk spec needs a parsed omega");
    GraphSpec spec;
    spec.family_ = Family::Grigorchuk;
    spec.omega_ = std::move(omega);
    spec.level_ = level;
    auto portraits = std::make_shared<std::vector<grig::Portrait>>();
    for (char letter : kGrigLetters)
        portraits->push_back(grig::generator_portrait(letter, spec.omega_, level));
    spec.portraits_ = std::move(portraits);
    return spec;
}

GraphSpec GraphSpec::canopy()
{
    GraphSpec spec;
    spec.family_ = Family::Canopy;
    return spec;
}

Vertex GraphSpec::root() const
{
    switch (family_) {
    case Family::ZD: return Vertex{std::vector<std::int64_t>(static_cast<std::size_t>(dimension_), 0), {}};
    case Family::Heisenberg: return Vertex{{0, 0, 0}, {}};
    case Family::Lamplighter: return Vertex{{0}, {}};
    case Family::Grigorchuk: return Vertex{pack_portrait(grig::Portrait(level_)), {}};
    case Family::Canopy: return canopy_vertex(0, -1, 0);
    }
    return {};
}

int GraphSpec::degree() const
{
    switch (family_) {
    case Family::ZD: return 2 * dimension_;
    case Family::Heisenberg: return 4;
    case Family::Lamplighter: return 3;
    case Family::Grigorchuk: return 4;
    case Family::Canopy: return 3;
    }
    return 0;
}

std::string GraphSpec::name() const
{
    switch (family_) {
    case Family::ZD: return fmt::format("zd({})", dimension_);
    case Family::Grigorchuk: return fmt::format("grigorchuk{}", omega_.to_string());
    default: return to_string(family_);
    }
}

void validate(const GraphSpec& spec, const Vertex& v)
{
    const auto& k = v.key;
    switch (spec.family()) {
    case Family::ZD:
        if (k.size() != static_cast<std::size_t>(spec.dimension()))
            malformed(spec, fmt::format("expected {} coordinates, got {}", spec.dimension(), k.size()));
        return;
    case Family::Heisenberg:
        if (k.size() != 3)
            malformed(spec, "expected 3 coordinates");
        return;
    case Family::Lamplighter:
        if (k.empty())
            malformed(spec, "missing cursor");
        for (std::size_t i = 2; i < k.size(); ++i)
            if (k[i - 1] >= k[i])
                malformed(spec, "lamps must be strictly increasing");
        return;
    case Family::Grigorchuk:
        unpack_portrait(spec, v);
        return;
    case Family::Canopy: {
        if (k.size() != 3)
            malformed(spec, "expected (spine, length, bits)");
        auto [n, len, bits] = std::tuple{k[0], k[1], k[2]};
        if (n < 0 || n > kMaxCanopySpine)
            malformed(spec, fmt::format("spine index {} out of range", n));
        if (len < -1 || len > n)
            malformed(spec, fmt::format("address length {} exceeds tree depth {}", len, n));
        if (len == -1 ? bits != 0 : (bits < 0 || (len < 63 && bits >= (std::int64_t{1} << len))))
            malformed(spec, "address bits out of range");
        return;
    }
    }
}

std::vector<Vertex> neighbors(const GraphSpec& spec, const Vertex& v)
{
    validate(spec, v);
    std::vector<Vertex> out;
    out.reserve(static_cast<std::size_t>(spec.degree()));
    switch (spec.family()) {
    case Family::ZD:
        for (std::size_t i = 0; i < v.key.size(); ++i) {
            for (int delta : {1, -1}) {
                Vertex u{v.key, {}};
                u.key[i] += delta;
                out.push_back(std::move(u));
            }
        }
        break;
    case Family::Heisenberg: {
        auto [a, b, c] = std::tuple{v.key[0], v.key[1], v.key[2]};
        out.push_back(Vertex{{a + 1, b, c}, {}});
        out.push_back(Vertex{{a - 1, b, c}, {}});
        out.push_back(Vertex{{a, b + 1, c + a}, {}});
        out.push_back(Vertex{{a, b - 1, c - a}, {}});
        break;
    }
    case Family::Lamplighter: {
        Vertex right{v.key, {}};
        right.key[0] += 1;
        Vertex left{v.key, {}};
        left.key[0] -= 1;
        Vertex toggled{{v.key[0]}, {}};
        std::int64_t cursor = v.key[0];
        bool placed = false;
        for (std::size_t i = 1; i < v.key.size(); ++i) {
            std::int64_t lamp = v.key[i];
            if (lamp == cursor) {
                placed = true;
                continue;
            }
            if (!placed && lamp > cursor) {
                toggled.key.push_back(cursor);
                placed = true;
            }
            toggled.key.push_back(lamp);
        }
        if (!placed)
            toggled.key.push_back(cursor);
        out.push_back(std::move(right));
        out.push_back(std::move(left));
        out.push_back(std::move(toggled));
        break;
    }
    case Family::Grigorchuk: {
        auto self = unpack_portrait(spec, v);
        for (int g = 0; g < 4; ++g) {
            auto p = grig::compose(self, spec.generator_portrait(g));
            out.push_back(Vertex{pack_portrait(p), grig::reduce(v.word + kGrigLetters[g])});
        }
        break;
    }
    case Family::Canopy: {
        auto [n, len, bits] = std::tuple{v.key[0], v.key[1], v.key[2]};
        if (len == -1) {
            if (n > 0)
                out.push_back(canopy_vertex(n - 1, -1, 0));
            if (n < kMaxCanopySpine)
                out.push_back(canopy_vertex(n + 1, -1, 0));
            out.push_back(canopy_vertex(n, 0, 0));
        } else {
            out.push_back(len == 0 ? canopy_vertex(n, -1, 0) : canopy_vertex(n, len - 1, bits >> 1));
            if (len < n) {
                out.push_back(canopy_vertex(n, len + 1, bits << 1));
                out.push_back(canopy_vertex(n, len + 1, (bits << 1) | 1));
            }
        }
        break;
    }
    }
    return out;
}

Vertex multiply(const GraphSpec& spec, const Vertex& g, const Vertex& k)
{
    validate(spec, g);
    validate(spec, k);
    switch (spec.family()) {
    case Family::ZD: {
        Vertex out{g.key, {}};
        for (std::size_t i = 0; i < out.key.size(); ++i)
            out.key[i] += k.key[i];
        return out;
    }
    case Family::Heisenberg:
        return Vertex{{g.key[0] + k.key[0], g.key[1] + k.key[1], g.key[2] + k.key[2] + g.key[0] * k.key[1]}, {}};
    case Family::Lamplighter: {
        std::int64_t shift = g.key[0];
        std::vector<std::int64_t> shifted;
        for (std::size_t i = 1; i < k.key.size(); ++i)
            shifted.push_back(k.key[i] + shift);
        std::vector<std::int64_t> lamps;
        std::set_symmetric_difference(g.key.begin() + 1, g.key.end(), shifted.begin(), shifted.end(),
                                      std::back_inserter(lamps));
        Vertex out{{g.key[0] + k.key[0]}, {}};
        out.key.insert(out.key.end(), lamps.begin(), lamps.end());
        return out;
    }
    case Family::Grigorchuk: {
        auto p = grig::compose(unpack_portrait(spec, g), unpack_portrait(spec, k));
        return Vertex{pack_portrait(p), grig::reduce(g.word + k.word)};
    }
    case Family::Canopy:
        break;
    }
    fail(ErrorKind::Unsupported, "the canopy tree is not a group; translation is undefined");
}

VertexSet translate(const GraphSpec& spec, const Vertex& g, const VertexSet& set)
{
    if (!spec.is_group())
        fail(ErrorKind::Unsupported, "the canopy tree is not a group; translation is undefined");
    VertexSet out;
    for (const auto& k : set)
        out.insert(multiply(spec, g, k));
    return out;
}

std::string to_text(const GraphSpec& spec, const Vertex& v)
{
    switch (spec.family()) {
    case Family::ZD:
    case Family::Heisenberg:
        return fmt::format("({})", fmt::join(v.key, ","));
    case Family::Lamplighter:
        return fmt::format("({}|{})", v.key[0], fmt::join(v.key.begin() + 1, v.key.end(), ","));
    case Family::Grigorchuk:
        return v.word.empty() ? "e" : v.word;
    case Family::Canopy: {
        auto [n, len, bits] = std::tuple{v.key[0], v.key[1], v.key[2]};
        if (len == -1)
            return fmt::format("({}|*)", n);
        std::string address;
        for (std::int64_t i = len - 1; i >= 0; --i)
            address += ((bits >> i) & 1) ? '1' : '0';
        return fmt::format("({}|{})", n, address);
    }
    }
    return {};
}

std::vector<std::string> to_text(const GraphSpec& spec, const VertexSet& set)
{
    std::vector<std::string> out;
    out.reserve(set.size());
    for (const auto& v : set)
        out.push_back(to_text(spec, v));
    std::sort(out.begin(), out.end());
    return out;
}

Vertex parse_vertex(const GraphSpec& spec, std::string_view text)
{
    Vertex v;
    switch (spec.family()) {
    case Family::ZD:
    case Family::Heisenberg:
        for (auto part : split(strip_parens(spec, text), ','))
            v.key.push_back(parse_int(part, spec));
        break;
    case Family::Lamplighter: {
        auto body = strip_parens(spec, text);
        auto bar = body.find('|');
        if (bar == std::string_view::npos)
            malformed(spec, "expected (cursor|lamps)");
        v.key.push_back(parse_int(body.substr(0, bar), spec));
        for (auto part : split(body.substr(bar + 1), ','))
            v.key.push_back(parse_int(part, spec));
        break;
    }
    case Family::Grigorchuk: {
        std::string word = (text == "e") ? std::string() : grig::reduce(text);
        v.key = pack_portrait(grig::word_portrait(word, spec.omega(), spec.signature_level()));
        v.word = std::move(word);
        break;
    }
    case Family::Canopy: {
        auto body = strip_parens(spec, text);
        auto bar = body.find('|');
        if (bar == std::string_view::npos)
            malformed(spec, "expected (spine|address)");
        std::int64_t n = parse_int(body.substr(0, bar), spec);
        auto address = body.substr(bar + 1);
        if (address == "*") {
            v = canopy_vertex(n, -1, 0);
        } else {
            std::int64_t bits = 0;
            for (char ch : address) {
                if (ch != '0' && ch != '1')
                    malformed(spec, fmt::format("bad address '{}'", address));
                bits = (bits << 1) | (ch - '0');
            }
            v = canopy_vertex(n, static_cast<std::int64_t>(address.size()), bits);
        }
        break;
    }
    }
    validate(spec, v);
    return v;
}

bool vertex_order(const GraphSpec& spec, const Vertex& a, const Vertex& b)
{
    if (spec.family() == Family::Grigorchuk) {
        if (a.word.size() != b.word.size())
            return a.word.size() < b.word.size();
        if (a.word != b.word)
            return a.word < b.word;
    }
    return a.key < b.key;
}

std::optional<std::size_t> Ball::index_of(const Vertex& v) const
{
    auto it = index_.find(v);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::span<const Vertex> Ball::sphere(int n) const
{
    if (n < 0 || n > radius_)
        return {};
    return std::span<const Vertex>(vertices_).subspan(layer_start_[n], sphere_size(n));
}

Ball Ball::origin(const GraphSpec& spec)
{
    Ball b;
    b.vertices_.push_back(spec.root());
    b.distance_.push_back(0);
    b.index_.emplace(b.vertices_.front(), 0);
    b.layer_start_ = {0, 1};
    return b;
}

void Ball::extend(const GraphSpec& spec, const Limits& limits)
{
    int n = radius_ + 1;
    if (spec.family() == Family::Grigorchuk && grig::signature_level_for_radius(n) > spec.signature_level())
        fail(ErrorKind::Precondition,
             fmt::format("radius {} needs signature level {} but the graph uses {}", n,
                         grig::signature_level_for_radius(n), spec.signature_level()));
    auto front = std::span<const Vertex>(vertices_).subspan(layer_start_[static_cast<std::size_t>(n - 1)]);
    auto candidates = kernels::expand_frontier(spec, front);
    std::vector<Vertex> layer;
    for (auto& u : candidates) {
        if (index_.contains(u))
            continue;
        if (vertices_.size() + layer.size() + 1 > limits.max_vertices)
            fail(ErrorKind::Capacity, fmt::format("ball of radius {} in {} exceeds max_vertices={}", n, spec.name(),
                                                  limits.max_vertices));
        // first discovery keeps its word: frontier order times generator
        // order makes it the shortlex-least geodesic
        index_.emplace(u, 0);
        layer.push_back(std::move(u));
    }
    std::sort(layer.begin(), layer.end(), [&](const Vertex& x, const Vertex& y) { return vertex_order(spec, x, y); });
    for (auto& u : layer) {
        index_[u] = vertices_.size();
        vertices_.push_back(std::move(u));
        distance_.push_back(n);
    }
    layer_start_.push_back(vertices_.size());
    radius_ = n;
}

Ball ball(const GraphSpec& spec, int radius, const Limits& limits)
{
    if (radius < 0)
        fail(ErrorKind::Precondition, "ball radius must be nonnegative");
    auto b = Ball::origin(spec);
    while (b.radius() < radius)
        b.extend(spec, limits);
    return b;
}

std::vector<std::vector<std::uint32_t>> inner_adjacency(const GraphSpec& spec, const Ball& b)
{
    std::vector<std::vector<std::uint32_t>> adj(b.size());
    std::size_t inner = b.sphere_begin(b.radius());
    auto lists = kernels::neighbor_lists(spec, std::span<const Vertex>(b.vertices()).first(inner));
    for (std::size_t i = 0; i < inner; ++i) {
        for (const auto& u : lists[i]) {
            auto idx = b.index_of(u);
            if (!idx)
                fail(ErrorKind::Domain, "inner vertex has a neighbor outside the ball");
            adj[i].push_back(static_cast<std::uint32_t>(*idx));
        }
    }
    return adj;
}

GrowthTable growth_table(const Ball& b)
{
    GrowthTable t;
    t.root = b.vertex(0);
    t.radius = b.radius();
    for (int n = 0; n <= b.radius(); ++n) {
        t.s.push_back(static_cast<std::int64_t>(b.sphere_size(n)));
        t.v.push_back(static_cast<std::int64_t>(b.sphere_begin(n + 1)));
        t.vpp.push_back(n >= 2 ? t.v[n] - 2 * t.v[n - 1] + t.v[n - 2] : 0);
    }
    bool ok = true;
    for (int n = 2; n <= b.radius(); ++n) {
        if (t.vpp[n] < 0 || (n > 2 && t.vpp[n] < t.vpp[n - 1]))
            ok = false;
    }
    t.vpp_nonnegative_nondecreasing = ok;
    return t;
}

GrowthTable growth_table(const GraphSpec& spec, int radius, const Limits& limits)
{
    if (radius < 2)
        fail(ErrorKind::Precondition, "growth tables need radius >= 2");
    return growth_table(ball(spec, radius, limits));
}

} // namespace firelab
