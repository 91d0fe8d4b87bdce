#pragma once

// Grigorchuk groups G_omega acting on the rooted binary tree.
//
// Generators are a (root swap) and b, c, d whose wreath recursion is
//   x_omega = (u, x_{shift omega}),  u in {a, 1}
// with u = a exactly when the column of omega's head symbol marks x:
//   symbol 0: b, c     symbol 1: b, d     symbol 2: c, d
// The first Grigorchuk group is omega = (012)^inf.
//
// Products act on the left: (gh)(x) = g(h(x)), so a word x1 x2 ... xn acts by
// xn first.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace firelab::grig {

/// Eventually periodic sequence over {0,1,2}: preperiod followed by period^inf.
class Omega {
public:
    Omega() = default;

    /// Throws Precondition when a symbol is outside {0,1,2}, the period is
    /// empty, or the sequence is eventually constant.
    static Omega parse(std::string_view preperiod, std::string_view period);
    static Omega first_group() { return parse("", "012"); }

    std::uint8_t at(std::size_t i) const;
    const std::vector<std::uint8_t>& preperiod() const { return preperiod_; }
    const std::vector<std::uint8_t>& period() const { return period_; }

    /// "pre(period)", e.g. "(012)" or "01(12)".
    std::string to_string() const;

    friend bool operator==(const Omega&, const Omega&) = default;

private:
    std::vector<std::uint8_t> preperiod_;
    std::vector<std::uint8_t> period_;
};

/// True when generator `letter` (b, c or d) has section a at vertex 0 for
/// head symbol `symbol`.
bool acts_at_head(char letter, std::uint8_t symbol);

/// Free reduction (xx = 1) together with the Klein-four relations among
/// b, c, d (bc = d, cd = b, bd = c). Letters outside abcd throw
/// MalformedVertex.
std::string reduce(std::string_view word);

/// Word problem via wreath recursion: decides whether `word` is the identity
/// of G_{shift^offset omega}.
bool is_trivial(std::string_view word, const Omega& omega, std::size_t offset = 0);

/// g == h in G_omega (all generators are involutions, so h^{-1} is h reversed).
bool equal(std::string_view g, std::string_view h, const Omega& omega);

/// Action of a tree automorphism on the first `level` levels, stored as one
/// swap bit per internal node. Nodes are heap indexed: root 1, children of i
/// are 2i (letter 0) and 2i+1 (letter 1).
class Portrait {
public:
    Portrait() = default;
    explicit Portrait(int level);

    int level() const { return level_; }
    std::size_t node_count() const { return (std::size_t{1} << level_) - 1; }

    bool bit(std::size_t node) const { return (words_[node >> 6] >> (node & 63)) & 1U; }
    void flip(std::size_t node) { words_[node >> 6] ^= std::uint64_t{1} << (node & 63); }

    bool is_identity() const;

    const std::vector<std::uint64_t>& words() const { return words_; }
    static Portrait from_words(int level, std::vector<std::uint64_t> words);

    friend bool operator==(const Portrait&, const Portrait&) = default;

private:
    int level_ = 0;
    std::vector<std::uint64_t> words_;
};

Portrait generator_portrait(char letter, const Omega& omega, int level);

/// Portrait of gh.
Portrait compose(const Portrait& g, const Portrait& h);

Portrait word_portrait(std::string_view word, const Omega& omega, int level);

/// Smallest level that separates every pair of distinct elements of a radius
/// R ball: ceil(log2(2R+1)) + 2.
int signature_level_for_radius(int radius);

} // namespace firelab::grig
