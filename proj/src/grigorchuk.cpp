#include "firelab/grigorchuk.hpp"

#include <algorithm>
#include <bit>

#include "firelab/error.hpp"

namespace firelab::grig {

namespace {

std::vector<std::uint8_t> parse_symbols(std::string_view text)
{
    std::vector<std::uint8_t> out;
    out.reserve(text.size());
    for (char ch : text) {
        if (ch < '0' || ch > '2')
            fail(ErrorKind::Precondition,
                 std::string("omega symbol must be 0, 1 or 2, got '") + ch + "'");
        out.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    return out;
}

bool is_bcd(char ch) { return ch == 'b' || ch == 'c' || ch == 'd'; }

// product of two distinct letters from {b,c,d}
char klein_product(char x, char y) { return static_cast<char>('b' + 'c' + 'd' - x - y); }

} // namespace

Omega Omega::parse(std::string_view preperiod, std::string_view period)
{
    Omega omega;
    omega.preperiod_ = parse_symbols(preperiod);
    omega.period_ = parse_symbols(period);
    if (omega.period_.empty())
        fail(ErrorKind::Precondition, "omega period must be nonempty");
    bool constant = std::all_of(omega.period_.begin(), omega.period_.end(),
                                [&](std::uint8_t s) { return s == omega.period_.front(); });
    if (constant)
        fail(ErrorKind::Precondition,
             "omega is eventually constant; G_omega needs a sequence that is not");
    return omega;
}

std::uint8_t Omega::at(std::size_t i) const
{
    if (i < preperiod_.size())
        return preperiod_[i];
    return period_[(i - preperiod_.size()) % period_.size()];
}

std::string Omega::to_string() const
{
    std::string out;
    for (auto s : preperiod_)
        out += static_cast<char>('0' + s);
    out += '(';
    for (auto s : period_)
        out += static_cast<char>('0' + s);
    out += ')';
    return out;
}

bool acts_at_head(char letter, std::uint8_t symbol)
{
    switch (letter) {
    case 'b': return symbol != 2;
    case 'c': return symbol != 1;
    case 'd': return symbol != 0;
    default: return false;
    }
}

std::string reduce(std::string_view word)
{
    std::string stack;
    stack.reserve(word.size());
    for (char ch : word) {
        if (ch != 'a' && !is_bcd(ch))
            fail(ErrorKind::MalformedVertex,
                 std::string("Grigorchuk words use letters a-d, got '") + ch + "'");
        char incoming = ch;
        while (!stack.empty()) {
            char top = stack.back();
            if (top == incoming) {
                stack.pop_back();
                incoming = 0;
                break;
            }
            if (is_bcd(top) && is_bcd(incoming)) {
                stack.pop_back();
                incoming = klein_product(top, incoming);
                continue;
            }
            break;
        }
        if (incoming)
            stack.push_back(incoming);
    }
    return stack;
}

bool is_trivial(std::string_view word, const Omega& omega, std::size_t offset)
{
    std::string w = reduce(word);
    if (w.empty())
        return true;
    auto a_count = std::count(w.begin(), w.end(), 'a');
    if (a_count % 2 == 1)
        return false;
    // a reduced word without a is a single letter among b, c, d
    if (a_count == 0)
        return false;

    std::uint8_t head = omega.at(offset);
    std::string sections[2];
    for (int start = 0; start < 2; ++start) {
        // walk right to left: (gh)|_v = g|_{h(v)} h|_v
        std::string reversed;
        int pos = start;
        for (auto it = w.rbegin(); it != w.rend(); ++it) {
            char x = *it;
            if (x == 'a') {
                pos ^= 1;
            } else if (pos == 1) {
                reversed.push_back(x);
            } else if (acts_at_head(x, head)) {
                reversed.push_back('a');
            }
        }
        sections[start].assign(reversed.rbegin(), reversed.rend());
    }
    return is_trivial(sections[0], omega, offset + 1) && is_trivial(sections[1], omega, offset + 1);
}

bool equal(std::string_view g, std::string_view h, const Omega& omega)
{
    std::string w(g);
    w.append(h.rbegin(), h.rend());
    return is_trivial(w, omega);
}

Portrait::Portrait(int level)
    : level_(level), words_(((std::size_t{1} << level) + 63) / 64, 0)
{
    if (level < 1 || level > 20)
        fail(ErrorKind::Precondition, "portrait level must lie in [1, 20]");
}

bool Portrait::is_identity() const
{
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

Portrait Portrait::from_words(int level, std::vector<std::uint64_t> words)
{
    Portrait p(level);
    if (words.size() != p.words_.size())
        fail(ErrorKind::MalformedVertex, "portrait has the wrong number of words");
    // bit 0 and bits past the last internal node are unused
    if (words[0] & 1U)
        fail(ErrorKind::MalformedVertex, "portrait uses reserved bit 0");
    std::size_t nodes = p.node_count();
    for (std::size_t i = nodes + 1; i < words.size() * 64; ++i)
        if ((words[i >> 6] >> (i & 63)) & 1U)
            fail(ErrorKind::MalformedVertex, "portrait sets a bit below its level");
    p.words_ = std::move(words);
    return p;
}

Portrait generator_portrait(char letter, const Omega& omega, int level)
{
    Portrait p(level);
    if (letter == 'a') {
        p.flip(1);
        return p;
    }
    if (!is_bcd(letter))
        fail(ErrorKind::MalformedVertex, std::string("unknown Grigorchuk generator '") + letter + "'");
    // node 1^j sits at heap index 2^{j+1} - 1; its left child carries u
    for (int j = 0; j + 1 < level; ++j) {
        if (acts_at_head(letter, omega.at(static_cast<std::size_t>(j)))) {
            std::size_t spine = (std::size_t{1} << (j + 1)) - 1;
            p.flip(2 * spine);
        }
    }
    return p;
}

Portrait compose(const Portrait& g, const Portrait& h)
{
    if (g.level() != h.level())
        fail(ErrorKind::Precondition, "cannot compose portraits of different levels");
    Portrait out(g.level());
    std::size_t nodes = out.node_count();
    std::vector<std::uint32_t> image(nodes + 1);
    image[1] = 1;
    for (std::size_t i = 1; i <= nodes; ++i) {
        bool hb = h.bit(i);
        if (hb != g.bit(image[i]))
            out.flip(i);
        std::size_t left = 2 * i;
        if (left <= nodes) {
            image[left] = static_cast<std::uint32_t>(2 * image[i] + (hb ? 1 : 0));
            image[left + 1] = static_cast<std::uint32_t>(2 * image[i] + (hb ? 0 : 1));
        }
    }
    return out;
}

Portrait word_portrait(std::string_view word, const Omega& omega, int level)
{
    Portrait gens[4] = {generator_portrait('a', omega, level), generator_portrait('b', omega, level),
                        generator_portrait('c', omega, level), generator_portrait('d', omega, level)};
    Portrait p(level);
    for (char ch : word) {
        if (ch < 'a' || ch > 'd')
            fail(ErrorKind::MalformedVertex, std::string("Grigorchuk words use letters a-d, got '") + ch + "'");
        p = compose(p, gens[ch - 'a']);
    }
    return p;
}

int signature_level_for_radius(int radius)
{
    auto span = static_cast<unsigned>(2 * radius + 1);
    int ceil_log2 = static_cast<int>(std::bit_width(span - 1));
    return ceil_log2 + 2;
}

} // namespace firelab::grig
