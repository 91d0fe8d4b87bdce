#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace firelab {

/// Per-turn protection allowance f(n), n >= 1. Closed forms are floored to
/// whole vertices.
class Budget {
public:
    enum class Kind { Constant, PolyFloor, StretchedFloor, Explicit };

    /// Allowances and sums saturate here.
    static constexpr std::int64_t kAllowanceCap = std::int64_t{1} << 62;

    static Budget constant(std::int64_t c);
    /// floor(c * n^p)
    static Budget poly_floor(double c, double p);
    /// floor(c * e^{n^beta})
    static Budget stretched_floor(double c, double beta);
    /// values[n-1] for n <= size, zero afterwards
    static Budget explicit_values(std::vector<std::int64_t> values);

    Budget with_banking(bool banking) const;

    std::int64_t operator()(std::int64_t n) const;

    /// g(n) = f(1) + ... + f(n)
    std::int64_t cumulative(std::int64_t n) const;

    Kind kind() const { return kind_; }
    bool banking() const { return banking_; }
    double c() const { return c_; }
    double exponent() const { return exponent_; }
    const std::vector<std::int64_t>& values() const { return values_; }

    std::string describe() const;

    friend bool operator==(const Budget&, const Budget&) = default;

private:
    Kind kind_ = Kind::Constant;
    double c_ = 0;
    double exponent_ = 0;
    std::vector<std::int64_t> values_;
    bool banking_ = false;
};

} // namespace firelab
