#include "firelab/budget.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "firelab/error.hpp"

namespace firelab {

namespace {

constexpr std::int64_t kAllowanceCap = Budget::kAllowanceCap;

std::int64_t floor_clamped(long double x)
{
    if (!(x >= 0))
        return 0;
    if (x >= static_cast<long double>(kAllowanceCap))
        return kAllowanceCap;
    return static_cast<std::int64_t>(std::floor(x));
}

} // namespace

Budget Budget::constant(std::int64_t c)
{
    if (c < 0)
        fail(ErrorKind::Precondition, "budget must be nonnegative");
    Budget b;
    b.kind_ = Kind::Constant;
    b.c_ = static_cast<double>(c);
    return b;
}

Budget Budget::poly_floor(double c, double p)
{
    if (!(c >= 0) || !std::isfinite(p))
        fail(ErrorKind::Precondition, "poly_floor budget needs c >= 0 and finite p");
    Budget b;
    b.kind_ = Kind::PolyFloor;
    b.c_ = c;
    b.exponent_ = p;
    return b;
}

Budget Budget::stretched_floor(double c, double beta)
{
    if (!(c >= 0) || !(beta > 0 && beta < 1))
        fail(ErrorKind::Precondition, "stretched_floor budget needs c >= 0 and 0 < beta < 1");
    Budget b;
    b.kind_ = Kind::StretchedFloor;
    b.c_ = c;
    b.exponent_ = beta;
    return b;
}

Budget Budget::explicit_values(std::vector<std::int64_t> values)
{
    for (auto v : values)
        if (v < 0)
            fail(ErrorKind::Precondition, "explicit budget values must be nonnegative");
    Budget b;
    b.kind_ = Kind::Explicit;
    b.values_ = std::move(values);
    return b;
}

Budget Budget::with_banking(bool banking) const
{
    Budget b = *this;
    b.banking_ = banking;
    return b;
}

std::int64_t Budget::operator()(std::int64_t n) const
{
    if (n < 1)
        return 0;
    auto ln = static_cast<long double>(n);
    switch (kind_) {
    case Kind::Constant: return static_cast<std::int64_t>(c_);
    case Kind::PolyFloor: return floor_clamped(c_ * std::pow(ln, static_cast<long double>(exponent_)));
    case Kind::StretchedFloor:
        return floor_clamped(c_ * std::exp(std::pow(ln, static_cast<long double>(exponent_))));
    case Kind::Explicit:
        return n <= static_cast<std::int64_t>(values_.size()) ? values_[static_cast<std::size_t>(n - 1)] : 0;
    }
    return 0;
}

std::int64_t Budget::cumulative(std::int64_t n) const
{
    std::int64_t total = 0;
    for (std::int64_t i = 1; i <= n; ++i) {
        total += (*this)(i);
        if (total >= kAllowanceCap)
            return kAllowanceCap;
    }
    return total;
}

std::string Budget::describe() const
{
    std::string base;
    switch (kind_) {
    case Kind::Constant: base = fmt::format("constant({})", static_cast<std::int64_t>(c_)); break;
    case Kind::PolyFloor: base = fmt::format("floor({}*n^{})", c_, exponent_); break;
    case Kind::StretchedFloor: base = fmt::format("floor({}*e^(n^{}))", c_, exponent_); break;
    case Kind::Explicit: base = fmt::format("explicit[{}]", values_.size()); break;
    }
    return banking_ ? base + " banked" : base;
}

} // namespace firelab
