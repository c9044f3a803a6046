#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace fockdist {

/// Rational multiple of pi, kept reduced with a positive denominator.
struct PiFraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    PiFraction() = default;
    PiFraction(std::int64_t n, std::int64_t d);

    friend bool operator==(const PiFraction&, const PiFraction&) = default;
};

/// Angle in radians that remembers when it is an exact rational multiple of
/// pi. Phases e^{i*angle*n} built from exact angles reduce the product in
/// integer arithmetic, so interference that should cancel cancels to 0.0.
class Angle {
public:
    Angle() = default;

    static Angle radians(double value);
    static Angle pi_times(std::int64_t num, std::int64_t den = 1);

    /// Parses "pi", "-pi/2", "3pi/4", "3*pi/8", "pi*3/4" or a plain decimal.
    static Angle parse(std::string_view text);

    double value() const noexcept { return radians_; }
    const std::optional<PiFraction>& pi_fraction() const noexcept { return frac_; }
    bool exact() const noexcept { return frac_.has_value(); }

    /// Representative in [0, 2pi).
    Angle reduced() const;

    /// angle * n expressed in half turns and reduced to [0, 2).
    double half_turns(std::int64_t n) const;

    /// angle * n split into a quadrant in [0, 4) and an offset in half turns
    /// in [0, 0.5). Exact angles split in integer arithmetic.
    std::pair<int, double> quadrant_split(std::int64_t n) const;

    /// "pi/8", "3pi/4", "0" for exact angles, otherwise the decimal radians.
    std::string label() const;

    Angle operator-() const;

private:
    double radians_ = 0.0;
    std::optional<PiFraction> frac_ = PiFraction{};
};

namespace detail {

/// e^{i pi (quadrant / 2 + y)} for y in [0, 0.5).
template <typename Real>
std::complex<Real> quadrant_phase(int quadrant, Real y) {
    const Real pi = std::numbers::pi_v<Real>;
    Real c, s;
    if (y == Real(0)) {
        c = 1; s = 0;
    } else if (y == Real(0.25)) {
        c = s = std::sqrt(Real(0.5));
    } else if (y < Real(0.25)) {
        c = std::cos(pi * y);
        s = std::sin(pi * y);
    } else {
        c = std::sin(pi * (Real(0.5) - y));
        s = std::cos(pi * (Real(0.5) - y));
    }
    switch (quadrant & 3) {
    case 0: return {c, s};
    case 1: return {-s, c};
    case 2: return {-c, -s};
    default: return {s, -c};
    }
}

}  // namespace detail

/// e^{i pi x}, computed from a base octant so that values whose arguments
/// differ by exactly pi are exact negatives of each other.
template <typename Real = double>
std::complex<Real> unit_phase_half_turns(Real x) {
    x = std::fmod(x, Real(2));
    if (x < 0) x += Real(2);
    if (x >= Real(2)) x -= Real(2);
    const int quadrant = static_cast<int>(std::floor(x * Real(2)));
    return detail::quadrant_phase(quadrant, x - Real(0.5) * Real(quadrant));
}

/// e^{i angle n}.
template <typename Real = double>
std::complex<Real> phase_factor(const Angle& angle, std::int64_t n) {
    const auto [quadrant, y] = angle.quadrant_split(n);
    return detail::quadrant_phase(quadrant, static_cast<Real>(y));
}

}  // namespace fockdist
