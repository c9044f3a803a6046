#pragma once

// Steady-state reflection off a one-sided cavity holding a three-level atom.
// Only |e> <-> |g> couples to the cavity; the atom is resonant with the light
// and weakly excited. delta is the dimensionless detuning 2 Delta_c / kappa.

#include "fockdist/angle.hpp"
#include "fockdist/error.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace fockdist {

template <typename Real>
struct BasicCavityParams {
    Real g = 1;
    Real kappa = 1;
    Real gamma = 1;
    Real delta = 0;

    void validate() const {
        if (!(g > 0) || !(kappa > 0) || !(gamma > 0))
            throw Error(ErrorKind::InvalidSpec, "cavity parameters g, kappa, gamma must be > 0");
        if (!std::isfinite(g) || !std::isfinite(kappa) || !std::isfinite(gamma) || !std::isfinite(delta))
            throw Error(ErrorKind::InvalidSpec, "cavity parameters must be finite");
    }
};
using CavityParams = BasicCavityParams<double>;

template <typename Real>
struct BasicReflectionPair {
    std::complex<Real> r1;  // atom in |g>, coupled transition
    std::complex<Real> r0;  // atom in |s>, empty cavity
};
using ReflectionPair = BasicReflectionPair<double>;

/// C = g^2 / (kappa gamma).
template <typename Real>
Real cooperativity(const BasicCavityParams<Real>& p) {
    p.validate();
    return p.g * p.g / (p.kappa * p.gamma);
}

/// r = 1 - 2 / ((1 + 4C) - i delta). C = 0 gives the empty cavity.
template <typename Real>
std::complex<Real> reflection_at(Real coop, Real delta) {
    return Real(1) - Real(2) / std::complex<Real>(1 + 4 * coop, -delta);
}

template <typename Real>
BasicReflectionPair<Real> reflection_coeffs(Real coop, Real delta) {
    return {reflection_at(coop, delta), reflection_at(Real(0), delta)};
}

template <typename Real>
BasicReflectionPair<Real> reflection_coeffs(const BasicCavityParams<Real>& p) {
    return reflection_coeffs(cooperativity(p), p.delta);
}

/// arg(z) mapped into [0, 2pi).
template <typename Real>
Real phase_in_turn(std::complex<Real> z) {
    constexpr Real two_pi = 2 * std::numbers::pi_v<Real>;
    Real a = std::arg(z);
    if (a < 0) a += two_pi;
    if (a >= two_pi) a -= two_pi;
    return a;
}

/// Detuning that makes the empty-cavity reflection equal e^{i phi}.
///
/// r0 = -(1 + i delta) / (1 - i delta) = -e^{2 i atan(delta)}, so
/// arg r0 = pi + 2 atan(delta) and delta = -cot(phi / 2). Resonance (delta = 0)
/// gives phi = pi; phi = 0 (mod 2pi) has no finite solution.
template <typename Real = double>
Real solve_detuning(const Angle& phi) {
    const Angle red = phi.reduced();
    if (red.exact()) {
        const auto& f = *red.pi_fraction();
        if (f.num == 0) throw Error(ErrorKind::NoSolution, "no finite detuning yields zero phase");
        if (f.num == 1 && f.den == 1) return Real(0);
    }
    const Real x = static_cast<Real>(red.value());
    if (!(x > 0)) throw Error(ErrorKind::NoSolution, "no finite detuning yields zero phase");
    return -Real(1) / std::tan(x / 2);
}

template <typename Real = double>
Real solve_detuning(Real phi) {
    return solve_detuning<Real>(Angle::radians(static_cast<double>(phi)));
}

/// Independent route: bisection on arg r0(delta), which increases
/// monotonically from 0 (delta -> -inf) to 2pi (delta -> +inf).
template <typename Real = double>
Real solve_detuning_bisection(Real phi) {
    constexpr Real two_pi = 2 * std::numbers::pi_v<Real>;
    phi = std::fmod(phi, two_pi);
    if (phi < 0) phi += two_pi;
    if (!(phi > 0)) throw Error(ErrorKind::NoSolution, "no finite detuning yields zero phase");
    auto f = [&](Real d) { return phase_in_turn(reflection_at(Real(0), d)) - phi; };

    Real lo = -1, hi = 1;
    for (int i = 0; f(lo) > 0; ++i) {
        if (i > 1100) throw Error(ErrorKind::NoSolution, "cannot bracket detuning");
        lo *= 2;
    }
    for (int i = 0; f(hi) < 0; ++i) {
        if (i > 1100) throw Error(ErrorKind::NoSolution, "cannot bracket detuning");
        hi *= 2;
    }
    for (int it = 0; it < 400; ++it) {
        const Real mid = (lo + hi) / 2;
        if (mid == lo || mid == hi) break;
        if (f(mid) < 0) lo = mid; else hi = mid;
    }
    return (lo + hi) / 2;
}

}  // namespace fockdist
