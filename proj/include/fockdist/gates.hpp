#pragma once

// Joint state of the {g, s} atomic qubit and the light, plus the three protocol
// primitives: conditional phase flip, atomic rotation and atomic measurement.

#include "fockdist/angle.hpp"
#include "fockdist/cavity.hpp"
#include "fockdist/error.hpp"
#include "fockdist/fock.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <variant>

namespace fockdist {

enum class Outcome { G, S };

constexpr std::string_view to_string(Outcome o) noexcept { return o == Outcome::G ? "g" : "s"; }

/// Branch probabilities below this are treated as impossible outcomes.
inline constexpr double impossible_probability = 1e-14;

/// psi = |g> (x) amp_g + |s> (x) amp_s over one shared photon-number window.
template <typename Real>
class BasicAtomLightState {
public:
    using Scalar = std::complex<Real>;
    using Amplitudes = typename BasicFockVector<Real>::Amplitudes;

    BasicAtomLightState(int window_lo, Amplitudes amp_g, Amplitudes amp_s)
        : lo_(window_lo), g_(std::move(amp_g)), s_(std::move(amp_s)) {
        if (g_.size() != s_.size() || g_.size() == 0)
            throw Error(ErrorKind::ContractViolation, "atom branches must share one non-empty window");
        if (lo_ < 0) throw Error(ErrorKind::ContractViolation, "window_lo must be >= 0");
        if (std::abs(norm_squared() - Real(1)) > norm_tolerance<Real>)
            throw Error(ErrorKind::ContractViolation, "atom-light state is not normalized");
    }

    /// |atom> (x) light for atom = |g> or |s>.
    static BasicAtomLightState product(Outcome atom, const BasicFockVector<Real>& light) {
        Amplitudes zero = Amplitudes::Zero(light.size());
        if (atom == Outcome::G) return {light.window_lo(), light.amps(), zero};
        return {light.window_lo(), zero, light.amps()};
    }

    int window_lo() const noexcept { return lo_; }
    int size() const noexcept { return static_cast<int>(g_.size()); }
    FockWindow window() const noexcept { return {lo_, lo_ + size() - 1}; }
    const Amplitudes& amp_g() const noexcept { return g_; }
    const Amplitudes& amp_s() const noexcept { return s_; }
    const Amplitudes& branch(Outcome o) const noexcept { return o == Outcome::G ? g_ : s_; }
    Real norm_squared() const { return g_.squaredNorm() + s_.squaredNorm(); }

private:
    int lo_;
    Amplitudes g_, s_;
};

using AtomLightState = BasicAtomLightState<double>;

template <typename Real>
struct BasicMeasurementRecord {
    Outcome outcome;
    Real probability;
    BasicFockVector<Real> post_state;
};
using MeasurementRecord = BasicMeasurementRecord<double>;

template <typename Real>
struct BasicReflectionResult {
    BasicAtomLightState<Real> state;
    /// 1 - norm^2 before renormalization.
    Real renorm_loss;
};
using ReflectionResult = BasicReflectionResult<double>;

struct Postselect {
    Outcome outcome;
};
struct Sample {
    std::uint64_t seed;
};
using MeasureMode = std::variant<Postselect, Sample>;

/// Atom in (|g> + |s>)/sqrt2, light unchanged.
template <typename Real>
BasicAtomLightState<Real> prepare_superposition(const BasicFockVector<Real>& light) {
    if (std::abs(light.norm_squared() - Real(1)) > norm_tolerance<Real>)
        throw Error(ErrorKind::ContractViolation, "prepare_superposition requires normalized light");
    const Real h = std::sqrt(Real(0.5));
    return {light.window_lo(), light.amps() * h, light.amps() * h};
}

/// D(phi) = |g><g| (x) 1 + |s><s| (x) e^{i phi n}.
template <typename Real>
BasicAtomLightState<Real> apply_cpf(const BasicAtomLightState<Real>& state, const Angle& phi) {
    auto s = state.amp_s();
    for (int i = 0; i < state.size(); ++i)
        s(i) *= phase_factor<Real>(phi, state.window_lo() + i);
    return {state.window_lo(), state.amp_g(), std::move(s)};
}

/// Finite-cooperativity reflection: amp_g[n] *= r1^n, amp_s[n] *= r0^n, then
/// renormalize. renorm_loss measures the non-unitarity from |r1| < 1.
template <typename Real>
BasicReflectionResult<Real> apply_reflection_exact(const BasicAtomLightState<Real>& state,
                                                  const BasicReflectionPair<Real>& refl) {
    if (std::abs(refl.r1) > Real(1) + norm_tolerance<Real> ||
        std::abs(refl.r0) > Real(1) + norm_tolerance<Real>)
        throw Error(ErrorKind::ContractViolation, "reflection coefficients must satisfy |r| <= 1");
    const Angle arg1 = Angle::radians(static_cast<double>(std::arg(refl.r1)));
    const Angle arg0 = Angle::radians(static_cast<double>(std::arg(refl.r0)));
    const Real mag1 = std::abs(refl.r1), mag0 = std::abs(refl.r0);

    auto g = state.amp_g();
    auto s = state.amp_s();
    for (int i = 0; i < state.size(); ++i) {
        const int n = state.window_lo() + i;
        g(i) *= std::pow(mag1, Real(n)) * phase_factor<Real>(arg1, n);
        s(i) *= std::pow(mag0, Real(n)) * phase_factor<Real>(arg0, n);
    }
    const Real n2 = g.squaredNorm() + s.squaredNorm();
    if (!(n2 >= Real(1e-12)))
        throw Error(ErrorKind::DegenerateState, "state norm collapsed under reflection");
    const Real inv = 1 / std::sqrt(n2);
    g *= inv;
    s *= inv;
    return {BasicAtomLightState<Real>(state.window_lo(), std::move(g), std::move(s)), Real(1) - n2};
}

/// U_a[theta] = [[e^{i theta}, 1], [1, -e^{-i theta}]] / sqrt2 on (g, s).
///
/// The s row is evaluated as e^{-i theta} (e^{i theta} g - s) so that a
/// branch whose phases cancel comes out as an exact zero in either row.
template <typename Real>
BasicAtomLightState<Real> apply_atom_unitary(const BasicAtomLightState<Real>& state,
                                             const Angle& theta) {
    const std::complex<Real> e = phase_factor<Real>(theta, 1);
    const std::complex<Real> e_conj = std::conj(e);
    const Real h = std::sqrt(Real(0.5));
    auto g = state.amp_g();
    auto s = state.amp_s();
    for (int i = 0; i < state.size(); ++i) {
        const std::complex<Real> rotated = e * state.amp_g()(i);
        g(i) = (rotated + state.amp_s()(i)) * h;
        s(i) = e_conj * (rotated - state.amp_s()(i)) * h;
    }
    return {state.window_lo(), std::move(g), std::move(s)};
}

template <typename Real>
Real branch_probability(const BasicAtomLightState<Real>& state, Outcome o) {
    return state.branch(o).squaredNorm();
}

/// Projective measurement of the atom in {g, s}. Postselect returns the
/// requested branch; Sample draws the Born outcome from the given seed.
template <typename Real>
BasicMeasurementRecord<Real> measure_atom(const BasicAtomLightState<Real>& state,
                                          const MeasureMode& mode) {
    const Real pg = branch_probability(state, Outcome::G);
    const Real ps = branch_probability(state, Outcome::S);
    Outcome outcome;
    if (const auto* post = std::get_if<Postselect>(&mode)) {
        outcome = post->outcome;
    } else {
        std::mt19937_64 rng(std::get<Sample>(mode).seed);
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        outcome = u < static_cast<double>(pg / (pg + ps)) ? Outcome::G : Outcome::S;
        if ((outcome == Outcome::G ? pg : ps) < Real(impossible_probability))
            outcome = outcome == Outcome::G ? Outcome::S : Outcome::G;
    }
    const Real p = outcome == Outcome::G ? pg : ps;
    if (p < Real(impossible_probability))
        throw Error(ErrorKind::ImpossibleOutcome,
                    "atomic outcome |" + std::string(to_string(outcome)) + "> has zero probability");
    typename BasicFockVector<Real>::Amplitudes post = state.branch(outcome) / std::sqrt(p);
    // Norm is 1 up to rounding; renormalize against the accumulated error.
    return {outcome, p, BasicFockVector<Real>::from_unnormalized(state.window_lo(), std::move(post))};
}

}  // namespace fockdist
