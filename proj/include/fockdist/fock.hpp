#pragma once

// Truncated Fock-space light states: windowed coherent and squeezed-coherent
// sources, photon-number statistics and overlaps.

#include "fockdist/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fockdist {

/// Tolerance used for normalization contracts at a given precision.
template <typename Real>
inline constexpr Real norm_tolerance =
    std::max(Real(1e-12), Real(1000) * std::numeric_limits<Real>::epsilon());

/// Closed photon-number interval [lo, hi].
struct FockWindow {
    int lo = 0;
    int hi = 0;

    int size() const noexcept { return hi - lo + 1; }
    bool contains(int n) const noexcept { return n >= lo && n <= hi; }
    friend bool operator==(const FockWindow&, const FockWindow&) = default;
};

/// Complex amplitudes over a photon-number window; zero outside it.
template <typename Real>
class BasicFockVector {
public:
    using Scalar = std::complex<Real>;
    using Amplitudes = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicFockVector() : BasicFockVector(number_state(0)) {}

    /// Takes amplitudes for n = window_lo .. window_lo + amps.size() - 1. When
    /// `normalized` is set the squared norm must be 1 within tolerance.
    BasicFockVector(int window_lo, Amplitudes amps, bool normalized,
                    Real discarded_mass = 0)
        : lo_(window_lo), amps_(std::move(amps)), normalized_(normalized),
          discarded_mass_(discarded_mass) {
        if (lo_ < 0) throw Error(ErrorKind::InvalidSpec, "window_lo must be >= 0");
        if (amps_.size() == 0) throw Error(ErrorKind::InvalidSpec, "empty photon-number window");
        if (normalized_ && std::abs(norm_squared() - Real(1)) > norm_tolerance<Real>)
            throw Error(ErrorKind::ContractViolation, "FockVector flagged normalized but norm^2 != 1");
    }

    static BasicFockVector number_state(int n) {
        Amplitudes a(1);
        a(0) = Scalar(1);
        return BasicFockVector(n, std::move(a), true);
    }

    /// Renormalizes arbitrary amplitudes; throws on a null vector.
    static BasicFockVector from_unnormalized(int window_lo, Amplitudes amps) {
        const Real n2 = amps.squaredNorm();
        if (!(n2 > Real(0)) || !std::isfinite(n2))
            throw Error(ErrorKind::DegenerateState, "cannot normalize a null or non-finite vector");
        amps /= std::sqrt(n2);
        return BasicFockVector(window_lo, std::move(amps), true);
    }

    int window_lo() const noexcept { return lo_; }
    int window_hi() const noexcept { return lo_ + static_cast<int>(amps_.size()) - 1; }
    FockWindow window() const noexcept { return {window_lo(), window_hi()}; }
    int size() const noexcept { return static_cast<int>(amps_.size()); }
    const Amplitudes& amps() const noexcept { return amps_; }
    bool normalized() const noexcept { return normalized_; }
    /// Untruncated probability mass that the window dropped before renormalizing.
    Real discarded_mass() const noexcept { return discarded_mass_; }

    Scalar amplitude(int n) const {
        return window().contains(n) ? amps_(n - lo_) : Scalar(0);
    }
    Real probability(int n) const { return std::norm(amplitude(n)); }
    Real norm_squared() const { return amps_.squaredNorm(); }

    /// Multiplies every amplitude by a phase; handy for phase-invariance checks.
    BasicFockVector with_global_phase(Scalar phase) const {
        return BasicFockVector(lo_, amps_ * phase, false, discarded_mass_).renormalized();
    }

    BasicFockVector renormalized() const {
        auto out = from_unnormalized(lo_, amps_);
        out.discarded_mass_ = discarded_mass_;
        return out;
    }

private:
    int lo_ = 0;
    Amplitudes amps_;
    bool normalized_ = true;
    Real discarded_mass_ = 0;
};

using FockVector = BasicFockVector<double>;

template <typename Real>
struct BasicPhotonStats {
    Real mean = 0;
    Real variance = 0;
    Real std_dev = 0;
    /// (variance - mean) / mean; reported as 0 for the vacuum.
    Real mandel_q = 0;
};
using PhotonStats = BasicPhotonStats<double>;

/// Source description. alpha and squeeze_r are real; squeeze_theta is carried
/// but only 0 is supported.
template <typename Real>
struct BasicSourceSpec {
    Real alpha = 0;
    Real squeeze_r = 0;
    Real squeeze_theta = 0;
    Real window_sigmas = 3;
    /// Explicit window that replaces the mean +- window_sigmas * sigma rule.
    std::optional<FockWindow> window;

    void validate() const {
        if (!std::isfinite(alpha) || !std::isfinite(squeeze_r) || !std::isfinite(squeeze_theta))
            throw Error(ErrorKind::InvalidSpec, "source parameters must be finite");
        if (alpha < 0) throw Error(ErrorKind::InvalidSpec, "alpha must be >= 0 (real amplitudes only)");
        if (squeeze_r < 0) throw Error(ErrorKind::InvalidSpec, "squeeze_r must be >= 0");
        if (!(window_sigmas > 0)) throw Error(ErrorKind::InvalidSpec, "window_sigmas must be > 0");
        if (window && (window->lo < 0 || window->hi < window->lo))
            throw Error(ErrorKind::InvalidSpec, "explicit window must satisfy 0 <= lo <= hi");
    }
};
using SourceSpec = BasicSourceSpec<double>;

/// <n> = alpha^2 + sinh^2 r.
template <typename Real>
Real source_mean(const BasicSourceSpec<Real>& spec) {
    const Real sh = std::sinh(spec.squeeze_r);
    return spec.alpha * spec.alpha + sh * sh;
}

/// <(dn)^2> = alpha^2 e^{-2r} + 2 sinh^2 r cosh^2 r.
template <typename Real>
Real source_variance(const BasicSourceSpec<Real>& spec) {
    const Real r = spec.squeeze_r;
    const Real sh = std::sinh(r), ch = std::cosh(r);
    return spec.alpha * spec.alpha * std::exp(-2 * r) + 2 * sh * sh * ch * ch;
}

/// [ceil(mean - w sigma) clamped at 0, floor(mean + w sigma)], or the explicit override.
template <typename Real>
FockWindow source_window(const BasicSourceSpec<Real>& spec) {
    spec.validate();
    if (spec.window) return *spec.window;
    const Real mean = source_mean(spec);
    const Real half = spec.window_sigmas * std::sqrt(source_variance(spec));
    const Real lo = std::max(Real(0), std::ceil(mean - half));
    const Real hi = std::floor(mean + half);
    if (!(hi < Real(std::numeric_limits<int>::max() / 2)))
        throw Error(ErrorKind::NumericRange, "photon-number window exceeds supported range");
    if (hi < lo)
        throw Error(ErrorKind::InvalidSpec, "photon-number window is empty for this source");
    return {static_cast<int>(lo), static_cast<int>(hi)};
}

namespace detail {

inline constexpr int max_window_size = 10'000'000;

/// log|a_k| for a windowed set of real amplitudes plus their signs.
template <typename Real>
struct LogAmplitudes {
    std::vector<Real> log_mag;
    std::vector<int> sign;
};

/// Turns log-magnitudes into a normalized vector and records the dropped mass.
template <typename Real>
BasicFockVector<Real> assemble(const FockWindow& w, const LogAmplitudes<Real>& la) {
    const Real neg_inf = -std::numeric_limits<Real>::infinity();
    Real peak = neg_inf;
    for (Real v : la.log_mag) peak = std::max(peak, v);
    if (peak == neg_inf)
        throw Error(ErrorKind::InvalidSpec, "source has no support inside its window");

    typename BasicFockVector<Real>::Amplitudes amps(w.size());
    Real scaled_mass = 0;
    for (int i = 0; i < w.size(); ++i) {
        const Real m = la.sign[i] == 0 ? Real(0) : std::exp(la.log_mag[i] - peak);
        amps(i) = static_cast<Real>(la.sign[i]) * m;
        scaled_mass += m * m;
    }
    // Absolute captured mass = scaled_mass * e^{2 peak}.
    const Real captured = std::exp(std::log(scaled_mass) + 2 * peak);
    amps /= std::sqrt(scaled_mass);
    const Real dropped = std::clamp(Real(1) - captured, Real(0), Real(1));
    return BasicFockVector<Real>(w.lo, std::move(amps), true, dropped);
}

}  // namespace detail

/// Windowed coherent state with Poisson weights, built from
/// log(alpha^k / sqrt(k!)) so large k cannot overflow.
template <typename Real>
BasicFockVector<Real> coherent_state(const BasicSourceSpec<Real>& spec) {
    spec.validate();
    if (spec.squeeze_r != 0)
        throw Error(ErrorKind::InvalidSpec, "coherent_state requires squeeze_r = 0");
    if (spec.squeeze_theta != 0)
        throw Error(ErrorKind::Unsupported, "complex squeezing phase is not supported");
    const FockWindow w = source_window(spec);
    if (w.size() > detail::max_window_size)
        throw Error(ErrorKind::NumericRange, "photon-number window too large");

    detail::LogAmplitudes<Real> la;
    la.log_mag.resize(w.size());
    la.sign.assign(w.size(), 1);
    const Real a = spec.alpha;
    const Real log_a = a > 0 ? std::log(a) : -std::numeric_limits<Real>::infinity();
    for (int i = 0; i < w.size(); ++i) {
        const int k = w.lo + i;
        if (a == 0) {
            la.log_mag[i] = k == 0 ? Real(0) : -std::numeric_limits<Real>::infinity();
            la.sign[i] = k == 0 ? 1 : 0;
            continue;
        }
        la.log_mag[i] = -a * a / 2 + Real(k) * log_a - std::lgamma(Real(k) + 1) / 2;
    }
    return detail::assemble(w, la);
}

/// Displaced squeezed vacuum D(alpha) S(r)|0> for real alpha and r.
///
/// Amplitudes are
///   <k|alpha,r> = (tanh r / 2)^{k/2} H_k(x) / sqrt(k! cosh r)
///                 * exp(-alpha^2 (1 + tanh r) / 2),   x = alpha e^r / sqrt(sinh 2r).
/// With b_k = (tanh r / 2)^{k/2} H_k(x) / sqrt(k!) the Hermite recurrence becomes
///   b_{k+1} = (c b_k - tanh(r) sqrt(k) b_{k-1}) / sqrt(k+1),  c = alpha e^r / cosh r,
/// which stays finite at r = 0 (where it reduces to alpha^k / sqrt(k!)). The
/// recurrence runs on a rescaled pair with a running log scale.
template <typename Real>
BasicFockVector<Real> squeezed_coherent_state(const BasicSourceSpec<Real>& spec) {
    spec.validate();
    if (spec.squeeze_theta != 0)
        throw Error(ErrorKind::Unsupported, "complex squeezing phase is not supported");
    const FockWindow w = source_window(spec);
    if (w.size() > detail::max_window_size)
        throw Error(ErrorKind::NumericRange, "photon-number window too large");

    const Real r = spec.squeeze_r;
    const Real a = spec.alpha;
    const Real ch = std::cosh(r);
    const Real t = std::tanh(r);
    const Real c = a * std::exp(r) / ch;
    const Real log_prefactor = -a * a * (1 + t) / 2 - std::log(ch) / 2;
    if (!std::isfinite(c) || !std::isfinite(log_prefactor) || !std::isfinite(ch))
        throw Error(ErrorKind::NumericRange, "squeezing parameter out of representable range");

    constexpr Real big = Real(1e150);
    const Real log_big = std::log(big);
    const Real neg_inf = -std::numeric_limits<Real>::infinity();

    detail::LogAmplitudes<Real> la;
    la.log_mag.assign(w.size(), neg_inf);
    la.sign.assign(w.size(), 0);
    auto record = [&](int k, Real b, Real log_scale) {
        if (k < w.lo || k > w.hi) return;
        const int i = k - w.lo;
        if (b == 0) return;
        la.log_mag[i] = std::log(std::abs(b)) + log_scale + log_prefactor;
        la.sign[i] = b > 0 ? 1 : -1;
    };

    Real prev = 0, cur = 1, log_scale = 0;
    record(0, cur, log_scale);
    for (int k = 0; k < w.hi; ++k) {
        const Real next = (c * cur - t * std::sqrt(Real(k)) * prev) / std::sqrt(Real(k + 1));
        prev = cur;
        cur = next;
        if (!std::isfinite(cur))
            throw Error(ErrorKind::NumericRange, "Hermite recurrence overflowed");
        const Real mag = std::max(std::abs(cur), std::abs(prev));
        if (mag > big) {
            cur /= big; prev /= big; log_scale += log_big;
        } else if (mag != 0 && mag < 1 / big) {
            cur *= big; prev *= big; log_scale -= log_big;
        }
        record(k + 1, cur, log_scale);
    }
    for (Real v : la.log_mag)
        if (std::isnan(v)) throw Error(ErrorKind::NumericRange, "NaN in squeezed amplitudes");
    return detail::assemble(w, la);
}

/// Mean, variance and Mandel Q of a normalized state.
template <typename Real>
BasicPhotonStats<Real> photon_stats(const BasicFockVector<Real>& state) {
    if (std::abs(state.norm_squared() - Real(1)) > norm_tolerance<Real>)
        throw Error(ErrorKind::ContractViolation, "photon_stats requires a normalized state");
    Real m1 = 0, m2 = 0;
    for (int i = 0; i < state.size(); ++i) {
        const Real n = Real(state.window_lo() + i);
        const Real p = std::norm(state.amps()(i));
        m1 += n * p;
        m2 += n * n * p;
    }
    BasicPhotonStats<Real> s;
    s.mean = m1;
    s.variance = std::max(Real(0), m2 - m1 * m1);
    s.std_dev = std::sqrt(s.variance);
    s.mandel_q = m1 > 0 ? (s.variance - m1) / m1 : Real(0);
    return s;
}

/// <a|b> over the union of both windows.
template <typename Real>
std::complex<Real> overlap(const BasicFockVector<Real>& a, const BasicFockVector<Real>& b) {
    if (std::abs(a.norm_squared() - Real(1)) > norm_tolerance<Real> ||
        std::abs(b.norm_squared() - Real(1)) > norm_tolerance<Real>)
        throw Error(ErrorKind::ContractViolation, "overlap requires normalized states");
    const int lo = std::max(a.window_lo(), b.window_lo());
    const int hi = std::min(a.window_hi(), b.window_hi());
    std::complex<Real> acc(0);
    for (int n = lo; n <= hi; ++n) acc += std::conj(a.amplitude(n)) * b.amplitude(n);
    return acc;
}

/// Equal-weight superposition over a window; the planner oracle's input.
template <typename Real>
BasicFockVector<Real> uniform_superposition(const FockWindow& w) {
    typename BasicFockVector<Real>::Amplitudes amps =
        BasicFockVector<Real>::Amplitudes::Constant(w.size(), std::complex<Real>(1));
    return BasicFockVector<Real>::from_unnormalized(w.lo, std::move(amps));
}

}  // namespace fockdist
