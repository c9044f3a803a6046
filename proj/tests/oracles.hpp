#pragma once

// Reference computations used only by tests. Each one takes a different route
// from the library so agreement is meaningful.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

/// Poisson probability by direct log-space evaluation.
inline double poisson(double lambda, int k) {
    if (lambda == 0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

struct Moments {
    double mass = 0, mean = 0, variance = 0;
};

/// Normalized moments of the Poisson distribution restricted to [lo, hi].
inline Moments poisson_moments(double lambda, int lo, int hi) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (int k = lo; k <= hi; ++k) {
        const double p = poisson(lambda, k);
        m0 += p;
        m1 += k * p;
        m2 += double(k) * k * p;
    }
    return {m0, m1 / m0, m2 / m0 - (m1 / m0) * (m1 / m0)};
}

/// Sum of even-k Poisson terms over [0, hi], normalized by the mass over [0, hi].
inline double even_fraction(double lambda, int hi) {
    double even = 0, all = 0;
    for (int k = 0; k <= hi; ++k) {
        const double p = poisson(lambda, k);
        all += p;
        if (k % 2 == 0) even += p;
    }
    return even / all;
}

/// exp(G) v by scaled Taylor series.
inline Eigen::VectorXcd expm_times(const Eigen::MatrixXcd& g, Eigen::VectorXcd v) {
    const double norm = g.cwiseAbs().colwise().sum().maxCoeff();
    const int pieces = std::max(1, static_cast<int>(std::ceil(norm)));
    const Eigen::MatrixXcd h = g / double(pieces);
    for (int p = 0; p < pieces; ++p) {
        Eigen::VectorXcd term = v, acc = v;
        for (int k = 1; k < 200; ++k) {
            term = h * term / double(k);
            acc += term;
            if (term.norm() < 1e-18 * acc.norm()) break;
        }
        v = acc;
    }
    return v;
}

/// <n|D(alpha) S(r)|0> for n < dim with S(r) = exp(r/2 (a^2 - a^†2)), built
/// by exponentiating truncated ladder-operator matrices.
inline Eigen::VectorXcd displaced_squeezed_vacuum(double alpha, double r, int dim) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXcd ad = a.adjoint();
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(dim);
    vac(0) = 1;
    const Eigen::MatrixXcd squeeze = 0.5 * r * (a * a - ad * ad);
    const Eigen::MatrixXcd displace = alpha * (ad - a);
    return expm_times(displace, expm_times(squeeze, vac));
}

/// Dense simulation of the atom-light register |atom> (x) |n>, n in [0, dim).
/// Index = atom * dim + n with atom 0 = g, 1 = s.
class DenseRegister {
public:
    explicit DenseRegister(const Eigen::VectorXcd& light) : dim_(static_cast<int>(light.size())) {
        psi_ = Eigen::VectorXcd::Zero(2 * dim_);
        const double h = std::sqrt(0.5);
        psi_.head(dim_) = h * light;
        psi_.tail(dim_) = h * light;
    }

    void cpf(double phi) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2 * dim_, 2 * dim_);
        for (int n = 0; n < dim_; ++n) {
            d(n, n) = 1;
            d(dim_ + n, dim_ + n) = std::polar(1.0, phi * n);
        }
        psi_ = d * psi_;
    }

    void rotate(double theta) {
        Eigen::Matrix2cd u;
        const double h = std::sqrt(0.5);
        u << h * std::polar(1.0, theta), h, h, -h * std::polar(1.0, -theta);
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim_, dim_);
        Eigen::MatrixXcd k(2 * dim_, 2 * dim_);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) k.block(i * dim_, j * dim_, dim_, dim_) = u(i, j) * id;
        psi_ = k * psi_;
    }

    /// Projects on the atom outcome (0 = g, 1 = s) and returns the light
    /// amplitudes renormalized, with the branch probability.
    std::pair<Eigen::VectorXcd, double> measure(int atom) const {
        Eigen::VectorXcd light = psi_.segment(atom * dim_, dim_);
        const double p = light.squaredNorm();
        if (p > 0) light /= std::sqrt(p);
        return {light, p};
    }

private:
    int dim_;
    Eigen::VectorXcd psi_;
};

inline std::vector<int> support(const Eigen::VectorXcd& v, double threshold = 1e-20) {
    std::vector<int> out;
    for (int i = 0; i < v.size(); ++i)
        if (std::norm(v(i)) > threshold) out.push_back(i);
    return out;
}

}  // namespace oracle
