#include "fockdist/pulse.hpp"

#include "fockdist/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace fockdist::pulse {

namespace {

constexpr double endpoint_floor = 1e-12;
constexpr double trace_tolerance = 1e-6;
constexpr double overflow_tolerance = 1e-4;
constexpr cd I{0.0, 1.0};

// Phi(y) - Phi(x) for the standard normal CDF without cancellation in either tail.
double normal_mass(double x, double y) {
    const double s = std::numbers::sqrt2;
    if (x + y >= 0) return 0.5 * (std::erfc(x / s) - std::erfc(y / s));
    return 0.5 * (std::erfc(-y / s) - std::erfc(-x / s));
}

}  // namespace

void PulseConfig::validate() const {
    const auto finite = [](double x) { return std::isfinite(x); };
    if (!(cavity.kappa > 0) || !(cavity.gamma > 0) || !(cavity.g >= 0) || !finite(cavity.g) ||
        !finite(cavity.kappa) || !finite(cavity.gamma))
        throw Error(ErrorKind::InvalidConfig, "pulse config needs kappa, gamma > 0 and g >= 0");
    if (!(alpha_in >= 0) || !finite(alpha_in))
        throw Error(ErrorKind::InvalidConfig, "alpha_in must be a finite value >= 0");
    if (!(dt > 0) || !(t_max > 0) || !finite(dt) || !finite(t_max))
        throw Error(ErrorKind::InvalidConfig, "dt and t_max must be > 0");
    const double n = t_max / dt;
    if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n))
        throw Error(ErrorKind::InvalidConfig, "t_max must be an integer multiple of dt");
    if (!(pulse.width > 0) || !(pulse.center > 0) || !(pulse.center < t_max))
        throw Error(ErrorKind::InvalidConfig, "pulse needs width > 0 and 0 < center < t_max");
    const double need = alpha_in * alpha_in + 3 * alpha_in;
    for (int t : {trunc_u, trunc_c, trunc_v})
        if (t < 0 || t + 1e-9 < need)
            throw Error(ErrorKind::InvalidConfig,
                        "mode truncations must be >= alpha^2 + 3 alpha");
    if (sample_every < 0) throw Error(ErrorKind::InvalidConfig, "sample_every must be >= 0");
    (void)detuning();
}

double PulseConfig::detuning() const {
    if (detuning_override) {
        if (!std::isfinite(*detuning_override))
            throw Error(ErrorKind::InvalidConfig, "detuning override must be finite");
        return *detuning_override;
    }
    return solve_detuning(phi_target);
}

int PulseConfig::steps() const { return static_cast<int>(std::llround(t_max / dt)); }

int PulseConfig::sample_stride() const {
    if (sample_every > 0) return sample_every;
    return std::max(1, steps() / 100);
}

CouplingProfiles coupling_profiles(const PulseConfig& config) {
    config.validate();
    CouplingProfiles p;
    const int points = 2 * config.steps() + 1;
    p.h = config.dt / 2;
    const double t0 = config.pulse.center, tau = config.pulse.width;
    const double za = -t0 / tau, zb = (config.t_max - t0) / tau;
    const double total = normal_mass(za, zb);

    auto u_at = [&](double t) {
        const double z = (t - t0) / tau;
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
        return std::sqrt(pdf / tau / total);
    };

    p.t.resize(points);
    p.u.resize(points);
    p.u_emitted.resize(points);
    p.g_u.resize(points);
    for (int k = 0; k < points; ++k) {
        const double t = std::min(config.t_max, k * p.h);
        const double z = (t - t0) / tau;
        p.t[k] = t;
        p.u[k] = u_at(t);
        p.u_emitted[k] = normal_mass(za, z) / total;
        const double remaining = normal_mass(z, zb) / total;
        p.g_u[k] = remaining < endpoint_floor ? cd{} : std::conj(p.u[k]) / std::sqrt(remaining);
    }

    // Composite Simpson over the grid; the pulse must carry unit norm.
    double simpson = 0;
    for (int k = 0; k < points; ++k) {
        const double w = (k == 0 || k == points - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        simpson += w * std::norm(p.u[k]);
    }
    simpson *= p.h / 3;
    if (std::abs(simpson - 1.0) > 1e-6)
        throw Error(ErrorKind::InvalidConfig, "input pulse is not normalized on the time grid");

    if (config.output_mode == OutputMode::SameAsInput) {
        p.v = p.u;
        p.v_absorbed = p.u_emitted;
    } else {
        // Empty-cavity linear response: c' = -(i delta_c + 1/2) c - u, out = u + c.
        const double delta = config.detuning();
        const cd rate = I * (-delta / 2) + 0.5;
        auto deriv = [&](double t, cd c) { return -rate * c - u_at(t); };
        const cd carrier = reflection_at(0.0, delta);
        p.v.resize(points);
        cd c{};
        p.v[0] = (p.u[0] + c) / carrier;
        for (int k = 1; k < points; ++k) {
            const double t = p.t[k - 1], h = p.t[k] - p.t[k - 1];
            const cd k1 = deriv(t, c);
            const cd k2 = deriv(t + h / 2, c + h / 2 * k1);
            const cd k3 = deriv(t + h / 2, c + h / 2 * k2);
            const cd k4 = deriv(t + h, c + h * k3);
            c += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            p.v[k] = (p.u[k] + c) / carrier;
        }
        p.v_absorbed.assign(points, 0.0);
        for (int k = 1; k < points; ++k)
            p.v_absorbed[k] = p.v_absorbed[k - 1] +
                              0.5 * (p.t[k] - p.t[k - 1]) * (std::norm(p.v[k - 1]) + std::norm(p.v[k]));
        const double norm = p.v_absorbed.back();
        if (!(norm > 0)) throw Error(ErrorKind::InvalidConfig, "filtered output mode has zero norm");
        for (int k = 0; k < points; ++k) {
            p.v[k] /= std::sqrt(norm);
            p.v_absorbed[k] /= norm;
        }
    }

    p.g_v.resize(points);
    for (int k = 0; k < points; ++k)
        p.g_v[k] = p.v_absorbed[k] < endpoint_floor ? cd{} : -std::conj(p.v[k]) / std::sqrt(p.v_absorbed[k]);
    return p;
}

ProductBasis::ProductBasis(int trunc_u, int trunc_c, int trunc_v, std::optional<int> excitation_cap)
    : tu_(trunc_u), tc_(trunc_c), tv_(trunc_v) {
    if (tu_ < 0 || tc_ < 0 || tv_ < 0) throw Error(ErrorKind::InvalidConfig, "negative truncation");
    full_to_local_.assign(full_dim(), -1);
    for (int nu = 0; nu <= tu_; ++nu)
        for (int a = 0; a < 3; ++a)
            for (int nc = 0; nc <= tc_; ++nc)
                for (int nv = 0; nv <= tv_; ++nv) {
                    const BasisState s{nu, a, nc, nv};
                    const int excitation = nu + nc + nv + (a == 2 ? 1 : 0);
                    if (excitation_cap && excitation > *excitation_cap) continue;
                    full_to_local_[full_index(s)] = static_cast<int>(states_.size());
                    states_.push_back(s);
                }
}

int ProductBasis::full_index(const BasisState& s) const {
    return ((s.n_u * 3 + s.atom) * (tc_ + 1) + s.n_c) * (tv_ + 1) + s.n_v;
}

int ProductBasis::index(const BasisState& s) const {
    if (s.n_u < 0 || s.n_u > tu_ || s.n_c < 0 || s.n_c > tc_ || s.n_v < 0 || s.n_v > tv_ ||
        s.atom < 0 || s.atom > 2)
        return -1;
    return full_to_local_[full_index(s)];
}

DensityOperator::DensityOperator(std::shared_ptr<const ProductBasis> basis, Eigen::MatrixXcd matrix)
    : basis_(std::move(basis)), matrix_(std::move(matrix)) {
    if (!basis_ || matrix_.rows() != basis_->size() || matrix_.cols() != basis_->size())
        throw Error(ErrorKind::ContractViolation, "density matrix does not match its basis");
}

Eigen::MatrixXcd DensityOperator::full_matrix() const {
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(dim(), dim());
    for (int i = 0; i < basis_->size(); ++i)
        for (int j = 0; j < basis_->size(); ++j)
            full(basis_->full_index(basis_->state(i)), basis_->full_index(basis_->state(j))) = matrix_(i, j);
    return full;
}

double DensityOperator::trace() const { return matrix_.trace().real(); }

double DensityOperator::hermiticity_error() const {
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
    const Eigen::MatrixXcd herm = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

namespace {

std::shared_ptr<const ProductBasis> make_basis(const PulseConfig& c) {
    std::optional<int> cap;
    if (c.restrict_excitations) cap = c.trunc_u;
    return std::make_shared<const ProductBasis>(c.trunc_u, c.trunc_c, c.trunc_v, cap);
}

// Truncated input amplitudes C_n, n = 0..trunc.
Eigen::VectorXcd input_amplitudes(double alpha, int trunc) {
    SourceSpec spec;
    spec.alpha = alpha;
    spec.window = FockWindow{0, trunc};
    const FockVector psi = coherent_state(spec);
    Eigen::VectorXcd c(trunc + 1);
    for (int n = 0; n <= trunc; ++n) c(n) = psi.amplitude(n);
    return c;
}

enum class Mode { U, C, V };

SparseOp lowering(const ProductBasis& b, Mode m) {
    std::vector<Eigen::Triplet<cd>> trip;
    for (int i = 0; i < b.size(); ++i) {
        BasisState s = b.state(i);
        int& n = m == Mode::U ? s.n_u : (m == Mode::C ? s.n_c : s.n_v);
        if (n == 0) continue;
        const double amp = std::sqrt(static_cast<double>(n));
        --n;
        const int j = b.index(s);
        if (j >= 0) trip.emplace_back(j, i, amp);
    }
    SparseOp op(b.size(), b.size());
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

SparseOp atom_lowering(const ProductBasis& b) {
    std::vector<Eigen::Triplet<cd>> trip;
    for (int i = 0; i < b.size(); ++i) {
        BasisState s = b.state(i);
        if (s.atom != 2) continue;
        s.atom = 0;
        const int j = b.index(s);
        if (j >= 0) trip.emplace_back(j, i, 1.0);
    }
    SparseOp op(b.size(), b.size());
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
}

// out = s * x, one dense column at a time. Spelling out the complex product
// keeps it inline; std::complex multiplication goes through a library call.
void sparse_times(const SparseOp& s, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
    out.resize(s.rows(), x.cols());
    const int* outer = s.outerIndexPtr();
    const int* inner = s.innerIndexPtr();
    const int* counts = s.innerNonZeroPtr();  // null when compressed
    const cd* val = s.valuePtr();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const cd* col = x.col(j).data();
        cd* o = out.col(j).data();
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            double re = 0, im = 0;
            const int end = counts ? outer[i] + counts[i] : outer[i + 1];
            for (int p = outer[i]; p < end; ++p) {
                const cd a = val[p], b = col[inner[p]];
                re += a.real() * b.real() - a.imag() * b.imag();
                im += a.real() * b.imag() + a.imag() * b.real();
            }
            o[i] = cd(re, im);
        }
    }
}

// out = x * s^†: column j of the result combines the columns of x picked out
// by row j of s.
void times_adjoint(const Eigen::MatrixXcd& x, const SparseOp& s, Eigen::MatrixXcd& out) {
    out.setZero(x.rows(), s.rows());
    for (Eigen::Index j = 0; j < s.rows(); ++j)
        for (SparseOp::InnerIterator it(s, j); it; ++it) out.col(j) += std::conj(it.value()) * x.col(it.col());
}

class MasterEquation {
public:
    MasterEquation(const PulseConfig& config, const ProductBasis& basis, CouplingProfiles profiles)
        : prof_(std::move(profiles)), gamma_(config.gamma_scaled()) {
        a_u_ = lowering(basis, Mode::U);
        a_ = lowering(basis, Mode::C);
        a_v_ = lowering(basis, Mode::V);
        sge_ = atom_lowering(basis);
        sge_dag_ = sge_.adjoint();
        const SparseOp a_dag = a_.adjoint();
        const SparseOp a_u_dag = a_u_.adjoint();
        const double g = config.g_scaled();
        const double delta = config.detuning();
        // Products lower first so that restricted operators compose exactly.
        const SparseOp jc = sge_dag_ * a_;
        const SparseOp jc_dag = jc.adjoint();
        h0_ = cd(-delta / 2) * SparseOp(a_dag * a_) + cd(g) * (jc + jc_dag);
        h0_ -= cd(0, 0.5 * gamma_) * SparseOp(sge_dag_ * sge_);
        au_dag_a_ = a_u_dag * a_;
        a_dag_av_ = a_dag * a_v_;
        au_dag_av_ = a_u_dag * a_v_;
        au_dag_a_h_ = au_dag_a_.adjoint();
        a_dag_av_h_ = a_dag_av_.adjoint();
        au_dag_av_h_ = au_dag_av_.adjoint();
    }

    // Derivative at half-grid index k. rho is Hermitian, so (A rho)^† = rho A^†
    // and every product below walks dense columns contiguously.
    Eigen::MatrixXcd rhs(int k, const Eigen::MatrixXcd& rho) {
        const Generators& gen = generators(k);
        Eigen::MatrixXcd out;
        sparse_times(gen.h_nh, rho, out);
        times_adjoint(rho, gen.h_nh, work_);
        out = cd(0, -1) * out + cd(0, 1) * work_;
        times_adjoint(rho, gen.l, work_);
        sparse_times(gen.l, work_, adj_);
        out += adj_;
        if (gamma_ > 0) {
            times_adjoint(rho, sge_, work_);
            sparse_times(sge_, work_, adj_);
            out += gamma_ * adj_;
        }
        return out;
    }

private:
    struct Generators {
        int k = -1;
        SparseOp h_nh;  // H - (i/2)(L^† L + gamma sigma_eg sigma_ge)
        SparseOp l;
    };

    const Generators& generators(int k) {
        for (auto& g : cache_)
            if (g.k == k) return g;
        Generators& slot = cache_[next_slot_];
        next_slot_ = (next_slot_ + 1) % cache_.size();
        const cd gu = prof_.g_u[k], gv = prof_.g_v[k];
        slot.k = k;
        slot.l = a_ + std::conj(gu) * a_u_ + std::conj(gv) * a_v_;
        const SparseOp l_dag = slot.l.adjoint();
        const cd half_i(0, 0.5);
        slot.h_nh = h0_ + half_i * (gu * au_dag_a_ - std::conj(gu) * au_dag_a_h_) +
                    half_i * (std::conj(gv) * a_dag_av_ - gv * a_dag_av_h_) +
                    half_i * (gu * std::conj(gv) * au_dag_av_ - std::conj(gu) * gv * au_dag_av_h_);
        slot.h_nh -= half_i * SparseOp(l_dag * slot.l);
        return slot;
    }

    CouplingProfiles prof_;
    double gamma_;
    SparseOp a_u_, a_, a_v_, sge_, sge_dag_, h0_;
    SparseOp au_dag_a_, a_dag_av_, au_dag_av_, au_dag_a_h_, a_dag_av_h_, au_dag_av_h_;
    std::array<Generators, 3> cache_;
    std::size_t next_slot_ = 0;
    Eigen::MatrixXcd work_, adj_;
};

void check_sample(const DensityOperator& rho, double t) {
    const Diagnostics d = diagnostics(rho);
    if (!std::isfinite(d.trace) || std::abs(d.trace - 1.0) > trace_tolerance) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "trace drifted by %.3e at t = %.4g; reduce dt", d.trace - 1.0, t);
        throw Error(ErrorKind::StepSize, buf);
    }
    if (d.overflow_risk > overflow_tolerance) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "population %.3e at a mode cutoff with excitation to spare at t = %.4g; raise truncations",
                      d.overflow_risk, t);
        throw Error(ErrorKind::Truncation, buf);
    }
}

}  // namespace

DensityOperator initial_state(const PulseConfig& config) {
    config.validate();
    auto basis = make_basis(config);
    const Eigen::VectorXcd c = input_amplitudes(config.alpha_in, config.trunc_u);
    const double h = std::sqrt(0.5);
    const std::array<cd, 3> atom = config.atom_init == AtomInit::Superposition ? std::array<cd, 3>{h, h, 0}
                                   : config.atom_init == AtomInit::Ground      ? std::array<cd, 3>{1, 0, 0}
                                                                               : std::array<cd, 3>{0, 1, 0};
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->size());
    for (int n = 0; n <= config.trunc_u; ++n)
        for (int a = 0; a < 2; ++a) {
            const int i = basis->index({n, a, 0, 0});
            if (i >= 0) psi(i) = c(n) * atom[a];
        }
    return DensityOperator(basis, psi * psi.adjoint());
}

PulseTrajectory evolve(const PulseConfig& config) { return evolve(config, initial_state(config)); }

PulseTrajectory evolve(const PulseConfig& config, const DensityOperator& initial) {
    config.validate();
    const ProductBasis& basis = initial.basis();
    if (basis.trunc_u() != config.trunc_u || basis.trunc_c() != config.trunc_c ||
        basis.trunc_v() != config.trunc_v)
        throw Error(ErrorKind::InvalidConfig, "initial state truncations differ from the config");

    MasterEquation eq(config, basis, coupling_profiles(config));
    const int steps = config.steps();
    const int stride = config.sample_stride();
    const double dt = config.dt;

    PulseTrajectory traj;
    Eigen::MatrixXcd rho = initial.matrix();
    check_sample(initial, 0.0);
    traj.samples.push_back({0.0, initial});
    for (int n = 0; n < steps; ++n) {
        const int k = 2 * n;
        const Eigen::MatrixXcd k1 = eq.rhs(k, rho);
        const Eigen::MatrixXcd k2 = eq.rhs(k + 1, rho + (dt / 2) * k1);
        const Eigen::MatrixXcd k3 = eq.rhs(k + 1, rho + (dt / 2) * k2);
        const Eigen::MatrixXcd k4 = eq.rhs(k + 2, rho + dt * k3);
        rho += (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((n + 1) % stride == 0 || n + 1 == steps) {
            const double t = (n + 1) * dt;
            DensityOperator d(initial.basis_ptr(), rho);
            check_sample(d, t);
            traj.samples.push_back({t, std::move(d)});
        }
    }
    return traj;
}

Eigen::MatrixXcd reduce_atom_output(const DensityOperator& rho) {
    const ProductBasis& b = rho.basis();
    const int nv = b.trunc_v() + 1;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(3 * nv, 3 * nv);
    for (int i = 0; i < b.size(); ++i) {
        const BasisState& si = b.state(i);
        for (int j = 0; j < b.size(); ++j) {
            const BasisState& sj = b.state(j);
            if (si.n_u != sj.n_u || si.n_c != sj.n_c) continue;
            out(si.atom * nv + si.n_v, sj.atom * nv + sj.n_v) += rho.matrix()(i, j);
        }
    }
    return out;
}

Eigen::VectorXcd expected_state(const PulseConfig& config, const Angle& phi) {
    const int nv = config.trunc_v + 1;
    const int top = std::min(config.trunc_u, config.trunc_v);
    Eigen::VectorXcd c = input_amplitudes(config.alpha_in, config.trunc_u).head(top + 1);
    c.normalize();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(3 * nv);
    const double h = std::sqrt(0.5);
    for (int n = 0; n <= top; ++n) {
        psi(n) = h * c(n);
        psi(nv + n) = h * phase_factor<double>(phi, n) * c(n);
    }
    return psi;
}

double fidelity(const DensityOperator& rho, const PulseConfig& config, const Angle& phi) {
    const Eigen::VectorXcd psi = expected_state(config, phi);
    return (psi.adjoint() * reduce_atom_output(rho) * psi)(0, 0).real();
}

std::vector<double> reflection_fidelity(const PulseTrajectory& trajectory, const PulseConfig& config) {
    std::vector<double> f;
    f.reserve(trajectory.samples.size());
    for (const auto& s : trajectory.samples) f.push_back(fidelity(s.rho, config, config.phi_target));
    return f;
}

Diagnostics diagnostics(const DensityOperator& rho) {
    const ProductBasis& b = rho.basis();
    Diagnostics d;
    for (int i = 0; i < b.size(); ++i) {
        const BasisState& s = b.state(i);
        const double p = rho.matrix()(i, i).real();
        d.trace += p;
        if (s.atom == 2) d.atom_e_population += p;
        d.input_mode_n += s.n_u * p;
        d.cavity_n += s.n_c * p;
        d.output_mode_n += s.n_v * p;
        const int excitation = s.n_u + s.n_c + s.n_v + (s.atom == 2 ? 1 : 0);
        const bool at_cutoff = (s.n_u == b.trunc_u() && excitation > b.trunc_u()) ||
                               (s.n_c == b.trunc_c() && excitation > b.trunc_c()) ||
                               (s.n_v == b.trunc_v() && excitation > b.trunc_v());
        if (at_cutoff) d.overflow_risk += p;
    }
    return d;
}

std::string trajectory_csv(const PulseTrajectory& trajectory, const PulseConfig& config) {
    std::ostringstream os;
    os << "t,fidelity,trace,atom_e_population,input_mode_n,cavity_n,output_mode_n\n";
    char buf[256];
    for (const auto& s : trajectory.samples) {
        const Diagnostics d = diagnostics(s.rho);
        std::snprintf(buf, sizeof buf, "%.6f,%.10f,%.12f,%.6e,%.6e,%.6e,%.6e\n", s.t,
                      fidelity(s.rho, config, config.phi_target), d.trace, d.atom_e_population,
                      d.input_mode_n, d.cavity_n, d.output_mode_n);
        os << buf;
    }
    return os.str();
}

}  // namespace fockdist::pulse
