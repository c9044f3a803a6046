#pragma once

// Open-system check of the conditional phase flip: an input virtual cavity
// releases a coherent pulse, it reflects off the atom-cavity system and an
// output virtual cavity absorbs it. The composite density matrix obeys a
// time-dependent Lindblad equation; fidelity is taken against the ideal
// (|g>|psi> + |s> e^{i phi n}|psi>)/sqrt2 state of atom and output mode.
//
// Internally kappa = 1: couplings are divided by kappa and all times
// (pulse center, width, t_max, dt) are in units of 1/kappa.

#include "fockdist/angle.hpp"
#include "fockdist/cavity.hpp"
#include "fockdist/fock.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fockdist::pulse {

using cd = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<cd, Eigen::RowMajor>;

enum class OutputMode {
    SameAsInput,    // v(t) = u(t)
    EmptyCavityFiltered,  // u(t) passed through the empty-cavity response, carrier phase removed
};

enum class AtomInit { Superposition, Ground, Spectator };

/// |u(t)|^2 is a normal density with mean `center` and standard deviation
/// `width`, truncated to [0, t_max] and renormalized there.
struct GaussianPulse {
    double center = 100.0;
    double width = 20.0;
};

struct PulseConfig {
    /// g may be 0 for empty-cavity reference runs; kappa and gamma must be > 0.
    CavityParams cavity{16.0, 5.0, 0.05, 0.0};
    Angle phi_target = Angle::pi_times(1);
    /// Replaces solve_detuning(phi_target) when set.
    std::optional<double> detuning_override;
    double alpha_in = 1.0;
    GaussianPulse pulse;
    double t_max = 200.0;
    double dt = 0.05;
    int trunc_u = 4;
    int trunc_c = 4;
    int trunc_v = 4;
    /// Steps between stored samples; 0 picks roughly 100 samples.
    int sample_every = 0;
    OutputMode output_mode = OutputMode::SameAsInput;
    AtomInit atom_init = AtomInit::Superposition;
    /// Integrate only inside the invariant subspace of total excitation <= trunc_u.
    bool restrict_excitations = true;

    void validate() const;
    double detuning() const;
    double g_scaled() const { return cavity.g / cavity.kappa; }
    double gamma_scaled() const { return cavity.gamma / cavity.kappa; }
    int steps() const;
    int sample_stride() const;
};

/// Pulse shapes and virtual-cavity couplings on the half-step grid t_k = k dt / 2.
struct CouplingProfiles {
    double h = 0;  // grid spacing, dt / 2
    std::vector<double> t;
    std::vector<cd> u, v;
    std::vector<double> u_emitted;   // int_0^t |u|^2
    std::vector<double> v_absorbed;  // int_0^t |v|^2
    std::vector<cd> g_u, g_v;
};

/// g_u = u* / sqrt(1 - int_0^t |u|^2), g_v = -v* / sqrt(int_0^t |v|^2). Either
/// coupling is set to 0 where its denominator drops below 1e-12.
CouplingProfiles coupling_profiles(const PulseConfig& config);

/// Product states |n_u> |atom> |n_c> |n_v>, atom index 0 = g, 1 = s, 2 = e.
struct BasisState {
    int n_u, atom, n_c, n_v;
};

class ProductBasis {
public:
    ProductBasis(int trunc_u, int trunc_c, int trunc_v, std::optional<int> excitation_cap);

    int trunc_u() const noexcept { return tu_; }
    int trunc_c() const noexcept { return tc_; }
    int trunc_v() const noexcept { return tv_; }
    /// Dimension of the full tensor product.
    int full_dim() const noexcept { return (tu_ + 1) * 3 * (tc_ + 1) * (tv_ + 1); }
    /// Number of retained states.
    int size() const noexcept { return static_cast<int>(states_.size()); }
    const BasisState& state(int i) const { return states_[i]; }
    int full_index(const BasisState& s) const;
    /// Index among retained states, or -1.
    int index(const BasisState& s) const;

private:
    int tu_, tc_, tv_;
    std::vector<BasisState> states_;
    std::vector<int> full_to_local_;
};

/// Composite density matrix over a ProductBasis (input ⊗ atom ⊗ cavity ⊗ output).
class DensityOperator {
public:
    DensityOperator(std::shared_ptr<const ProductBasis> basis, Eigen::MatrixXcd matrix);

    const ProductBasis& basis() const { return *basis_; }
    std::shared_ptr<const ProductBasis> basis_ptr() const { return basis_; }
    /// (trunc_u+1) * 3 * (trunc_c+1) * (trunc_v+1).
    int dim() const { return basis_->full_dim(); }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    /// Matrix embedded in the full tensor-product ordering.
    Eigen::MatrixXcd full_matrix() const;

    double trace() const;
    double hermiticity_error() const;
    double min_eigenvalue() const;

private:
    std::shared_ptr<const ProductBasis> basis_;
    Eigen::MatrixXcd matrix_;
};

/// Input mode in the truncated coherent state, atom per config, cavity and
/// output mode empty.
DensityOperator initial_state(const PulseConfig& config);

struct PulseSample {
    double t;
    DensityOperator rho;
};

struct PulseTrajectory {
    std::vector<PulseSample> samples;
};

/// Fixed-step RK4 integration of
///   d rho/dt = -i [H(t), rho] + D[L(t)] rho + D[sqrt(gamma) sigma_ge] rho
/// with L(t) = a + g_u* a_u + g_v* a_v and the cascaded Hamiltonian
///   H = H_s + (i/2)(g_u a_u^† a - h.c.) + (i/2)(g_v* a^† a_v - h.c.)
///         + (i/2)(g_u g_v* a_u^† a_v - h.c.),
///   H_s = -(delta/2) a^† a + g (sigma_eg a + sigma_ge a^†).
/// The cavity term carries -delta/2 so the empty cavity reflects with
/// 1 - 2/(1 - i delta). Throws StepSize when the trace drifts by more than
/// 1e-6 and Truncation when population could be pushed past a mode cutoff.
PulseTrajectory evolve(const PulseConfig& config, const DensityOperator& initial);
PulseTrajectory evolve(const PulseConfig& config);

/// Reduced state of atom ⊗ output mode (dimension 3 (trunc_v + 1)).
Eigen::MatrixXcd reduce_atom_output(const DensityOperator& rho);

/// (|g>|psi> + |s> e^{i phi n}|psi>)/sqrt2 with psi the truncated input state,
/// in the atom ⊗ output ordering.
Eigen::VectorXcd expected_state(const PulseConfig& config, const Angle& phi);

double fidelity(const DensityOperator& rho, const PulseConfig& config, const Angle& phi);

/// F(t) against the config's target phase for each sample.
std::vector<double> reflection_fidelity(const PulseTrajectory& trajectory, const PulseConfig& config);

struct Diagnostics {
    double trace = 0;
    double atom_e_population = 0;
    double input_mode_n = 0;
    double cavity_n = 0;
    double output_mode_n = 0;
    /// Population in states where a mode sits at its cutoff while more
    /// excitation is available to flow into it.
    double overflow_risk = 0;
};

Diagnostics diagnostics(const DensityOperator& rho);

/// One CSV row per sample: t,fidelity,trace,atom_e_population,input_mode_n,cavity_n,output_mode_n.
std::string trajectory_csv(const PulseTrajectory& trajectory, const PulseConfig& config);

}  // namespace fockdist::pulse
