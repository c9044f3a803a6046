#pragma once

// Fock-state distillation: schedule derivation, execution on a light state,
// probability bookkeeping, prime-indexed deletion and outcome-tree enumeration.

#include "fockdist/angle.hpp"
#include "fockdist/fock.hpp"
#include "fockdist/gates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fockdist {

/// One iteration: reflect with D(phi), rotate with U_a[theta], keep an outcome.
struct PlanStep {
    int iteration_index = 0;  // m; phi = pi / 2^m
    Angle phi;
    Angle theta;
    Outcome keep = Outcome::G;
};

struct DistillationPlan {
    int target = 0;
    std::vector<PlanStep> steps;
    FockWindow source_window;
};

/// Q = ceil(log2(6 sigma)) - 1, clamped at 0.
int iteration_count(double std_dev);

/// Fewest iterations whose final congruence class meets `window` only at
/// `target`: smallest Q with 2^Q > max(target - lo, hi - target).
int iteration_count_for_window(int target, const FockWindow& window);

/// Largest window a Q-step plan resolves to the single number `target`.
FockWindow resolvable_window(int target, int num_steps);

/// Step m keeps the class n = r_m + 2^m j with r_m = target mod 2^m. After
/// D(pi/2^m) those numbers carry e^{i pi r_m / 2^m} (-1)^j, so
/// theta_m = pi r_m / 2^m and the kept outcome is g when j_target is even.
DistillationPlan plan(int target, int num_steps, std::optional<FockWindow> window = {});

struct IdealReflection {};
struct ExactReflection {
    double cooperativity;
};
/// Ideal uses D(phi); Exact uses r0 = e^{i phi} and r1 from the cooperativity
/// at the detuning that realizes phi.
using ReflectionModel = std::variant<IdealReflection, ExactReflection>;

/// One executed iteration.
struct StepRecord {
    PlanStep step;
    Outcome outcome = Outcome::G;
    std::vector<int> survivors;  // photon numbers left after the measurement
    double probability = 0;      // probability of `outcome` at this step
    double renorm_loss = 0;      // reflection non-unitarity (exact model only)
};

struct TrajectoryRecord {
    std::vector<int> initial_survivors;
    std::vector<StepRecord> steps;
    double cumulative_probability = 1;
    FockVector final_state;

    /// Outcome letters in step order, e.g. "ggsgg".
    std::string outcome_string() const;
};

/// Photon numbers whose probability exceeds `threshold`.
std::vector<int> support(const FockVector& state, double threshold = 1e-20);

/// Runs the plan with postselection on each step's kept outcome.
TrajectoryRecord execute(const DistillationPlan& plan, const FockVector& light,
                         const ReflectionModel& model = IdealReflection{});

/// D(pi/p), U_a[0], keep g: removes every n that is an odd multiple of p and
/// scales the rest by (1 + e^{i pi n / p}) / 2 before renormalization.
MeasurementRecord delete_fock(const FockVector& light, int p);

/// The idealized post-deletion state: the input with odd multiples of p removed
/// and nothing else reweighted.
FockVector idealized_deletion(const FockVector& light, int p);

inline constexpr int max_explore_depth = 12;

/// Enumerates every outcome sequence of `depth` standard iterations with exact
/// probabilities. At each node the rotation follows the residue fixed by the
/// outcomes so far (g keeps r, s adds 2^m). Leaves are ordered by outcome
/// string with g before s; zero-probability branches are dropped.
std::vector<TrajectoryRecord> explore_tree(const FockVector& light, int depth, int threads = 1);

/// `depth` standard iterations with Born-sampled outcomes drawn from `seed`;
/// rotations follow the residue fixed by the outcomes so far, as in explore_tree.
TrajectoryRecord sample_run(const FockVector& light, int depth, std::uint64_t seed);

/// Arithmetic-progression runs (start, stride, count) covering a sorted set.
struct SupportRun {
    int start = 0;
    int stride = 1;
    int count = 1;
    friend bool operator==(const SupportRun&, const SupportRun&) = default;
};
std::vector<SupportRun> encode_runs(const std::vector<int>& sorted);
std::vector<int> decode_runs(const std::vector<SupportRun>& runs);

/// "70..130", "70,72..128", "84,100,116".
std::string describe_support(const std::vector<int>& sorted);

}  // namespace fockdist
