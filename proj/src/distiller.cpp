#include "fockdist/distiller.hpp"

#include "fockdist/cavity.hpp"

#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>

namespace fockdist {

int iteration_count(double std_dev) {
    if (!(std_dev > 0) || !std::isfinite(std_dev))
        throw Error(ErrorKind::ContractViolation, "iteration_count requires a positive standard deviation");
    const double q = std::ceil(std::log2(6.0 * std_dev)) - 1.0;
    return q > 0 ? static_cast<int>(q) : 0;
}

int iteration_count_for_window(int target, const FockWindow& window) {
    if (!window.contains(target))
        throw Error(ErrorKind::InvalidPlan, "target lies outside the source window");
    const std::int64_t reach = std::max(target - window.lo, window.hi - target);
    int q = 0;
    while ((std::int64_t{1} << q) <= reach) ++q;
    return q;
}

FockWindow resolvable_window(int target, int num_steps) {
    const std::int64_t span = (std::int64_t{1} << num_steps) - 1;
    const std::int64_t lo = std::max<std::int64_t>(0, target - span);
    const std::int64_t hi = std::min<std::int64_t>(std::numeric_limits<int>::max(), target + span);
    return {static_cast<int>(lo), static_cast<int>(hi)};
}

DistillationPlan plan(int target, int num_steps, std::optional<FockWindow> window) {
    if (target < 0) throw Error(ErrorKind::InvalidPlan, "target Fock number must be >= 0");
    if (num_steps < 0 || num_steps > 62) throw Error(ErrorKind::InvalidPlan, "step count out of range");
    DistillationPlan out;
    out.target = target;
    out.source_window = window.value_or(resolvable_window(target, num_steps));
    if (!out.source_window.contains(target))
        throw Error(ErrorKind::InvalidPlan, "target lies outside the source window");

    for (int m = 0; m < num_steps; ++m) {
        const std::int64_t period = std::int64_t{1} << m;
        const std::int64_t residue = target % period;
        const std::int64_t j = (target - residue) / period;
        PlanStep step;
        step.iteration_index = m;
        step.phi = Angle::pi_times(1, period);
        step.theta = Angle::pi_times(residue, period).reduced();
        step.keep = (j % 2 == 0) ? Outcome::G : Outcome::S;
        out.steps.push_back(step);
    }
    return out;
}

std::string TrajectoryRecord::outcome_string() const {
    std::string s;
    for (const auto& st : steps) s += to_string(st.outcome);
    return s;
}

std::vector<int> support(const FockVector& state, double threshold) {
    std::vector<int> out;
    for (int i = 0; i < state.size(); ++i)
        if (std::norm(state.amps()(i)) > threshold) out.push_back(state.window_lo() + i);
    return out;
}

namespace {

AtomLightState reflect(const AtomLightState& state, const Angle& phi,
                       const ReflectionModel& model, double& renorm_loss) {
    if (std::holds_alternative<IdealReflection>(model)) {
        renorm_loss = 0;
        return apply_cpf(state, phi);
    }
    const double coop = std::get<ExactReflection>(model).cooperativity;
    if (!(coop >= 0)) throw Error(ErrorKind::InvalidSpec, "cooperativity must be >= 0");
    const double delta = solve_detuning(phi);
    const ReflectionPair refl{reflection_at(coop, delta), phase_factor<double>(phi, 1)};
    auto res = apply_reflection_exact(state, refl);
    renorm_loss = res.renorm_loss;
    return std::move(res.state);
}

}  // namespace

TrajectoryRecord execute(const DistillationPlan& p, const FockVector& light,
                         const ReflectionModel& model) {
    if (!light.window().contains(p.target))
        throw Error(ErrorKind::InvalidPlan, "plan target lies outside the light window");
    TrajectoryRecord rec;
    rec.initial_survivors = support(light);
    FockVector current = light;
    for (const PlanStep& step : p.steps) {
        StepRecord sr;
        sr.step = step;
        AtomLightState st = prepare_superposition(current);
        st = reflect(st, step.phi, model, sr.renorm_loss);
        st = apply_atom_unitary(st, step.theta);
        MeasurementRecord m = measure_atom(st, Postselect{step.keep});
        sr.outcome = m.outcome;
        sr.probability = m.probability;
        sr.survivors = support(m.post_state);
        rec.cumulative_probability *= m.probability;
        current = std::move(m.post_state);
        rec.steps.push_back(std::move(sr));
    }
    rec.final_state = std::move(current);
    return rec;
}

MeasurementRecord delete_fock(const FockVector& light, int p) {
    if (p < 2) throw Error(ErrorKind::InvalidSpec, "deletion index p must be >= 2");
    AtomLightState st = prepare_superposition(light);
    st = apply_cpf(st, Angle::pi_times(1, p));
    st = apply_atom_unitary(st, Angle{});
    return measure_atom(st, Postselect{Outcome::G});
}

FockVector idealized_deletion(const FockVector& light, int p) {
    if (p < 2) throw Error(ErrorKind::InvalidSpec, "deletion index p must be >= 2");
    FockVector::Amplitudes amps = light.amps();
    for (int i = 0; i < light.size(); ++i) {
        const int n = light.window_lo() + i;
        if (n % p == 0 && (n / p) % 2 == 1) amps(i) = 0;
    }
    if (amps.squaredNorm() < impossible_probability)
        throw Error(ErrorKind::ImpossibleOutcome, "state lies entirely on deleted photon numbers");
    return FockVector::from_unnormalized(light.window_lo(), std::move(amps));
}

namespace {

struct TreeNode {
    TrajectoryRecord record;
    std::int64_t residue = 0;
};

// Standard iteration m on `light`, rotating for the class n = residue mod 2^m.
AtomLightState adaptive_step(const FockVector& light, int m, std::int64_t residue, PlanStep& step) {
    const std::int64_t period = std::int64_t{1} << m;
    step.iteration_index = m;
    step.phi = Angle::pi_times(1, period);
    step.theta = Angle::pi_times(residue, period).reduced();
    AtomLightState st = prepare_superposition(light);
    return apply_atom_unitary(apply_cpf(st, step.phi), step.theta);
}

// Expands one node into its g and s children (either may be absent).
void expand(const TreeNode& node, int m, std::optional<TreeNode>& g_child,
            std::optional<TreeNode>& s_child) {
    const std::int64_t period = std::int64_t{1} << m;
    PlanStep step;
    const AtomLightState st = adaptive_step(node.record.final_state, m, node.residue, step);

    for (Outcome o : {Outcome::G, Outcome::S}) {
        if (branch_probability(st, o) < impossible_probability) continue;
        MeasurementRecord meas = measure_atom(st, Postselect{o});
        TreeNode child;
        child.residue = o == Outcome::G ? node.residue : node.residue + period;
        child.record = node.record;
        StepRecord sr;
        sr.step = step;
        sr.step.keep = o;
        sr.outcome = o;
        sr.probability = meas.probability;
        sr.survivors = support(meas.post_state);
        child.record.steps.push_back(std::move(sr));
        child.record.cumulative_probability *= meas.probability;
        child.record.final_state = std::move(meas.post_state);
        (o == Outcome::G ? g_child : s_child) = std::move(child);
    }
}

}  // namespace

std::vector<TrajectoryRecord> explore_tree(const FockVector& light, int depth, int threads) {
    if (depth < 0) throw Error(ErrorKind::InvalidSpec, "depth must be >= 0");
    if (depth > max_explore_depth)
        throw Error(ErrorKind::ResourceLimit, "explore depth exceeds " + std::to_string(max_explore_depth));
    if (std::abs(light.norm_squared() - 1.0) > norm_tolerance<double>)
        throw Error(ErrorKind::ContractViolation, "explore_tree requires normalized light");

    std::vector<TreeNode> level(1);
    level[0].record.initial_survivors = support(light);
    level[0].record.final_state = light;

    for (int m = 0; m < depth; ++m) {
        const std::size_t n = level.size();
        std::vector<std::optional<TreeNode>> children(2 * n);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                expand(level[i], m, children[2 * i], children[2 * i + 1]);
        };
        const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
        if (workers <= 1) {
            work(0, n);
        } else {
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::thread> pool;
            const std::size_t chunk = (n + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t b = w * chunk, e = std::min(n, b + chunk);
                pool.emplace_back([&, w, b, e] {
                    try { work(b, e); } catch (...) { errors[w] = std::current_exception(); }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        std::vector<TreeNode> next;
        next.reserve(2 * n);
        for (auto& c : children)
            if (c) next.push_back(std::move(*c));
        level = std::move(next);
    }

    std::vector<TrajectoryRecord> leaves;
    leaves.reserve(level.size());
    for (auto& node : level) leaves.push_back(std::move(node.record));
    return leaves;
}

TrajectoryRecord sample_run(const FockVector& light, int depth, std::uint64_t seed) {
    if (depth < 0 || depth > 62) throw Error(ErrorKind::InvalidSpec, "depth out of range");
    std::mt19937_64 seeds(seed);
    TrajectoryRecord rec;
    rec.initial_survivors = support(light);
    rec.final_state = light;
    std::int64_t residue = 0;
    for (int m = 0; m < depth; ++m) {
        StepRecord sr;
        const AtomLightState st = adaptive_step(rec.final_state, m, residue, sr.step);
        MeasurementRecord meas = measure_atom(st, Sample{seeds()});
        if (meas.outcome == Outcome::S) residue += std::int64_t{1} << m;
        sr.step.keep = meas.outcome;
        sr.outcome = meas.outcome;
        sr.probability = meas.probability;
        sr.survivors = support(meas.post_state);
        rec.cumulative_probability *= meas.probability;
        rec.final_state = std::move(meas.post_state);
        rec.steps.push_back(std::move(sr));
    }
    return rec;
}

std::vector<SupportRun> encode_runs(const std::vector<int>& sorted) {
    std::vector<SupportRun> runs;
    std::size_t i = 0;
    while (i < sorted.size()) {
        SupportRun run{sorted[i], 1, 1};
        if (i + 1 < sorted.size()) {
            run.stride = sorted[i + 1] - sorted[i];
            std::size_t j = i + 1;
            while (j < sorted.size() && sorted[j] - sorted[j - 1] == run.stride) ++j;
            run.count = static_cast<int>(j - i);
        }
        runs.push_back(run);
        i += static_cast<std::size_t>(run.count);
    }
    return runs;
}

std::vector<int> decode_runs(const std::vector<SupportRun>& runs) {
    std::vector<int> out;
    for (const auto& r : runs)
        for (int k = 0; k < r.count; ++k) out.push_back(r.start + k * r.stride);
    return out;
}

std::string describe_support(const std::vector<int>& sorted) {
    if (sorted.empty()) return "{}";
    std::string out;
    for (const auto& r : encode_runs(sorted)) {
        if (!out.empty()) out += ',';
        const int last = r.start + (r.count - 1) * r.stride;
        if (r.count == 1) {
            out += std::to_string(r.start);
        } else if (r.count <= 3) {
            for (int k = 0; k < r.count; ++k) {
                if (k) out += ',';
                out += std::to_string(r.start + k * r.stride);
            }
        } else if (r.stride == 1) {
            out += std::to_string(r.start) + ".." + std::to_string(last);
        } else {
            out += std::to_string(r.start) + "," + std::to_string(r.start + r.stride) + ".." +
                   std::to_string(last);
        }
    }
    return out;
}

}  // namespace fockdist
