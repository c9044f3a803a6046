#include "fockdist/cli.hpp"

#include "fockdist/distiller.hpp"
#include "fockdist/error.hpp"
#include "fockdist/io.hpp"
#include "fockdist/pulse.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fockdist::cli {

using io::json;

namespace {

// ---------------------------------------------------------------- formatting

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string prob(double p) { return fmt("%.4f", p); }

class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string render() const {
        std::vector<std::size_t> w(header_.size(), 0);
        auto widen = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
        };
        widen(header_);
        for (const auto& r : rows_) widen(r);
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            std::string s;
            for (std::size_t i = 0; i < r.size(); ++i) {
                s += r[i];
                if (i + 1 < r.size()) s += std::string(w[i] - r[i].size() + 2, ' ');
            }
            out += s + "\n";
        };
        line(header_);
        std::size_t total = 0;
        for (auto x : w) total += x + 2;
        out += std::string(total - 2, '-') + "\n";
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) s += (i ? "," : "") + csv_field(fields[i]);
    return s + "\n";
}

std::string g17(double v) { return fmt("%.17g", v); }

// ---------------------------------------------------------------- config files

// TOML by default; a file whose first non-blank character is '{' is read as
// JSON with nested objects standing for subcommand sections.
class JsonOrTomlConfig : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        const std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
        auto items = parse(text);
        // Keys may spell option names with underscores: window_sigmas, t_max.
        for (auto& item : items) {
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            for (auto& p : item.parents) std::replace(p.begin(), p.end(), '_', '-');
        }
        return items;
    }

private:
    std::vector<CLI::ConfigItem> parse(const std::string& text) const {
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream s(text);
            return CLI::ConfigTOML::from_config(s);
        }
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void flatten(const json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                flatten(value, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(value));
            items.push_back(std::move(item));
        }
    }
};

// ---------------------------------------------------------------- options

struct GlobalOptions {
    std::string format = "table";
    std::string output;
    std::uint64_t seed = 0;
};

struct SourceOptions {
    std::optional<double> alpha;
    double squeeze = 0;
    double window_sigmas = 3;
    std::string window;  // "lo:hi"

    void attach(CLI::App* app, const std::string& alpha_help) {
        app->add_option("--alpha", alpha, alpha_help);
        app->add_option("--squeeze", squeeze, "Squeezing magnitude r (real, >= 0)")->capture_default_str();
        app->add_option("--window-sigmas", window_sigmas, "Window half-width in standard deviations")
            ->capture_default_str();
        app->add_option("--window", window, "Explicit photon-number window lo:hi");
    }

    SourceSpec spec(double default_alpha) const {
        SourceSpec s;
        s.alpha = alpha.value_or(default_alpha);
        s.squeeze_r = squeeze;
        s.window_sigmas = window_sigmas;
        if (!window.empty()) {
            const auto colon = window.find(':');
            try {
                if (colon == std::string::npos) throw std::invalid_argument("");
                std::size_t p1 = 0, p2 = 0;
                const int lo = std::stoi(window.substr(0, colon), &p1);
                const int hi = std::stoi(window.substr(colon + 1), &p2);
                if (p1 != colon || p2 != window.size() - colon - 1) throw std::invalid_argument("");
                s.window = FockWindow{lo, hi};
            } catch (const std::logic_error&) {
                throw CLI::ValidationError("--window", "expected lo:hi, got '" + window + "'");
            }
        }
        s.validate();
        return s;
    }
};

FockVector make_source(const SourceSpec& s) {
    return s.squeeze_r == 0 ? coherent_state(s) : squeezed_coherent_state(s);
}

std::string source_label(const SourceSpec& s) {
    if (s.squeeze_r == 0) return "coherent alpha=" + fmt("%.6g", s.alpha);
    return "squeezed coherent alpha=" + fmt("%.6g", s.alpha) + " r=" + fmt("%.6g", s.squeeze_r);
}

json source_json(const SourceSpec& s, const FockVector& v) {
    return {{"alpha", s.alpha},
            {"squeeze_r", s.squeeze_r},
            {"window", io::to_json(v.window())},
            {"discarded_mass", v.discarded_mass()}};
}

const CLI::Validator angle_check(
    [](std::string& s) -> std::string {
        try {
            (void)Angle::parse(s);
            return {};
        } catch (const Error& e) {
            return e.what();
        }
    },
    "ANGLE");

int steps_for(const SourceSpec& s, const FockVector& v, int target, std::optional<int> override_steps) {
    if (override_steps) return *override_steps;
    if (s.window) return iteration_count_for_window(target, v.window());
    return iteration_count(std::sqrt(source_variance(s)));
}

// ---------------------------------------------------------------- subcommands

std::string run_plan(const GlobalOptions& g, int target, std::optional<int> steps, const SourceOptions& src) {
    DistillationPlan p;
    if (steps && src.window.empty() && !src.alpha) {
        p = plan(target, *steps);
    } else {
        const SourceSpec s = src.spec(std::sqrt(static_cast<double>(std::max(target, 0))));
        const FockWindow w = source_window(s);
        const int q = steps ? *steps : (s.window ? iteration_count_for_window(target, w)
                                                 : iteration_count(std::sqrt(source_variance(s))));
        p = plan(target, q, w);
    }
    if (g.format == "json") return io::to_json(p).dump(2) + "\n";
    if (g.format == "csv") {
        std::string out = csv_row({"m", "phi", "phi_rad", "theta", "theta_rad", "keep"});
        for (const auto& st : p.steps)
            out += csv_row({std::to_string(st.iteration_index), st.phi.label(), g17(st.phi.value()),
                            st.theta.label(), g17(st.theta.value()), std::string(to_string(st.keep))});
        return out;
    }
    std::string out = "target " + std::to_string(p.target) + ", window " + std::to_string(p.source_window.lo) +
                      ".." + std::to_string(p.source_window.hi) + ", " + std::to_string(p.steps.size()) +
                      " iterations\n\n";
    Table t({"m", "phi", "theta", "M"});
    for (const auto& st : p.steps)
        t.add({std::to_string(st.iteration_index), st.phi.label(), st.theta.label(),
               "|" + std::string(to_string(st.keep)) + ">"});
    return out + t.render();
}

struct DistillOptions {
    int target = 0;
    std::optional<int> steps;
    SourceOptions src;
    std::string model = "ideal";
    double cooperativity = 1024;
    bool sample = false;
};

std::string run_distill(const GlobalOptions& g, const DistillOptions& o) {
    const SourceSpec s = o.src.spec(std::sqrt(static_cast<double>(std::max(o.target, 0))));
    const FockVector light = make_source(s);
    const int q = steps_for(s, light, o.target, o.steps);

    TrajectoryRecord rec;
    std::optional<DistillationPlan> p;
    if (o.sample) {
        rec = sample_run(light, q, g.seed);
    } else {
        p = plan(o.target, q, light.window());
        ReflectionModel model = IdealReflection{};
        if (o.model == "exact") model = ExactReflection{o.cooperativity};
        rec = execute(*p, light, model);
    }
    const bool exact = o.model == "exact" && !o.sample;
    const std::vector<int> final_support = support(rec.final_state);

    if (g.format == "json") {
        json j = {{"source", source_json(s, light)},
                  {"mode", o.sample ? "sample" : "postselect"},
                  {"model", o.model},
                  {"trajectory", io::to_json(rec)}};
        if (p) j["plan"] = io::to_json(*p);
        if (o.sample) j["seed"] = g.seed;
        if (exact) j["cooperativity"] = o.cooperativity;
        return j.dump(2) + "\n";
    }
    if (g.format == "csv") {
        std::string out = csv_row({"m", "phi", "theta", "outcome", "probability", "renorm_loss",
                                   "survivors_in", "survivors_out"});
        std::vector<int> before = rec.initial_survivors;
        for (const auto& st : rec.steps) {
            out += csv_row({std::to_string(st.step.iteration_index), st.step.phi.label(), st.step.theta.label(),
                            std::string(to_string(st.outcome)), g17(st.probability), g17(st.renorm_loss),
                            describe_support(before), describe_support(st.survivors)});
            before = st.survivors;
        }
        return out;
    }

    std::string out = "source: " + source_label(s) + ", window " + std::to_string(light.window_lo()) + ".." +
                      std::to_string(light.window_hi()) + " (captured mass " +
                      fmt("%.5f", 1 - light.discarded_mass()) + ")\n";
    out += "iterations: " + std::to_string(q) + (o.sample ? ", sampled outcomes (seed " + std::to_string(g.seed) + ")" : "") + "\n\n";
    std::vector<std::string> header = {"Distilled Fock Nos.", "phi", "theta", "M", "P"};
    if (exact) header.push_back("renorm loss");
    Table t(header);
    std::vector<int> before = rec.initial_survivors;
    for (const auto& st : rec.steps) {
        std::vector<std::string> row = {describe_support(before), st.step.phi.label(), st.step.theta.label(),
                                        "|" + std::string(to_string(st.outcome)) + ">", prob(st.probability)};
        if (exact) row.push_back(fmt("%.3e", st.renorm_loss));
        t.add(std::move(row));
        before = st.survivors;
    }
    std::vector<std::string> last = {describe_support(before), "-", "-", "-", "-"};
    if (exact) last.push_back("-");
    t.add(std::move(last));
    out += t.render();
    out += "\ncumulative probability " + prob(rec.cumulative_probability) + "\n";
    if (final_support.size() == 1)
        out += "final state |" + std::to_string(final_support[0]) + ">\n";
    else
        out += "final support " + describe_support(final_support) + "\n";
    return out;
}

std::string run_explore(const GlobalOptions& g, std::optional<int> depth, const SourceOptions& src) {
    if (!src.alpha) throw CLI::ValidationError("--alpha", "explore requires --alpha");
    const SourceSpec s = src.spec(0);
    const FockVector light = make_source(s);
    const int d = depth ? *depth
                        : (light.size() > 1 ? iteration_count(std::sqrt(source_variance(s))) : 0);
    const auto leaves = explore_tree(light, d, worker_threads());
    double total = 0;
    for (const auto& l : leaves) total += l.cumulative_probability;

    if (g.format == "json") {
        json arr = json::array();
        for (const auto& l : leaves) arr.push_back(io::to_json(l));
        return json{{"source", source_json(s, light)}, {"depth", d}, {"total_probability", total}, {"leaves", arr}}
                   .dump(2) + "\n";
    }
    if (g.format == "csv") {
        std::string out = csv_row({"outcomes", "probability", "final_survivors"});
        for (const auto& l : leaves)
            out += csv_row({l.outcome_string(), g17(l.cumulative_probability),
                            describe_support(support(l.final_state))});
        return out;
    }
    std::string out = "source: " + source_label(s) + ", window " + std::to_string(light.window_lo()) + ".." +
                      std::to_string(light.window_hi()) + ", depth " + std::to_string(d) + "\n\n";
    Table t({"outcomes", "P", "final support"});
    for (const auto& l : leaves)
        t.add({l.outcome_string().empty() ? "-" : l.outcome_string(), prob(l.cumulative_probability),
               describe_support(support(l.final_state))});
    out += t.render();
    out += "\n" + std::to_string(leaves.size()) + " leaves, total probability " + fmt("%.12f", total) + "\n";
    return out;
}

std::string run_delete(const GlobalOptions& g, int p, const SourceOptions& src) {
    const SourceSpec s = src.spec(10.0);
    const FockVector light = make_source(s);
    const MeasurementRecord rec = delete_fock(light, p);
    const FockVector ideal = idealized_deletion(light, p);
    const double overlap_sq = std::norm(overlap(rec.post_state, ideal));

    struct Row {
        int n;
        double p_in, p_exact, p_ideal, weight, amp_exact;
    };
    std::vector<Row> rows;
    for (int n = light.window_lo(); n <= light.window_hi(); ++n)
        rows.push_back({n, light.probability(n), rec.post_state.probability(n), ideal.probability(n),
                        std::abs(std::cos(std::numbers::pi * n / (2.0 * p))), std::abs(rec.post_state.amplitude(n))});

    if (g.format == "json") {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"n", r.n}, {"p_in", r.p_in}, {"p_exact", r.p_exact}, {"p_idealized", r.p_ideal},
                           {"cos_weight", r.weight}});
        return json{{"source", source_json(s, light)},
                    {"p", p},
                    {"probability_g", rec.probability},
                    {"amplitude_at_p", {rec.post_state.amplitude(p).real(), rec.post_state.amplitude(p).imag()}},
                    {"exact_vs_idealized_fidelity", overlap_sq},
                    {"exact_state", io::to_json(rec.post_state)},
                    {"idealized_state", io::to_json(ideal)},
                    {"rows", arr}}
                   .dump(2) + "\n";
    }
    if (g.format == "csv") {
        std::string out = csv_row({"n", "p_in", "p_exact", "p_idealized", "cos_weight"});
        for (const auto& r : rows)
            out += csv_row({std::to_string(r.n), g17(r.p_in), g17(r.p_exact), g17(r.p_ideal), g17(r.weight)});
        return out;
    }
    std::string out = "source: " + source_label(s) + ", window " + std::to_string(light.window_lo()) + ".." +
                      std::to_string(light.window_hi()) + "\n";
    out += "deleting odd multiples of p = " + std::to_string(p) + " with D(pi/" + std::to_string(p) +
           "), U_a[0], keep |g>\n";
    out += "P(g) " + prob(rec.probability) + ", |amplitude at " + std::to_string(p) + "| = " +
           fmt("%.3g", std::abs(rec.post_state.amplitude(p))) + ", |<exact|idealized>|^2 = " +
           fmt("%.6f", overlap_sq) + "\n\n";
    Table t({"n", "P in", "P exact", "P idealized", "|cos(pi n/2p)|"});
    for (const auto& r : rows)
        t.add({std::to_string(r.n), fmt("%.6f", r.p_in), fmt("%.6f", r.p_exact), fmt("%.6f", r.p_ideal),
               fmt("%.6f", r.weight)});
    return out + t.render();
}

std::string complex_label(std::complex<double> z) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.3f%+.2ei", z.real(), z.imag());
    return buf;
}

std::string run_detuning(const GlobalOptions& g, const std::vector<std::string>& phases, double coop) {
    if (!(coop >= 0)) throw Error(ErrorKind::InvalidSpec, "cooperativity must be >= 0");
    struct Row {
        Angle phi;
        double delta;
        ReflectionPair r;
    };
    std::vector<Row> rows;
    for (const auto& text : phases) {
        const Angle phi = Angle::parse(text);
        const double delta = solve_detuning(phi);
        rows.push_back({phi, delta, reflection_coeffs(coop, delta)});
    }
    if (g.format == "json") {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"phi", io::to_json(r.phi)},
                           {"delta", r.delta},
                           {"r1", {r.r.r1.real(), r.r.r1.imag()}},
                           {"r0", {r.r.r0.real(), r.r.r0.imag()}}});
        return json{{"cooperativity", coop}, {"rows", arr}}.dump(2) + "\n";
    }
    if (g.format == "csv") {
        std::string out = csv_row({"phi", "phi_rad", "delta", "r1_re", "r1_im", "r0_re", "r0_im"});
        for (const auto& r : rows)
            out += csv_row({r.phi.label(), g17(r.phi.value()), g17(r.delta), g17(r.r.r1.real()),
                            g17(r.r.r1.imag()), g17(r.r.r0.real()), g17(r.r.r0.imag())});
        return out;
    }
    std::string out = "cooperativity C = " + fmt("%.6g", coop) + "\n\n";
    Table t({"Delta", "e^{i phi}", "r1", "|r1|"});
    for (const auto& r : rows)
        t.add({fmt("%.5f", r.delta), "e^{i " + r.phi.label() + "}", complex_label(r.r.r1),
               fmt("%.6f", std::abs(r.r.r1))});
    return out + t.render();
}

std::string run_stats(const GlobalOptions& g, const SourceOptions& src, bool amplitudes) {
    if (!src.alpha) throw CLI::ValidationError("--alpha", "source-stats requires --alpha");
    const SourceSpec s = src.spec(0);
    const FockVector v = make_source(s);
    const PhotonStats st = photon_stats(v);
    const double fm = source_mean(s), fv = source_variance(s);
    const int q = fv > 0 ? iteration_count(std::sqrt(fv)) : 0;

    if (g.format == "json") {
        json j = {{"source", source_json(s, v)},
                  {"stats", io::to_json(st)},
                  {"formula", {{"mean", fm}, {"variance", fv}}},
                  {"iteration_count", q}};
        if (amplitudes) j["state"] = io::to_json(v);
        return j.dump(2) + "\n";
    }
    if (g.format == "csv") {
        std::string out = csv_row({"alpha", "squeeze_r", "window_lo", "window_hi", "captured_mass", "mean",
                                   "variance", "std_dev", "mandel_q", "formula_mean", "formula_variance",
                                   "iteration_count"});
        out += csv_row({g17(s.alpha), g17(s.squeeze_r), std::to_string(v.window_lo()), std::to_string(v.window_hi()),
                        g17(1 - v.discarded_mass()), g17(st.mean), g17(st.variance), g17(st.std_dev),
                        g17(st.mandel_q), g17(fm), g17(fv), std::to_string(q)});
        return out;
    }
    Table t({"quantity", "value"});
    t.add({"source", source_label(s)});
    t.add({"window", std::to_string(v.window_lo()) + ".." + std::to_string(v.window_hi())});
    t.add({"captured mass", fmt("%.6f", 1 - v.discarded_mass())});
    t.add({"mean", fmt("%.6f", st.mean)});
    t.add({"variance", fmt("%.6f", st.variance)});
    t.add({"std dev", fmt("%.6f", st.std_dev)});
    t.add({"Mandel Q", fmt("%.6f", st.mandel_q)});
    t.add({"formula mean", fmt("%.6f", fm)});
    t.add({"formula variance", fmt("%.6f", fv)});
    t.add({"iteration count", std::to_string(q)});
    return t.render();
}

struct PulseOptions {
    double g = 16, kappa = 5, gamma = 0.05;
    std::vector<std::string> phases = {"pi"};
    double alpha = 1;
    double center = 100, width = 20, t_max = 200, dt = 0.05;
    std::vector<int> trunc = {4, 4, 4};
    int sample_every = 0;
    std::string output_mode = "same";
    std::string atom = "superposition";
    bool full_basis = false;
    std::optional<double> detuning;
    double compare = 0.3;

    pulse::PulseConfig config(const std::string& phase) const {
        json j = {{"g", g}, {"kappa", kappa}, {"gamma", gamma}, {"phi", phase}, {"alpha", alpha},
                  {"center", center}, {"width", width}, {"t_max", t_max}, {"dt", dt}, {"trunc", trunc},
                  {"sample_every", sample_every}, {"output_mode", output_mode}, {"atom", atom},
                  {"full_basis", full_basis}};
        if (detuning) j["detuning"] = *detuning;
        return io::pulse_config_from_json(j);
    }
};

struct PulseRun {
    pulse::PulseConfig config;
    pulse::PulseTrajectory trajectory;
    std::vector<double> fidelity;
    double f_minus = 0, f_plus = 0, min_eigenvalue = 0, max_trace_error = 0;
};

PulseRun simulate(pulse::PulseConfig c, double compare) {
    PulseRun r{c, pulse::evolve(c), {}, 0, 0, 0, 0};
    r.fidelity = pulse::reflection_fidelity(r.trajectory, c);
    const auto& last = r.trajectory.samples.back().rho;
    r.f_minus = pulse::fidelity(last, c, Angle::radians(c.phi_target.value() - compare));
    r.f_plus = pulse::fidelity(last, c, Angle::radians(c.phi_target.value() + compare));
    r.min_eigenvalue = last.min_eigenvalue();
    for (const auto& s : r.trajectory.samples)
        r.max_trace_error = std::max(r.max_trace_error, std::abs(s.rho.trace() - 1.0));
    return r;
}

std::string run_pulse(const GlobalOptions& g, const PulseOptions& o) {
    std::vector<pulse::PulseConfig> configs;
    for (const auto& ph : o.phases) {
        configs.push_back(o.config(ph));
        configs.back().validate();
    }
    std::vector<std::optional<PulseRun>> runs(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    const int workers = std::min<int>(worker_threads(), static_cast<int>(configs.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) runs[i] = simulate(configs[i], o.compare);
    } else {
        std::vector<std::thread> pool;
        std::mutex m;
        std::size_t next = 0;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard lock(m);
                        if (next >= configs.size()) return;
                        i = next++;
                    }
                    try {
                        runs[i] = simulate(configs[i], o.compare);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    if (g.format == "csv") {
        std::string out;
        const bool multi = runs.size() > 1;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            std::istringstream csv(pulse::trajectory_csv(runs[i]->trajectory, runs[i]->config));
            std::string line;
            bool header = true;
            while (std::getline(csv, line)) {
                if (header && i > 0) { header = false; continue; }
                if (multi) line = (header ? std::string("phi,") : csv_field(runs[i]->config.phi_target.label()) + ",") + line;
                header = false;
                out += line + "\n";
            }
        }
        return out;
    }
    if (g.format == "json") {
        json arr = json::array();
        for (const auto& r : runs) {
            json samples = json::array();
            for (std::size_t k = 0; k < r->trajectory.samples.size(); ++k) {
                const auto& s = r->trajectory.samples[k];
                const auto d = pulse::diagnostics(s.rho);
                samples.push_back({{"t", s.t}, {"fidelity", r->fidelity[k]}, {"trace", d.trace},
                                   {"atom_e_population", d.atom_e_population}, {"input_mode_n", d.input_mode_n},
                                   {"cavity_n", d.cavity_n}, {"output_mode_n", d.output_mode_n}});
            }
            arr.push_back({{"config", io::to_json(r->config)},
                           {"detuning", r->config.detuning()},
                           {"dim", r->trajectory.samples.back().rho.dim()},
                           {"integrated_dim", r->trajectory.samples.back().rho.basis().size()},
                           {"final_fidelity", r->fidelity.back()},
                           {"neighbor_fidelity", {{"offset", o.compare}, {"minus", r->f_minus}, {"plus", r->f_plus}}},
                           {"max_trace_error", r->max_trace_error},
                           {"min_eigenvalue", r->min_eigenvalue},
                           {"samples", samples}});
        }
        return json{{"runs", arr}}.dump(2) + "\n";
    }
    std::string out;
    for (const auto& r : runs) {
        const auto& c = r->config;
        const auto d = pulse::diagnostics(r->trajectory.samples.back().rho);
        out += "phi " + c.phi_target.label() + ", detuning " + fmt("%.5f", c.detuning()) + ", C " +
               fmt("%.6g", c.cavity.g * c.cavity.g / (c.cavity.kappa * c.cavity.gamma)) + ", alpha " +
               fmt("%.6g", c.alpha_in) + ", dim " + std::to_string(r->trajectory.samples.back().rho.dim()) +
               " (" + std::to_string(r->trajectory.samples.back().rho.basis().size()) + " integrated)\n";
        out += "final fidelity " + fmt("%.6f", r->fidelity.back()) + "; at phi -/+ " + fmt("%.3g", o.compare) +
               ": " + fmt("%.6f", r->f_minus) + " / " + fmt("%.6f", r->f_plus) + "\n";
        out += "max |tr - 1| " + fmt("%.2e", r->max_trace_error) + ", min eigenvalue " +
               fmt("%.2e", r->min_eigenvalue) + ", input mode n " + fmt("%.2e", d.input_mode_n) +
               ", |e> population " + fmt("%.2e", d.atom_e_population) + "\n\n";
        Table t({"t", "F", "trace", "P(e)", "n_u", "n_c", "n_v"});
        for (std::size_t k = 0; k < r->trajectory.samples.size(); ++k) {
            const auto& s = r->trajectory.samples[k];
            const auto dk = pulse::diagnostics(s.rho);
            t.add({fmt("%.2f", s.t), fmt("%.6f", r->fidelity[k]), fmt("%.10f", dk.trace),
                   fmt("%.2e", dk.atom_e_population), fmt("%.4f", dk.input_mode_n), fmt("%.4f", dk.cavity_n),
                   fmt("%.4f", dk.output_mode_n)});
        }
        out += t.render() + "\n";
    }
    return out;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int worker_threads() {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("FOCK_DISTILLER_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
    }
    return n;
}

int run_scenario(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fock-state distillation by repeated atom-cavity phase flips", "fockdist"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonOrTomlConfig>());
    app.set_config("--config", "", "Read options from a TOML or JSON file");
    app.allow_config_extras(CLI::config_extras_mode::error);

    GlobalOptions g;
    app.add_option("--format", g.format, "Output format")
        ->check(CLI::IsMember({"table", "json", "csv"}))
        ->capture_default_str();
    app.add_option("--output", g.output, "Write output to this file instead of stdout");
    app.add_option("--seed", g.seed, "Seed for sampled measurement outcomes")->capture_default_str();

    // plan
    int plan_target = 0;
    std::optional<int> plan_steps;
    SourceOptions plan_src;
    auto* plan_cmd = app.add_subcommand("plan", "Derive the (phi, theta, M) schedule for a target Fock number");
    plan_cmd->add_option("--target", plan_target, "Target Fock number")->required()->check(CLI::NonNegativeNumber);
    plan_cmd->add_option("--steps", plan_steps, "Number of iterations (default from the source width)")
        ->check(CLI::Range(0, 62));
    plan_src.attach(plan_cmd, "Coherent amplitude used to size the plan (default sqrt(target))");

    // distill
    DistillOptions dist;
    auto* dist_cmd = app.add_subcommand("distill", "Distill a Fock state from a coherent or squeezed source");
    dist_cmd->add_option("--target", dist.target, "Target Fock number")->required()->check(CLI::NonNegativeNumber);
    dist_cmd->add_option("--steps", dist.steps, "Override the iteration count")->check(CLI::Range(0, 62));
    dist.src.attach(dist_cmd, "Coherent amplitude (default sqrt(target))");
    dist_cmd->add_option("--model", dist.model, "Reflection model")
        ->check(CLI::IsMember({"ideal", "exact"}))
        ->capture_default_str();
    dist_cmd->add_option("--cooperativity", dist.cooperativity, "Cooperativity for the exact model")
        ->capture_default_str();
    dist_cmd->add_flag("--sample", dist.sample, "Draw outcomes from the Born rule with --seed");

    // explore
    std::optional<int> explore_depth;
    SourceOptions explore_src;
    auto* explore_cmd = app.add_subcommand("explore", "Enumerate every outcome sequence with its probability");
    explore_cmd->add_option("--depth", explore_depth, "Tree depth (default from the source width)")
        ->check(CLI::NonNegativeNumber);
    explore_src.attach(explore_cmd, "Coherent amplitude");

    // delete-prime
    int del_p = 101;
    SourceOptions del_src;
    auto* del_cmd = app.add_subcommand("delete-prime", "Remove odd multiples of p with D(pi/p)");
    del_cmd->add_option("--p", del_p, "Deletion index")->capture_default_str();
    del_src.attach(del_cmd, "Coherent amplitude (default 10)");

    // detuning-table
    std::vector<std::string> phases = {"pi/2", "pi/4", "pi/8", "pi/16", "pi/32"};
    double det_coop = 250;
    auto* det_cmd = app.add_subcommand("detuning-table", "Detunings and reflection coefficients for target phases");
    det_cmd->add_option("--phases", phases, "Comma-separated phases, e.g. pi/2,pi/4")
        ->delimiter(',')
        ->check(angle_check)
        ->capture_default_str();
    det_cmd->add_option("--cooperativity", det_coop, "Cooperativity C")->capture_default_str();

    // source-stats
    SourceOptions stats_src;
    bool stats_amps = false;
    auto* stats_cmd = app.add_subcommand("source-stats", "Window, photon statistics and iteration count of a source");
    stats_src.attach(stats_cmd, "Coherent amplitude");
    stats_cmd->add_flag("--amplitudes", stats_amps, "Include the amplitudes in JSON output");

    // pulse-fidelity
    PulseOptions po;
    auto* pulse_cmd = app.add_subcommand("pulse-fidelity", "Master-equation check of the reflected pulse");
    pulse_cmd->add_option("--g", po.g, "Atom-cavity coupling")->capture_default_str();
    pulse_cmd->add_option("--kappa", po.kappa, "Cavity decay rate")->capture_default_str();
    pulse_cmd->add_option("--gamma", po.gamma, "Atomic decay rate")->capture_default_str();
    pulse_cmd->add_option("--phi", po.phases, "Target phase(s), comma-separated")
        ->delimiter(',')
        ->check(angle_check)
        ->capture_default_str();
    pulse_cmd->add_option("--alpha", po.alpha, "Input coherent amplitude")->capture_default_str();
    pulse_cmd->add_option("--center", po.center, "Pulse center in units of 1/kappa")->capture_default_str();
    pulse_cmd->add_option("--width", po.width, "Pulse width in units of 1/kappa")->capture_default_str();
    pulse_cmd->add_option("--t-max", po.t_max, "Integration time in units of 1/kappa")->capture_default_str();
    pulse_cmd->add_option("--dt", po.dt, "Time step in units of 1/kappa")->capture_default_str();
    pulse_cmd->add_option("--trunc", po.trunc, "Truncations u,c,v")
        ->expected(3)
        ->delimiter(',')
        ->capture_default_str();
    pulse_cmd->add_option("--sample-every", po.sample_every, "Steps between samples (0: about 100 samples)")
        ->capture_default_str();
    pulse_cmd->add_option("--output-mode", po.output_mode, "Output pulse shape")
        ->check(CLI::IsMember({"same", "filtered"}))
        ->capture_default_str();
    pulse_cmd->add_option("--atom", po.atom, "Initial atomic state")
        ->check(CLI::IsMember({"superposition", "ground", "spectator"}))
        ->capture_default_str();
    pulse_cmd->add_flag("--full-basis", po.full_basis, "Integrate in the full tensor-product basis");
    pulse_cmd->add_option("--detuning", po.detuning, "Override the detuning solved from --phi");
    pulse_cmd->add_option("--compare", po.compare, "Phase offset for the neighbor fidelity check")
        ->capture_default_str();

    std::string text;
    try {
        app.parse(argc, argv);
        if (plan_cmd->parsed()) text = run_plan(g, plan_target, plan_steps, plan_src);
        else if (dist_cmd->parsed()) text = run_distill(g, dist);
        else if (explore_cmd->parsed()) text = run_explore(g, explore_depth, explore_src);
        else if (del_cmd->parsed()) text = run_delete(g, del_p, del_src);
        else if (det_cmd->parsed()) text = run_detuning(g, phases, det_coop);
        else if (stats_cmd->parsed()) text = run_stats(g, stats_src, stats_amps);
        else if (pulse_cmd->parsed()) text = run_pulse(g, po);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()).dump() << "\n";
        return 2;
    } catch (const Error& e) {
        err << error_json(std::string(to_string(e.kind())), e.what()).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
        return 1;
    }

    if (g.output.empty()) {
        out << text;
        return 0;
    }
    std::ofstream file(g.output, std::ios::binary);
    if (!file || !(file << text)) {
        err << error_json("io", "cannot write " + g.output).dump() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace fockdist::cli
