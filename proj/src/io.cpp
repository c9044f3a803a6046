#include "fockdist/io.hpp"

#include "fockdist/error.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <string>

namespace fockdist::io {

json to_json(const Angle& angle) {
    return {{"label", angle.label()}, {"radians", angle.value()}};
}

json to_json(const FockWindow& window) { return {{"lo", window.lo}, {"hi", window.hi}}; }

json to_json(const FockVector& state) {
    json amps = json::array();
    for (int i = 0; i < state.size(); ++i)
        amps.push_back({state.amps()(i).real(), state.amps()(i).imag()});
    return {{"window_lo", state.window_lo()}, {"window_hi", state.window_hi()}, {"amps", amps}};
}

FockVector fock_vector_from_json(const json& j) {
    try {
        const int lo = j.at("window_lo").get<int>();
        const int hi = j.at("window_hi").get<int>();
        const auto& amps = j.at("amps");
        if (hi < lo || static_cast<int>(amps.size()) != hi - lo + 1)
            throw Error(ErrorKind::InvalidSpec, "amps length does not match the window");
        FockVector::Amplitudes a(amps.size());
        for (std::size_t i = 0; i < amps.size(); ++i)
            a(static_cast<Eigen::Index>(i)) = {amps[i].at(0).get<double>(), amps[i].at(1).get<double>()};
        return FockVector(lo, std::move(a), false).renormalized();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("malformed FockVector JSON: ") + e.what());
    }
}

json to_json(const PhotonStats& s) {
    return {{"mean", s.mean}, {"variance", s.variance}, {"std_dev", s.std_dev}, {"mandel_q", s.mandel_q}};
}

json to_json(const DistillationPlan& plan) {
    json steps = json::array();
    for (const auto& st : plan.steps)
        steps.push_back({{"m", st.iteration_index},
                         {"phi", to_json(st.phi)},
                         {"theta", to_json(st.theta)},
                         {"keep", std::string(to_string(st.keep))}});
    return {{"target", plan.target}, {"steps", steps}, {"window", to_json(plan.source_window)}};
}

json support_json(const std::vector<int>& sorted) {
    json runs = json::array();
    for (const auto& r : encode_runs(sorted)) runs.push_back({r.start, r.stride, r.count});
    return {{"text", describe_support(sorted)}, {"runs", runs}};
}

json to_json(const TrajectoryRecord& record) {
    json steps = json::array();
    for (const auto& st : record.steps)
        steps.push_back({{"m", st.step.iteration_index},
                         {"phi", to_json(st.step.phi)},
                         {"theta", to_json(st.step.theta)},
                         {"outcome", std::string(to_string(st.outcome))},
                         {"probability", st.probability},
                         {"renorm_loss", st.renorm_loss},
                         {"survivors", support_json(st.survivors)}});
    return {{"outcomes", record.outcome_string()},
            {"initial_survivors", support_json(record.initial_survivors)},
            {"steps", steps},
            {"cumulative_probability", record.cumulative_probability},
            {"final_survivors", support_json(support(record.final_state))}};
}

namespace {

std::string output_mode_name(pulse::OutputMode m) {
    return m == pulse::OutputMode::SameAsInput ? "same" : "filtered";
}

std::string atom_init_name(pulse::AtomInit a) {
    switch (a) {
    case pulse::AtomInit::Superposition: return "superposition";
    case pulse::AtomInit::Ground: return "ground";
    case pulse::AtomInit::Spectator: return "spectator";
    }
    return "superposition";
}

}  // namespace

json to_json(const pulse::PulseConfig& c) {
    json j = {{"g", c.cavity.g},
              {"kappa", c.cavity.kappa},
              {"gamma", c.cavity.gamma},
              {"phi", c.phi_target.label()},
              {"alpha", c.alpha_in},
              {"center", c.pulse.center},
              {"width", c.pulse.width},
              {"t_max", c.t_max},
              {"dt", c.dt},
              {"trunc", {c.trunc_u, c.trunc_c, c.trunc_v}},
              {"sample_every", c.sample_every},
              {"output_mode", output_mode_name(c.output_mode)},
              {"atom", atom_init_name(c.atom_init)},
              {"full_basis", !c.restrict_excitations}};
    if (c.detuning_override) j["detuning"] = *c.detuning_override;
    return j;
}

pulse::PulseConfig pulse_config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "g", "kappa", "gamma", "phi", "alpha", "center", "width", "t_max", "dt",
        "trunc", "sample_every", "output_mode", "atom", "full_basis", "detuning"};
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "pulse config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown pulse config field '" + key + "'");

    pulse::PulseConfig c;
    try {
        if (j.contains("g")) c.cavity.g = j["g"].get<double>();
        if (j.contains("kappa")) c.cavity.kappa = j["kappa"].get<double>();
        if (j.contains("gamma")) c.cavity.gamma = j["gamma"].get<double>();
        if (j.contains("phi"))
            c.phi_target = j["phi"].is_string() ? Angle::parse(j["phi"].get<std::string>())
                                                : Angle::radians(j["phi"].get<double>());
        if (j.contains("alpha")) c.alpha_in = j["alpha"].get<double>();
        if (j.contains("center")) c.pulse.center = j["center"].get<double>();
        if (j.contains("width")) c.pulse.width = j["width"].get<double>();
        if (j.contains("t_max")) c.t_max = j["t_max"].get<double>();
        if (j.contains("dt")) c.dt = j["dt"].get<double>();
        if (j.contains("trunc")) {
            const auto t = j["trunc"].get<std::vector<int>>();
            if (t.size() != 3) throw Error(ErrorKind::InvalidConfig, "trunc needs three values");
            c.trunc_u = t[0];
            c.trunc_c = t[1];
            c.trunc_v = t[2];
        }
        if (j.contains("sample_every")) c.sample_every = j["sample_every"].get<int>();
        if (j.contains("output_mode")) {
            const auto m = j["output_mode"].get<std::string>();
            if (m == "same") c.output_mode = pulse::OutputMode::SameAsInput;
            else if (m == "filtered") c.output_mode = pulse::OutputMode::EmptyCavityFiltered;
            else throw Error(ErrorKind::InvalidConfig, "output_mode must be 'same' or 'filtered'");
        }
        if (j.contains("atom")) {
            const auto a = j["atom"].get<std::string>();
            if (a == "superposition") c.atom_init = pulse::AtomInit::Superposition;
            else if (a == "ground") c.atom_init = pulse::AtomInit::Ground;
            else if (a == "spectator") c.atom_init = pulse::AtomInit::Spectator;
            else throw Error(ErrorKind::InvalidConfig, "atom must be superposition, ground or spectator");
        }
        if (j.contains("full_basis")) c.restrict_excitations = !j["full_basis"].get<bool>();
        if (j.contains("detuning")) c.detuning_override = j["detuning"].get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("malformed pulse config: ") + e.what());
    }
    return c;
}

}  // namespace fockdist::io
