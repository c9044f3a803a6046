#pragma once

// JSON encodings of library values.

#include "fockdist/distiller.hpp"
#include "fockdist/fock.hpp"
#include "fockdist/pulse.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace fockdist::io {

using nlohmann::json;

/// {"label": "pi/8", "radians": 0.39269908169872414}
json to_json(const Angle& angle);

/// {"lo": 70, "hi": 130}
json to_json(const FockWindow& window);

/// {"window_lo", "window_hi", "amps": [[re, im], ...]}
json to_json(const FockVector& state);
FockVector fock_vector_from_json(const json& j);

json to_json(const PhotonStats& stats);

/// {"target", "steps": [{"m", "phi", "theta", "keep"}], "window"}
json to_json(const DistillationPlan& plan);

/// {"text": "70,72..128", "runs": [[start, stride, count], ...]}
json support_json(const std::vector<int>& sorted);

/// Per-step outcome, probability and run-length-encoded survivors.
json to_json(const TrajectoryRecord& record);

json to_json(const pulse::PulseConfig& config);
/// Missing keys keep their defaults; unknown keys raise InvalidConfig.
pulse::PulseConfig pulse_config_from_json(const json& j);

}  // namespace fockdist::io
