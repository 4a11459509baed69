#pragma once

// JSON form of an amplitude set:
//   {"kind": "T", "reference": "100110",
//    "entries": [{"holes": [0], "particles": [1], "value": -0.628627}, ...]}

#include "sescc/cluster.hpp"

#include "json.hpp"

#include <string>

namespace sescc {

/// Rounds to `digits` significant digits (17 keeps every bit).
double round_significant(double x, int digits);

nlohmann::json to_json(const AmplitudeSet& a, int digits = 17);
AmplitudeSet amplitudes_from_json(const nlohmann::json& j);

std::string dump_amplitudes(const AmplitudeSet& a, int digits = 17);
AmplitudeSet load_amplitudes(const std::string& text);

}  // namespace sescc
