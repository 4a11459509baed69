#include "sescc/amplitude_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace sescc {

double round_significant(double x, int digits) {
  if (digits >= 17 || x == 0.0 || !std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

nlohmann::json to_json(const AmplitudeSet& a, int digits) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [e, x] : a.amplitudes)
    entries.push_back({{"holes", e.holes}, {"particles", e.particles}, {"value", round_significant(x, digits)}});
  return {{"kind", to_string(a.kind)}, {"reference", a.reference.to_string()}, {"entries", entries}};
}

AmplitudeSet amplitudes_from_json(const nlohmann::json& j) {
  try {
    AmplitudeSet a;
    a.kind = amplitude_kind_from_string(j.at("kind").get<std::string>());
    a.reference = Determinant::from_string(j.at("reference").get<std::string>());
    for (const auto& item : j.at("entries")) {
      Excitation e{item.at("holes").get<std::vector<int>>(), item.at("particles").get<std::vector<int>>()};
      if (e.holes.empty() || e.holes.size() != e.particles.size())
        throw std::domain_error("amplitude entry has mismatched hole/particle lists");
      for (int i : e.holes)
        if (i < 0 || i >= a.reference.n_orbitals() || !a.reference.occupied(i))
          throw std::domain_error("amplitude hole is not occupied in the reference");
      for (int p : e.particles)
        if (p < 0 || p >= a.reference.n_orbitals() || a.reference.occupied(p))
          throw std::domain_error("amplitude particle is not virtual in the reference");
      if (!a.amplitudes.emplace(e, item.at("value").get<double>()).second)
        throw std::domain_error("duplicate amplitude entry " + e.label());
    }
    return a;
  } catch (const nlohmann::json::exception& ex) {
    throw std::domain_error(std::string("malformed amplitude document: ") + ex.what());
  }
}

std::string dump_amplitudes(const AmplitudeSet& a, int digits) { return to_json(a, digits).dump(2); }

AmplitudeSet load_amplitudes(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw std::domain_error(std::string("amplitude document is not JSON: ") + ex.what());
  }
  return amplitudes_from_json(j);
}

}  // namespace sescc
