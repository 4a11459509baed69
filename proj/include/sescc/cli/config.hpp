#pragma once

// Run configuration: model, reference, subsystems, solver, grid, outputs.
// See README.md for the file schema.

#include "sescc/ccsolver.hpp"
#include "sescc/greens_types.hpp"
#include "sescc/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sescc::cli {

inline constexpr const char* kEngineVersion = "sescc 1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  std::string kind = "siam";  // "siam" or "composite"
  SiamParams siam;            // kind = siam
  SiamParams a, b;            // kind = composite; b's orbitals follow a's
  double lambda = 0.0;
  std::vector<std::pair<int, int>> coupling;  // hopping pairs in global indices

  bool operator==(const ModelSpec&) const = default;
};

struct GridSpec {
  double omega_min = -8.0;
  double omega_max = 8.0;
  double step = 0.01;
  double eta = 0.05;
  std::vector<int> probes;  // empty: the (first) impurity spin-up orbital

  bool operator==(const GridSpec&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";
  bool operator==(const OutputSpec&) const = default;
};

struct SweepSpec {
  std::vector<double> U;
  double eps_c_ratio = -0.5;  // eps_c = ratio * U
  bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
  ModelSpec model;
  std::string reference;
  int electrons = -1;  // -1: not declared
  int rank_max = 0;    // 0: full rank
  std::vector<SubsystemSpec> subsystems;
  bool add_external = false;  // append one subsystem per uncovered top-rank signature
  SolverConfig solver;
  GridSpec grid;
  OutputSpec output;
  SweepSpec sweep;

  bool operator==(const RunConfig&) const = default;

  /// Throws ConfigError.
  void validate() const;

  int n_orbitals() const;
  SecondQuantizedOp hamiltonian() const;
  std::vector<Spin> spins() const;
  Determinant reference_det() const;
  FrequencyGrid frequency_grid() const;
  std::vector<int> probes() const;
  /// (up, down) of the (first) impurity.
  std::pair<int, int> impurity() const;
  CCProblem problem() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// The three-site example: U = 1, reference 100110, main subsystem ({0},{1})
/// plus its external companions, U sweep {0.5, 1, 2, 4}.
RunConfig paper_config();

/// FNV-1a of the serialized configuration, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace sescc::cli
