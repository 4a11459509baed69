#pragma once

// Active-space effective Hamiltonians and the multi-subsystem flow.

#include "sescc/ccsolver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sescc {

enum class Flavor { Bar, DoubleBar, Tilde };
const char* to_string(Flavor f);
Flavor flavor_from_string(const std::string& s);

struct HeffExtras {
  std::optional<AmplitudeSet> S_ext;
  std::optional<AmplitudeSet> T_int;
};

/// Dense matrix on the basis |Phi>, E_mu|Phi> (mu internal), in that order.
struct EffectiveHamiltonian {
  Flavor flavor = Flavor::Bar;
  ActiveSpace active;
  Determinant reference;
  SectorPtr sector;
  std::vector<Excitation> internal;
  std::vector<Determinant> basis;
  Eigen::MatrixXd matrix;

  std::size_t dimension() const { return basis.size(); }
  /// P A P in the signed excitation basis, for any square matrix on `sector`.
  Eigen::MatrixXd project(const Eigen::MatrixXd& a) const;
};

/// bar:       P e^{-T_ext} H e^{T_ext} P
/// doublebar: P e^{S_ext} e^{-T} H e^{T} e^{-S_ext} P, needs S_ext and T_int
/// tilde:     P W e^{-T_ext} H e^{T_ext} P, W = e^{T_int} e^{S_ext} e^{-T_int}
EffectiveHamiltonian build_heff(Flavor flavor, const OperatorMatrix& H, const AmplitudeSet& T_ext,
                                const ActiveSpace& active, const std::vector<Excitation>& manifold,
                                const HeffExtras& extras = {});

struct InternalEigenpair {
  double energy = 0.0;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
  double normalization = 0.0;  // <left|right>
};

/// Lowest eigenvalue with left/right vectors scaled so <l|r> = 1 and |l| = |r|,
/// reference component of r positive.
InternalEigenpair diagonalize_heff(const EffectiveHamiltonian& heff);

struct InternalAmplitudes {
  std::optional<AmplitudeSet> T_int;
  std::optional<AmplitudeSet> S_int;
};

/// Cluster analysis of the internal eigenvectors, following the flavor's parametrization.
InternalAmplitudes extract_internal(const InternalEigenpair& pair, const EffectiveHamiltonian& heff);

/// P e^{T_int}|Phi> and <Phi|e^{S_int} e^{-T_int} P in the basis of `heff`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> tilde_vectors(const EffectiveHamiltonian& heff,
                                                          const AmplitudeSet& T_int,
                                                          const AmplitudeSet& S_int);

struct FlowRecord {
  int iteration = 0;
  std::string subsystem;
  double energy = 0.0;
  double residual = 0.0;  // largest change proposed for this subsystem's amplitudes
};

struct FlowState {
  std::vector<SubsystemSpec> subsystems;
  AmplitudeSet T;
  std::vector<double> energies;  // per subsystem, last sweep
  double energy = 0.0;           // <Phi|Hbar|Phi> at the final amplitudes
  int iteration = 0;
  double max_spread = 0.0;
  std::vector<Excitation> covered;
  std::vector<Excitation> uncovered;  // frozen at zero
  std::vector<FlowRecord> trace;
  std::vector<EffectiveHamiltonian> heffs;  // bar flavor, last sweep
};

/// Sweeps over the subsystems against one amplitude snapshot, averages the
/// proposals for shared amplitudes, then applies one damped residual pass on
/// the covered amplitudes.
FlowState flow_iterate(const OperatorMatrix& H, const Determinant& reference,
                       const std::vector<Excitation>& manifold,
                       const std::vector<SubsystemSpec>& subsystems, const SolverConfig& cfg);

/// Line-delimited {iteration, subsystem, energy, residual} records.
std::string trace_jsonl(const FlowState& state);

/// One subsystem per highest-rank signature not internal to `main`, ordered by signature.
std::vector<SubsystemSpec> incremental_external_subsystems(const std::vector<Excitation>& manifold,
                                                           const ActiveSpace& main);

/// <Phi|(1+Lambda) e^{-T} n_up n_down e^{T}|Phi> on `sector`.
double double_occupancy(const AmplitudeSet& T, const AmplitudeSet& lambda, SectorPtr sector,
                        int up, int down);

}  // namespace sescc
