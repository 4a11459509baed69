#pragma once

// Iterative solvers for T, Lambda and S_ext, plus the FCI cluster-analysis oracle.
// All work is done with exact similarity-transformed matrices on one sector.

#include "sescc/cluster.hpp"
#include "sescc/errors.hpp"

#include <functional>
#include <vector>

namespace sescc {

struct SolverConfig {
  int max_iter = 500;
  double tol = 1e-10;        // on the residual infinity norm
  double mixing = 1.0;       // damping of each Jacobi step
  int diis_depth = 6;        // 0 switches DIIS off
  double divergence = 1e3;   // residual norm treated as blow-up

  void validate() const;     // throws std::domain_error
  bool operator==(const SolverConfig&) const = default;
};

struct CCSolution {
  AmplitudeSet T;
  double energy = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // residual norm per iteration
};

/// Quasi-Newton fixed-point engine shared by every amplitude solver:
/// x <- x - mixing * r(x) / d(x), extrapolated by DIIS on the step vectors.
/// Components with |d| < 1e-8 take a plain damped residual step instead.
struct FixedPointResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
FixedPointResult solve_fixed_point(const ResidualFn& residual, const ResidualFn& denominators,
                                   Eigen::VectorXd x0, const SolverConfig& cfg, const std::string& what);

/// Ground-state CC problem on the sector that contains the reference (spin
/// resolved when `spins` is given).
struct CCProblem {
  SecondQuantizedOp hamiltonian;
  Determinant reference;
  std::vector<Spin> spins;
  int rank_max = 2;

  SectorPtr sector() const;
  std::vector<Excitation> manifold() const;
  /// H as a dense matrix on sector().
  OperatorMatrix hamiltonian_matrix() const;
};

/// Solves <Phi_mu| e^{-T} H e^{T} |Phi> = 0 for every mu in `manifold`, from T = 0.
CCSolution solve_t(const OperatorMatrix& H, const Determinant& reference,
                   const std::vector<Excitation>& manifold, const SolverConfig& cfg);
CCSolution solve_t(const CCProblem& problem, const SolverConfig& cfg);
/// Same, but only amplitudes flagged in `active` are varied; the rest stay at their values in `start`.
CCSolution solve_t_partial(const OperatorMatrix& H, const AmplitudeSet& start,
                           const std::vector<Excitation>& active, const SolverConfig& cfg);

/// Left problem <Phi|(1+Lambda) Hbar = E <Phi|(1+Lambda) on the signatures of T.
AmplitudeSet solve_lambda(const OperatorMatrix& Hbar, const AmplitudeSet& T, const SolverConfig& cfg);

/// <Phi|(1+Lambda_int) e^{S_ext} Hbar e^{-S_ext} |Phi_mu> = 0 for the external
/// signatures mu of T with respect to h.
AmplitudeSet solve_s_ext(const OperatorMatrix& Hbar, const AmplitudeSet& T, const ActiveSpace& h,
                         const AmplitudeSet& lambda_int, const SolverConfig& cfg);

/// T with e^{T}|Phi> = psi / <Phi|psi>, one amplitude per determinant of the sector.
AmplitudeSet cluster_analyze_fci(const StateVector& psi, const Determinant& reference);

/// <Phi|(1+Lambda) e^{-T} O e^{T} |Phi> with O given as a matrix on Hbar's sector.
double cc_expectation(const OperatorMatrix& O, const AmplitudeSet& T, const AmplitudeSet& lambda);

/// <Phi|(1+Lambda) X as a dense row over the sector.
Eigen::VectorXd left_reference_row(const AmplitudeSet& lambda, SectorPtr sector);

}  // namespace sescc
