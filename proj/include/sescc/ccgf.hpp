#pragma once

// Coupled-cluster Green's function from frequency-dependent linear solves:
//   (omega - i eta + Hbar_N) X_K = abar_K |Phi>        in the N-1 sector
//   (omega + i eta - Hbar_N) Y_L = abar_L^+ |Phi>      in the N+1 sector
//   G_KL = <Phi|(1+Lambda) abar_L^+ X_K + <Phi|(1+Lambda) abar_K Y_L
// with Hbar_N = e^{-T} H e^{T} - E_CC.

#include "sescc/ccsolver.hpp"
#include "sescc/greens_types.hpp"

#include <vector>

namespace sescc {

struct GfContext {
  Determinant reference;
  AmplitudeSet T;
  AmplitudeSet lambda;
  double energy = 0.0;
  SectorPtr sector_N, sector_Nm1, sector_Np1;  // full particle-number sectors
  Eigen::MatrixXd h_N, h_Nm1, h_Np1;           // bare H
  Eigen::MatrixXd t_N, t_Nm1, t_Np1;           // T as matrices
  Eigen::MatrixXd hbar_Nm1, hbar_Np1;          // Hbar - E_CC
  Eigen::VectorXd phi;                         // |Phi> on the N sector
  Eigen::VectorXd bra;                         // <Phi|(1+Lambda) on the N sector
};

GfContext make_gf_context(const SecondQuantizedOp& H, const AmplitudeSet& T,
                          const AmplitudeSet& lambda, double e_cc);

/// abar_K = a_K + [a_K, T] (dagger = false, N -> N-1) or
/// abar_K^+ = a_K^+ + [a_K^+, T] (dagger = true, N -> N+1).
Eigen::MatrixXd abar(const GfContext& ctx, int orbital, bool dagger);
/// e^{-X} a e^{X} for an arbitrary excitation set X, as a check and for external-only dressing.
Eigen::MatrixXd dressed_ladder(const GfContext& ctx, int orbital, bool dagger, const AmplitudeSet& X);

enum class XYKind { X, Y };

struct XYSolution {
  int orbital = 0;
  double omega = 0.0;
  XYKind kind = XYKind::X;
  SectorPtr sector;
  Eigen::VectorXcd vector;
  std::vector<bool> internal;  // per determinant; empty when no active space given
  double residual = 0.0;

  Eigen::VectorXcd internal_part() const;
  Eigen::VectorXcd external_part() const;
};

/// Determinants of an N-1 or N+1 sector whose holes (reference occupied, now
/// empty) lie in R and whose particles (reference virtual, now filled) lie in S.
std::vector<bool> internal_mask(const Determinant& reference, const SectorBasis& sector,
                                const ActiveSpace& h);

/// One dense solve per frequency; `h` only tags internal determinants.
std::vector<XYSolution> solve_xy(const GfContext& ctx, int orbital, XYKind kind,
                                 const FrequencyGrid& grid, const ActiveSpace* h = nullptr);

struct GfValue {
  cplx hole = 0.0;
  cplx particle = 0.0;
  cplx total() const { return hole + particle; }
};

/// G_KL at every grid point from X_K and Y_L solutions on the same grid.
std::vector<GfValue> gf_element(const GfContext& ctx, int K, int L, const std::vector<XYSolution>& x_K,
                                const std::vector<XYSolution>& y_L);

/// Full G over the probe list (all K, L pairs).
GreenFunctionResult gf_matrix(const GfContext& ctx, const std::vector<int>& probes,
                              const FrequencyGrid& grid);

struct SplitValue {
  cplx internal = 0.0;
  cplx external = 0.0;
  cplx total() const { return internal + external; }
};

/// G_KL = G_int + G_ext with the bra <Phi|(1+Lambda_int) e^{S_ext}. The
/// decomposition is additive for probes inside the active space; other probes
/// are rejected.
std::vector<SplitValue> gf_split(const GfContext& ctx, int K, int L, const ActiveSpace& h,
                                 const AmplitudeSet& lambda_int, const AmplitudeSet& S_ext,
                                 const FrequencyGrid& grid);

/// Internal and external pieces of T and S for an active space, from the context's T and Lambda.
struct EmbeddingAmplitudes {
  AmplitudeSet T_int, T_ext, S_int, S_ext, lambda_int;
};
EmbeddingAmplitudes embedding_amplitudes(const GfContext& ctx, const ActiveSpace& h);

/// Active-space form: <Psi_int|P W abar^+_{L,ext} Q_int R(omega) Q_int abar_{K,ext} P|Psi_int>
/// (+ the attachment term), with R the resolvent of e^{-T_ext} H e^{T_ext} - E_CC.
std::vector<GfValue> gf_effective(const GfContext& ctx, int K, int L, const ActiveSpace& h,
                                  const EmbeddingAmplitudes& amps, const FrequencyGrid& grid);

/// Poles of a diagonal element: hole part at -e_k, particle part at +e_k, with
/// e_k the eigenvalues of the relevant shifted Hbar.
struct CCPoleSet {
  std::vector<Pole> hole;
  std::vector<Pole> particle;
  std::vector<Pole> all() const;
};
CCPoleSet cc_poles(const GfContext& ctx, int K);
CCPoleSet gf_effective_poles(const GfContext& ctx, int K, const ActiveSpace& h,
                             const EmbeddingAmplitudes& amps);

/// Spectra of Hbar_N on the N-1 and N+1 sectors (real parts).
std::vector<double> hbar_spectrum(const GfContext& ctx, XYKind kind);

struct EmbeddingCenter {
  SubsystemSpec subsystem;
  std::vector<int> probes;
};

/// Block-labelled G over centers' probes followed by environment probes. A
/// single center gives emb/env1/env2/env3 labels; several give emb<i>/env.
/// With `with_split`, each center's own block carries its internal part.
GreenFunctionResult gf_block_matrix(const GfContext& ctx, const std::vector<EmbeddingCenter>& centers,
                                    const std::vector<int>& environment, const FrequencyGrid& grid,
                                    bool with_split = false);

}  // namespace sescc
