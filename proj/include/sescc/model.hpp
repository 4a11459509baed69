#pragma once

// Model Hamiltonians and the exact-diagonalization oracles.

#include "sescc/fockspace.hpp"
#include "sescc/greens_types.hpp"

#include <vector>

namespace sescc {

/// Single-impurity Anderson model. Each spin block lists the bath sites with
/// the impurity inserted at `impurity_position`; the up block comes first.
struct SiamParams {
  double eps_c = -0.5;
  double mu = 0.0;
  double U = 1.0;
  std::vector<double> eps_d{-1.0, 1.0};
  std::vector<double> V{1.0, 1.0};
  int impurity_position = 1;

  void validate() const;  // throws std::domain_error
  int n_bath() const { return static_cast<int>(eps_d.size()); }
  int n_orbitals() const { return 2 * (n_bath() + 1); }

  bool operator==(const SiamParams&) const = default;
};

struct SiamLayout {
  std::vector<SpinOrbital> orbitals;
  int impurity_up = 0;
  int impurity_down = 0;
  std::vector<int> bath_up;
  std::vector<int> bath_down;

  std::vector<Spin> spins() const;
};

SiamLayout siam_layout(const SiamParams& p);
SecondQuantizedOp build_siam(const SiamParams& p);

/// Parameters of the three-site example: eps_c=-0.5, U=1, eps_d={-1,1}, V={1,1}.
SiamParams paper_siam();
/// |100110>: both spin blocks hold the lower bath level; spin up also holds the impurity.
Determinant paper_reference();

/// n_up n_down on one spatial site.
SecondQuantizedOp double_occupancy_op(int up, int down);

/// All orbitals acted on by `op` shifted by `offset`.
SecondQuantizedOp shift_orbitals(const SecondQuantizedOp& op, int offset);

/// H = HA + HB + lambda * coupling. HA and HB must touch disjoint orbitals.
SecondQuantizedOp build_composite(const SecondQuantizedOp& HA, const SecondQuantizedOp& HB,
                                  const SecondQuantizedOp& coupling, double lambda);

/// t (a_p^+ a_q + a_q^+ a_p) summed over the (p, q) pairs.
SecondQuantizedOp hopping(const std::vector<std::pair<int, int>>& pairs, double t);

struct EDResult {
  SectorPtr sector;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns

  StateVector state(std::size_t k) const;
  double ground_energy() const { return eigenvalues[0]; }
};

/// Dense diagonalization of a particle-conserving, symmetric operator.
EDResult exact_diagonalize(const SecondQuantizedOp& H, SectorPtr sector);

/// Sector with the reference's up/down counts, or the plain N sector when
/// `spins` is empty.
SectorPtr reference_sector(const Determinant& reference, std::span<const Spin> spins);

/// Exact G_KL(omega) for all probe pairs. The N ground state must be
/// nondegenerate within `degeneracy_tol`.
GreenFunctionResult lehmann_gf(const EDResult& ed_N, const EDResult& ed_Nm1,
                               const EDResult& ed_Np1, const std::vector<int>& probes,
                               const FrequencyGrid& grid, double degeneracy_tol = 1e-8);

/// Poles of G_KK: hole poles at E0 - E_m(N-1), particle poles at E_m(N+1) - E0.
struct PoleSet {
  std::vector<Pole> hole;
  std::vector<Pole> particle;
  std::vector<Pole> all() const;
};
PoleSet lehmann_poles(const EDResult& ed_N, const EDResult& ed_Nm1, const EDResult& ed_Np1,
                      int orbital, double degeneracy_tol = 1e-8);

/// <0| op |0> for the ED ground state.
double ground_expectation(const EDResult& ed, const SecondQuantizedOp& op,
                          double degeneracy_tol = 1e-8);

}  // namespace sescc
