#pragma once

#include "sescc/ccgf.hpp"
#include "sescc/model.hpp"
#include "sescc/sesflow.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fixture {

using namespace sescc;

/// Ground-state CC data for one model Hamiltonian in the reference's spin sector.
struct Solved {
  SecondQuantizedOp op;
  CCProblem problem;
  OperatorMatrix H;
  OperatorMatrix hbar;
  std::vector<Excitation> manifold;
  CCSolution cc;
  AmplitudeSet lambda;
  AmplitudeSet S;
};

inline Solved solve(const SecondQuantizedOp& op, const Determinant& ref, std::vector<Spin> spins,
                    int rank_max = -1, const SolverConfig& cfg = {}) {
  Solved s;
  s.op = op;
  s.problem = CCProblem{op, ref, std::move(spins), rank_max < 0 ? ref.count() : rank_max};
  s.H = s.problem.hamiltonian_matrix();
  s.manifold = s.problem.manifold();
  s.cc = solve_t(s.H, ref, s.manifold, cfg);
  s.hbar = similarity_transform(s.H, s.cc.T);
  s.lambda = solve_lambda(s.hbar, s.cc.T, cfg);
  s.S = s_from_lambda(s.lambda);
  return s;
}

inline SiamParams siam_at(double U, double eps_c) {
  auto p = paper_siam();
  p.U = U;
  p.eps_c = eps_c;
  return p;
}

inline Solved three_site(double U = 1.0, double eps_c = -0.5) {
  const auto p = siam_at(U, eps_c);
  return solve(build_siam(p), paper_reference(), siam_layout(p).spins());
}

inline const Solved& paper() {
  static const Solved s = three_site();
  return s;
}

inline GfContext context(const Solved& s) { return make_gf_context(s.op, s.cc.T, s.lambda, s.cc.energy); }

/// Exact N (spin sector), N-1 and N+1 (full sectors) eigensystems.
struct Exact {
  EDResult n, nm1, np1;
};

inline Exact exact(const Solved& s) {
  const int m = s.problem.reference.n_orbitals(), n = s.problem.reference.count();
  return {exact_diagonalize(s.op, s.problem.sector()), exact_diagonalize(s.op, build_sector(m, n - 1)),
          exact_diagonalize(s.op, build_sector(m, n + 1))};
}

/// Two one-bath impurity models A (orbitals 0-3) and B (4-7), coupled through
/// impurity hopping of strength lambda. Bath orbitals are occupied.
struct Composite {
  SiamParams a, b;
  SecondQuantizedOp op;
  Determinant reference;
  std::vector<Spin> spins;
  ActiveSpace active_a;
};

inline SiamParams one_bath(double U, double eps_c, double eps_d, double V) {
  SiamParams p;
  p.U = U;
  p.eps_c = eps_c;
  p.eps_d = {eps_d};
  p.V = {V};
  p.impurity_position = 1;
  return p;
}

inline Composite composite(double lambda) {
  Composite c;
  c.a = one_bath(1.0, -0.5, -1.0, 1.0);
  c.b = one_bath(2.0, -0.8, -1.5, 0.7);
  const auto la = siam_layout(c.a), lb = siam_layout(c.b);
  const int off = c.a.n_orbitals();
  c.op = build_composite(build_siam(c.a), shift_orbitals(build_siam(c.b), off),
                         hopping({{la.impurity_up, off + lb.impurity_up}, {la.impurity_down, off + lb.impurity_down}}, 1.0),
                         lambda);
  c.spins = la.spins();
  const auto sb = lb.spins();
  c.spins.insert(c.spins.end(), sb.begin(), sb.end());
  const std::vector<int> occ{la.bath_up[0], la.bath_down[0], off + lb.bath_up[0], off + lb.bath_down[0]};
  c.reference = Determinant::from_orbitals(2 * off, occ);
  c.active_a = ActiveSpace{{la.bath_up[0], la.bath_down[0]}, {la.impurity_up, la.impurity_down}};
  return c;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Grid reaching 2 beyond the outermost of the given pole positions.
inline FrequencyGrid grid_around(const std::vector<double>& poles, double step = 0.01, double eta = 0.05) {
  double lo = 0.0, hi = 0.0;
  for (double p : poles) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return FrequencyGrid::uniform(lo - 2.0, hi + 2.0, step, eta);
}

}  // namespace fixture
