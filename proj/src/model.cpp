#include "sescc/model.hpp"

#include "sescc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sescc {

void SiamParams::validate() const {
  if (eps_d.size() != V.size())
    throw std::domain_error("eps_d and V must have the same length");
  if (eps_d.empty()) throw std::domain_error("at least one bath level is required");
  if (impurity_position < 0 || impurity_position > n_bath())
    throw std::domain_error("impurity_position must lie in [0, n_bath]");
  if (n_orbitals() > 64) throw std::domain_error("too many spin-orbitals");
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(eps_c) || !finite(mu) || !finite(U) || !std::all_of(eps_d.begin(), eps_d.end(), finite) ||
      !std::all_of(V.begin(), V.end(), finite))
    throw std::domain_error("SIAM parameters must be finite");
}

std::vector<Spin> SiamLayout::spins() const {
  std::vector<Spin> s;
  s.reserve(orbitals.size());
  for (const auto& o : orbitals) s.push_back(o.spin);
  return s;
}

SiamLayout siam_layout(const SiamParams& p) {
  p.validate();
  const int nb = p.n_bath();
  const int block = nb + 1;
  SiamLayout layout;
  layout.orbitals.resize(static_cast<std::size_t>(2 * block));
  for (int sigma = 0; sigma < 2; ++sigma) {
    const Spin spin = sigma == 0 ? Spin::Up : Spin::Down;
    int bath = 0;
    for (int site = 0; site < block; ++site) {
      const int index = sigma * block + site;
      auto& orb = layout.orbitals[static_cast<std::size_t>(index)];
      orb.index = index;
      orb.spin = spin;
      if (site == p.impurity_position) {
        orb.locality = {Locality::Kind::Impurity, -1};
        (sigma == 0 ? layout.impurity_up : layout.impurity_down) = index;
      } else {
        orb.locality = {Locality::Kind::Bath, bath++};
        (sigma == 0 ? layout.bath_up : layout.bath_down).push_back(index);
      }
    }
  }
  return layout;
}

SecondQuantizedOp build_siam(const SiamParams& p) {
  const auto layout = siam_layout(p);
  SecondQuantizedOp h;
  const int cu = layout.impurity_up, cd = layout.impurity_down;
  for (int c : {cu, cd}) h.add(p.eps_c - p.mu, {{c, true}, {c, false}});
  h.add(p.U, {{cu, true}, {cu, false}, {cd, true}, {cd, false}});
  for (int i = 0; i < p.n_bath(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    for (int d : {layout.bath_up[k], layout.bath_down[k]}) h.add(p.eps_d[k], {{d, true}, {d, false}});
  }
  for (int i = 0; i < p.n_bath(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    for (auto [c, d] : {std::pair{cu, layout.bath_up[k]}, std::pair{cd, layout.bath_down[k]}}) {
      h.add(p.V[k], {{c, true}, {d, false}});
      h.add(p.V[k], {{d, true}, {c, false}});
    }
  }
  return h;
}

SiamParams paper_siam() { return SiamParams{}; }

Determinant paper_reference() { return Determinant::from_string("100110"); }

SecondQuantizedOp double_occupancy_op(int up, int down) {
  SecondQuantizedOp op;
  op.add(1.0, {{up, true}, {up, false}, {down, true}, {down, false}});
  return op;
}

SecondQuantizedOp shift_orbitals(const SecondQuantizedOp& op, int offset) {
  SecondQuantizedOp out;
  for (const auto& t : op.terms()) {
    auto ops = t.ops;
    for (auto& l : ops) l.orbital += offset;
    out.add(t.coefficient, std::move(ops));
  }
  return out;
}

SecondQuantizedOp build_composite(const SecondQuantizedOp& HA, const SecondQuantizedOp& HB,
                                  const SecondQuantizedOp& coupling, double lambda) {
  const auto a = HA.support(), b = HB.support();
  std::vector<int> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  if (!common.empty()) throw std::domain_error("composite subsystems share orbitals");
  return HA + HB + coupling.scaled(lambda);
}

SecondQuantizedOp hopping(const std::vector<std::pair<int, int>>& pairs, double t) {
  SecondQuantizedOp op;
  for (auto [p, q] : pairs) {
    op.add(t, {{p, true}, {q, false}});
    op.add(t, {{q, true}, {p, false}});
  }
  return op;
}

StateVector EDResult::state(std::size_t k) const {
  return StateVector{sector, eigenvectors.col(static_cast<Eigen::Index>(k))};
}

EDResult exact_diagonalize(const SecondQuantizedOp& H, SectorPtr sector) {
  if (H.particle_change() != 0) throw std::domain_error("Hamiltonian must conserve particle number");
  const Eigen::MatrixXd m = to_matrix(H, sector).dense();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::domain_error("Hamiltonian matrix is not Hermitian");
  EDResult r{sector, {}, {}};
  if (m.rows() == 0) return r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  const double residual =
      (m * r.eigenvectors - r.eigenvectors * r.eigenvalues.asDiagonal()).colwise().norm().maxCoeff();
  if (residual > 1e-10 * scale)
    throw std::runtime_error("eigenpair residual exceeds 1e-10");
  return r;
}

SectorPtr reference_sector(const Determinant& reference, std::span<const Spin> spins) {
  if (spins.empty()) return build_sector(reference.n_orbitals(), reference.count());
  if (static_cast<int>(spins.size()) != reference.n_orbitals())
    throw std::domain_error("spin labels do not match the orbital count");
  int up = 0, down = 0;
  for (int p : reference.occupied_orbitals()) (spins[static_cast<std::size_t>(p)] == Spin::Up ? up : down)++;
  return build_spin_sector(spins, up, down);
}

namespace {

void check_nondegenerate(const EDResult& ed, double tol) {
  if (ed.eigenvalues.size() == 0) throw std::domain_error("empty N-electron sector");
  if (ed.eigenvalues.size() > 1 && ed.eigenvalues[1] - ed.eigenvalues[0] < tol)
    throw DegenerateGroundStateError("ground state is degenerate; restrict the sector");
}

// <m| op |0> for every eigenvector m of `target`.
Eigen::VectorXd transition_amplitudes(const EDResult& ed_N, const EDResult& target,
                                      const SecondQuantizedOp& op) {
  if (target.sector->size() == 0) return Eigen::VectorXd::Zero(0);
  const auto m = to_matrix(op, ed_N.sector, target.sector);
  const Eigen::VectorXd v = m.matrix * ed_N.eigenvectors.col(0);
  return target.eigenvectors.transpose() * v;
}

}  // namespace

std::vector<Pole> PoleSet::all() const {
  std::vector<Pole> out = hole;
  out.insert(out.end(), particle.begin(), particle.end());
  return consolidate_poles(out);
}

GreenFunctionResult lehmann_gf(const EDResult& ed_N, const EDResult& ed_Nm1, const EDResult& ed_Np1,
                               const std::vector<int>& probes, const FrequencyGrid& grid,
                               double degeneracy_tol) {
  grid.validate();
  check_nondegenerate(ed_N, degeneracy_tol);
  const double e0 = ed_N.ground_energy();
  std::vector<Eigen::VectorXd> rem, add;  // <m|a_K|0>, <m|a_K^+|0>
  for (int k : probes) {
    rem.push_back(transition_amplitudes(ed_N, ed_Nm1, SecondQuantizedOp::annihilator(k)));
    add.push_back(transition_amplitudes(ed_N, ed_Np1, SecondQuantizedOp::creator(k)));
  }
  auto g = GreenFunctionResult::zeros(grid, probes);
  const auto np = probes.size();
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const double om = grid.omegas[w];
    for (std::size_t k = 0; k < np; ++k)
      for (std::size_t l = 0; l < np; ++l) {
        cplx h = 0.0, p = 0.0;
        for (Eigen::Index m = 0; m < rem[k].size(); ++m)
          h += rem[l][m] * rem[k][m] / cplx(om - (e0 - ed_Nm1.eigenvalues[m]), -grid.eta);
        for (Eigen::Index m = 0; m < add[k].size(); ++m)
          p += add[k][m] * add[l][m] / cplx(om - (ed_Np1.eigenvalues[m] - e0), grid.eta);
        g.hole[w](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = h;
        g.particle[w](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = p;
      }
  }
  return g;
}

PoleSet lehmann_poles(const EDResult& ed_N, const EDResult& ed_Nm1, const EDResult& ed_Np1,
                      int orbital, double degeneracy_tol) {
  check_nondegenerate(ed_N, degeneracy_tol);
  const double e0 = ed_N.ground_energy();
  const auto rem = transition_amplitudes(ed_N, ed_Nm1, SecondQuantizedOp::annihilator(orbital));
  const auto add = transition_amplitudes(ed_N, ed_Np1, SecondQuantizedOp::creator(orbital));
  PoleSet ps;
  for (Eigen::Index m = 0; m < rem.size(); ++m)
    ps.hole.push_back({e0 - ed_Nm1.eigenvalues[m], rem[m] * rem[m]});
  for (Eigen::Index m = 0; m < add.size(); ++m)
    ps.particle.push_back({ed_Np1.eigenvalues[m] - e0, add[m] * add[m]});
  ps.hole = consolidate_poles(ps.hole);
  ps.particle = consolidate_poles(ps.particle);
  return ps;
}

double ground_expectation(const EDResult& ed, const SecondQuantizedOp& op, double degeneracy_tol) {
  check_nondegenerate(ed, degeneracy_tol);
  const auto m = to_matrix(op, ed.sector);
  const Eigen::VectorXd v = ed.eigenvectors.col(0);
  return v.dot(m.matrix * v);
}

}  // namespace sescc
