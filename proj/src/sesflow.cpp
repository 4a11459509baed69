#include "sescc/sesflow.hpp"

#include "sescc/model.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sescc {

const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::Bar: return "bar";
    case Flavor::DoubleBar: return "doublebar";
    case Flavor::Tilde: return "tilde";
  }
  return "?";
}

Flavor flavor_from_string(const std::string& s) {
  if (s == "bar") return Flavor::Bar;
  if (s == "doublebar") return Flavor::DoubleBar;
  if (s == "tilde") return Flavor::Tilde;
  throw std::domain_error("unknown effective Hamiltonian flavor: " + s);
}

namespace {

Eigen::MatrixXd exp_dense(const AmplitudeSet& a, SectorPtr sector, double factor = 1.0) {
  return nilpotent_exp(factor * excitation_matrix(a, sector).dense());
}

Eigen::VectorXd reference_vector(const Determinant& ref, SectorPtr sector) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector->size()));
  phi[static_cast<Eigen::Index>(sector->index_of(ref))] = 1.0;
  return phi;
}

// Intermediate-normalized coefficients of a basis vector, mapped to amplitudes.
AmplitudeSet analyze(const Eigen::VectorXd& v, const EffectiveHamiltonian& heff, AmplitudeKind kind) {
  if (!(std::abs(v[0]) > 1e-12)) throw std::domain_error("eigenvector has no reference component");
  AmplitudeSet c{kind, heff.reference, {}};
  for (std::size_t k = 0; k < heff.internal.size(); ++k)
    c.amplitudes.emplace(heff.internal[k], v[static_cast<Eigen::Index>(k + 1)] / v[0]);
  return log_coefficients(c, kind);
}

}  // namespace

Eigen::MatrixXd EffectiveHamiltonian::project(const Eigen::MatrixXd& a) const {
  ExcitationSpace space(reference, internal, sector);
  const auto n = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Index> idx{static_cast<Eigen::Index>(space.reference_index())};
  std::vector<int> sgn{1};
  for (std::size_t k = 0; k < space.size(); ++k) {
    idx.push_back(static_cast<Eigen::Index>(space.det_index(k)));
    sgn.push_back(space.sign(k));
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = sgn[static_cast<std::size_t>(i)] * sgn[static_cast<std::size_t>(j)] *
                a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return m;
}

EffectiveHamiltonian build_heff(Flavor flavor, const OperatorMatrix& H, const AmplitudeSet& T_ext,
                                const ActiveSpace& active, const std::vector<Excitation>& manifold,
                                const HeffExtras& extras) {
  active.validate(T_ext.reference);
  for (const auto& [e, x] : T_ext.amplitudes)
    if (active.contains(e)) throw std::domain_error("T_ext contains internal signature " + e.label());
  if (flavor != Flavor::Bar && (!extras.S_ext || !extras.T_int))
    throw std::domain_error(std::string(to_string(flavor)) + " effective Hamiltonian needs S_ext and T_int");

  EffectiveHamiltonian heff;
  heff.flavor = flavor;
  heff.active = active;
  heff.reference = T_ext.reference;
  heff.sector = H.domain;
  heff.internal = internal_excitations(manifold, active);
  ExcitationSpace space(heff.reference, heff.internal, heff.sector);
  heff.basis.push_back(heff.reference);
  for (std::size_t k = 0; k < space.size(); ++k) heff.basis.push_back((*heff.sector)[space.det_index(k)]);

  const auto sector = heff.sector;
  const Eigen::MatrixXd h = H.dense();
  Eigen::MatrixXd a;
  switch (flavor) {
    case Flavor::Bar:
      a = exp_dense(T_ext, sector, -1.0) * h * exp_dense(T_ext, sector);
      break;
    case Flavor::DoubleBar: {
      for (const auto& [e, x] : extras.T_int->amplitudes)
        if (!active.contains(e)) throw std::domain_error("T_int contains external signature " + e.label());
      const auto t = merged(T_ext, *extras.T_int);
      const Eigen::MatrixXd hb = exp_dense(t, sector, -1.0) * h * exp_dense(t, sector);
      a = exp_dense(*extras.S_ext, sector) * hb * exp_dense(*extras.S_ext, sector, -1.0);
      break;
    }
    case Flavor::Tilde: {
      const Eigen::MatrixXd hb = exp_dense(T_ext, sector, -1.0) * h * exp_dense(T_ext, sector);
      const Eigen::MatrixXd w = exp_dense(*extras.T_int, sector) * exp_dense(*extras.S_ext, sector) *
                                exp_dense(*extras.T_int, sector, -1.0);
      a = w * hb;
      break;
    }
  }
  heff.matrix = heff.project(a);
  return heff;
}

InternalEigenpair diagonalize_heff(const EffectiveHamiltonian& heff) {
  const auto& m = heff.matrix;
  if (m.rows() == 0) throw std::domain_error("empty effective Hamiltonian");
  Eigen::EigenSolver<Eigen::MatrixXd> right(m);
  const auto& ev = right.eigenvalues();
  Eigen::Index k = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (ev[i].real() < ev[k].real()) k = i;
  if (std::abs(ev[k].imag()) > 1e-10)
    throw std::domain_error("lowest effective-Hamiltonian eigenvalue is complex");
  Eigen::EigenSolver<Eigen::MatrixXd> left(m.transpose());
  const auto& lv = left.eigenvalues();
  Eigen::Index kl = 0;
  for (Eigen::Index i = 1; i < lv.size(); ++i)
    if (std::abs(lv[i] - ev[k]) < std::abs(lv[kl] - ev[k])) kl = i;

  InternalEigenpair pair;
  pair.energy = ev[k].real();
  Eigen::VectorXd r = right.eigenvectors().col(k).real();
  Eigen::VectorXd l = left.eigenvectors().col(kl).real();
  r.normalize();
  const double overlap = l.dot(r);
  if (!(std::abs(overlap) > 1e-14)) throw std::domain_error("left and right eigenvectors are orthogonal");
  l /= overlap;
  const double alpha = std::sqrt(l.norm() / r.norm());
  r *= alpha;
  l /= alpha;
  if (r[0] < 0) {
    r = -r;
    l = -l;
  }
  pair.right = r;
  pair.left = l;
  pair.normalization = l.dot(r);
  return pair;
}

InternalAmplitudes extract_internal(const InternalEigenpair& pair, const EffectiveHamiltonian& heff) {
  InternalAmplitudes out;
  switch (heff.flavor) {
    case Flavor::Bar:
      out.T_int = analyze(pair.right, heff, AmplitudeKind::T);
      break;
    case Flavor::DoubleBar:
      out.S_int = analyze(pair.left, heff, AmplitudeKind::S);
      break;
    case Flavor::Tilde: {
      out.T_int = analyze(pair.right, heff, AmplitudeKind::T);
      const Eigen::MatrixXd et = heff.project(exp_dense(*out.T_int, heff.sector));
      const Eigen::VectorXd bra = et.transpose() * pair.left;
      out.S_int = analyze(bra, heff, AmplitudeKind::S);
      break;
    }
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> tilde_vectors(const EffectiveHamiltonian& heff,
                                                          const AmplitudeSet& T_int,
                                                          const AmplitudeSet& S_int) {
  const auto sector = heff.sector;
  const Eigen::VectorXd phi = reference_vector(heff.reference, sector);
  const Eigen::VectorXd ket = exp_dense(T_int, sector) * phi;
  const Eigen::VectorXd bra = (phi.transpose() * exp_dense(S_int, sector) * exp_dense(T_int, sector, -1.0)).transpose();
  // project() on a rank-one matrix picks the signed basis components
  const Eigen::MatrixXd r = heff.project(ket * phi.transpose());
  const Eigen::MatrixXd l = heff.project(phi * bra.transpose());
  return {r.col(0), l.row(0).transpose()};
}

FlowState flow_iterate(const OperatorMatrix& H, const Determinant& reference,
                       const std::vector<Excitation>& manifold,
                       const std::vector<SubsystemSpec>& subsystems, const SolverConfig& cfg) {
  cfg.validate();
  if (subsystems.empty()) throw std::domain_error("flow needs at least one subsystem");
  std::set<std::string> labels;
  for (const auto& s : subsystems) {
    s.active.validate(reference);
    if (!labels.insert(s.label).second) throw std::domain_error("duplicate subsystem label " + s.label);
  }
  const auto sector = H.domain;
  ExcitationSpace space(reference, manifold, sector);
  std::vector<std::vector<std::size_t>> internal(subsystems.size());
  std::set<std::size_t> covered;
  for (std::size_t i = 0; i < subsystems.size(); ++i)
    for (std::size_t k = 0; k < manifold.size(); ++k)
      if (subsystems[i].active.contains(manifold[k])) {
        internal[i].push_back(k);
        covered.insert(k);
      }

  FlowState st;
  st.subsystems = subsystems;
  for (std::size_t k = 0; k < manifold.size(); ++k)
    (covered.count(k) ? st.covered : st.uncovered).push_back(manifold[k]);

  const Eigen::MatrixXd h = H.dense();
  const auto ref = static_cast<Eigen::Index>(space.reference_index());
  auto hbar = [&](const Eigen::VectorXd& t) {
    const Eigen::MatrixXd x = excitation_matrix(space.amplitudes(AmplitudeKind::T, t), sector).dense();
    return Eigen::MatrixXd(nilpotent_exp(-x) * h * nilpotent_exp(x));
  };

  Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(manifold.size()));
  std::vector<double> spreads;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    std::vector<std::vector<double>> proposals(manifold.size());
    st.energies.clear();
    st.heffs.clear();
    for (std::size_t i = 0; i < subsystems.size(); ++i) {
      Eigen::VectorXd text = t;
      for (auto k : internal[i]) text[static_cast<Eigen::Index>(k)] = 0.0;
      auto t_ext = space.amplitudes(AmplitudeKind::T, text);
      for (auto k : internal[i]) t_ext.amplitudes.erase(manifold[k]);
      auto heff = build_heff(Flavor::Bar, H, t_ext, subsystems[i].active, manifold);
      const auto pair = diagonalize_heff(heff);
      const auto t_int = *extract_internal(pair, heff).T_int;
      double change = 0.0;
      for (auto k : internal[i]) {
        const double v = t_int.at(manifold[k]);
        proposals[k].push_back(v);
        change = std::max(change, std::abs(v - t[static_cast<Eigen::Index>(k)]));
      }
      st.energies.push_back(pair.energy);
      st.trace.push_back({it, subsystems[i].label, pair.energy, change});
      st.heffs.push_back(std::move(heff));
    }
    Eigen::VectorXd tn = t;
    for (std::size_t k = 0; k < manifold.size(); ++k) {
      const auto& p = proposals[k];
      if (p.empty()) continue;
      double s = 0.0;
      for (double v : p) s += v;
      tn[static_cast<Eigen::Index>(k)] = s / static_cast<double>(p.size());
    }
    const Eigen::MatrixXd hb = hbar(tn);
    const Eigen::VectorXd r = space.project(hb.col(ref));
    for (auto k : covered) {
      const auto i = static_cast<Eigen::Index>(space.det_index(k));
      const double d = hb(i, i) - hb(ref, ref);
      const auto kk = static_cast<Eigen::Index>(k);
      tn[kk] -= std::abs(d) < 1e-8 ? cfg.mixing * r[kk] : cfg.mixing * r[kk] / d;
    }
    const double dt = (tn - t).lpNorm<Eigen::Infinity>();
    t = tn;
    const auto [lo, hi] = std::minmax_element(st.energies.begin(), st.energies.end());
    st.max_spread = *hi - *lo;
    spreads.push_back(st.max_spread);
    st.iteration = it;
    if (!std::isfinite(dt) || dt > cfg.divergence)
      throw ConvergenceError("flow diverged", st.max_spread, it, spreads);
    if (st.max_spread < cfg.tol && dt < cfg.tol) {
      st.T = space.amplitudes(AmplitudeKind::T, t);
      st.energy = hbar(t)(ref, ref);
      return st;
    }
  }
  throw ConvergenceError("flow did not converge", st.max_spread, cfg.max_iter, spreads);
}

std::string trace_jsonl(const FlowState& state) {
  std::string out;
  for (const auto& r : state.trace) {
    nlohmann::json j{{"iteration", r.iteration}, {"subsystem", r.subsystem}, {"energy", r.energy},
                     {"residual", r.residual}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SubsystemSpec> incremental_external_subsystems(const std::vector<Excitation>& manifold,
                                                           const ActiveSpace& main) {
  int top = 0;
  for (const auto& e : manifold) top = std::max(top, e.rank());
  std::vector<Excitation> picks;
  for (const auto& e : manifold)
    if (e.rank() == top && !main.contains(e)) picks.push_back(e);
  std::sort(picks.begin(), picks.end());
  std::vector<SubsystemSpec> out;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    SubsystemSpec s;
    s.active.R.insert(picks[k].holes.begin(), picks[k].holes.end());
    s.active.S.insert(picks[k].particles.begin(), picks[k].particles.end());
    s.label = "ext" + std::to_string(k + 1);
    out.push_back(std::move(s));
  }
  return out;
}

double double_occupancy(const AmplitudeSet& T, const AmplitudeSet& lambda, SectorPtr sector, int up,
                        int down) {
  return cc_expectation(to_matrix(double_occupancy_op(up, down), sector), T, lambda);
}

}  // namespace sescc
