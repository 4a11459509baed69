#include "sescc/ccsolver.hpp"

#include "sescc/model.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace sescc {

void SolverConfig::validate() const {
  if (max_iter < 1) throw std::domain_error("max_iter must be positive");
  if (!(tol > 0.0)) throw std::domain_error("tol must be positive");
  if (!(mixing > 0.0 && mixing <= 1.0)) throw std::domain_error("mixing must lie in (0, 1]");
  if (diis_depth < 0) throw std::domain_error("diis_depth must be >= 0");
  if (!(divergence > tol)) throw std::domain_error("divergence threshold must exceed tol");
}

FixedPointResult solve_fixed_point(const ResidualFn& residual, const ResidualFn& denominators,
                                   Eigen::VectorXd x0, const SolverConfig& cfg, const std::string& what) {
  cfg.validate();
  FixedPointResult res;
  Eigen::VectorXd x = std::move(x0);
  std::deque<Eigen::VectorXd> hist, errs;
  double norm = 0.0;
  for (int it = 0; it <= cfg.max_iter; ++it) {
    const Eigen::VectorXd r = residual(x);
    norm = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
    res.trace.push_back(norm);
    if (!std::isfinite(norm) || norm > cfg.divergence)
      throw ConvergenceError(what + ": residual diverged", norm, it, res.trace);
    if (norm < cfg.tol) {
      res.x = x;
      res.residual_norm = norm;
      res.iterations = it;
      return res;
    }
    if (it == cfg.max_iter) break;
    const Eigen::VectorXd d = denominators(x);
    Eigen::VectorXd step(r.size());
    for (Eigen::Index k = 0; k < r.size(); ++k)
      step[k] = std::abs(d[k]) < 1e-8 ? -cfg.mixing * r[k] : -cfg.mixing * r[k] / d[k];
    Eigen::VectorXd xn = x + step;
    if (cfg.diis_depth > 0) {
      hist.push_back(xn);
      errs.push_back(step);
      if (static_cast<int>(hist.size()) > cfg.diis_depth) {
        hist.pop_front();
        errs.pop_front();
      }
      const auto n = static_cast<Eigen::Index>(hist.size());
      if (n >= 2) {
        Eigen::MatrixXd b = -Eigen::MatrixXd::Ones(n + 1, n + 1);
        b(n, n) = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j)
            b(i, j) = errs[static_cast<std::size_t>(i)].dot(errs[static_cast<std::size_t>(j)]);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
        rhs[n] = -1.0;
        const Eigen::VectorXd c = b.completeOrthogonalDecomposition().solve(rhs);
        if (c.allFinite()) {
          xn.setZero();
          for (Eigen::Index i = 0; i < n; ++i) xn += c[i] * hist[static_cast<std::size_t>(i)];
        }
      }
    }
    x = std::move(xn);
  }
  throw ConvergenceError(what + ": no convergence within max_iter", norm, cfg.max_iter, res.trace);
}

namespace {

// Dense generators E_mu (or E_mu^+) on a sector, reused across iterations.
std::vector<Eigen::MatrixXd> generators(const std::vector<Excitation>& sigs, const Determinant& ref,
                                        SectorPtr sector, AmplitudeKind kind) {
  std::vector<Eigen::MatrixXd> g;
  g.reserve(sigs.size());
  for (const auto& e : sigs) {
    AmplitudeSet one{kind, ref, {{e, 1.0}}};
    g.push_back(excitation_matrix(one, sector).dense());
  }
  return g;
}

Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& gens, const Eigen::VectorXd& x, Eigen::Index n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < gens.size(); ++k)
    if (x[static_cast<Eigen::Index>(k)] != 0.0) m += x[static_cast<Eigen::Index>(k)] * gens[k];
  return m;
}

// T-equation machinery for a subset of varied amplitudes.
CCSolution solve_t_impl(const OperatorMatrix& H, const AmplitudeSet& start,
                        const std::vector<Excitation>& varied, const SolverConfig& cfg) {
  const auto sector = H.domain;
  const auto all = start.signatures();
  ExcitationSpace space(start.reference, all, sector);
  std::vector<std::size_t> pos;
  for (const auto& e : varied) {
    auto k = space.position(e);
    if (!k) throw std::domain_error("varied signature " + e.label() + " not in the amplitude set");
    pos.push_back(*k);
  }
  const auto gens = generators(all, start.reference, sector, AmplitudeKind::T);
  const Eigen::MatrixXd h = H.dense();
  const auto n = h.rows();
  const auto ref = static_cast<Eigen::Index>(space.reference_index());
  const Eigen::VectorXd base = space.values(start);

  Eigen::VectorXd cached_x;
  Eigen::MatrixXd cached_hbar;
  auto full_of = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd f = base;
    for (std::size_t k = 0; k < pos.size(); ++k) f[static_cast<Eigen::Index>(pos[k])] = x[static_cast<Eigen::Index>(k)];
    return f;
  };
  auto hbar = [&](const Eigen::VectorXd& x) -> const Eigen::MatrixXd& {
    if (cached_x.size() != x.size() || cached_x != x) {
      const Eigen::MatrixXd t = combine(gens, full_of(x), n);
      cached_hbar = nilpotent_exp(-t) * h * nilpotent_exp(t);
      cached_x = x;
    }
    return cached_hbar;
  };
  auto residual = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = space.project(hbar(x).col(ref));
    Eigen::VectorXd out(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) out[static_cast<Eigen::Index>(k)] = r[static_cast<Eigen::Index>(pos[k])];
    return out;
  };
  auto denominators = [&](const Eigen::VectorXd& x) {
    const auto& hb = hbar(x);
    Eigen::VectorXd d(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(space.det_index(pos[k]));
      d[static_cast<Eigen::Index>(k)] = hb(i, i) - hb(ref, ref);
    }
    return d;
  };
  Eigen::VectorXd x0(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) x0[static_cast<Eigen::Index>(k)] = base[static_cast<Eigen::Index>(pos[k])];

  const auto fp = solve_fixed_point(residual, denominators, x0, cfg, "T equations");
  CCSolution sol;
  sol.T = space.amplitudes(AmplitudeKind::T, full_of(fp.x));
  sol.energy = hbar(fp.x)(ref, ref);
  sol.residual_norm = fp.residual_norm;
  sol.iterations = fp.iterations;
  sol.trace = fp.trace;
  return sol;
}

}  // namespace

SectorPtr CCProblem::sector() const { return reference_sector(reference, spins); }

std::vector<Excitation> CCProblem::manifold() const {
  return enumerate_excitations(reference, rank_max, spins);
}

OperatorMatrix CCProblem::hamiltonian_matrix() const { return to_matrix(hamiltonian, sector()); }

CCSolution solve_t(const OperatorMatrix& H, const Determinant& reference,
                   const std::vector<Excitation>& manifold, const SolverConfig& cfg) {
  AmplitudeSet zero{AmplitudeKind::T, reference, {}};
  for (const auto& e : manifold) zero.amplitudes.emplace(e, 0.0);
  return solve_t_impl(H, zero, manifold, cfg);
}

CCSolution solve_t(const CCProblem& problem, const SolverConfig& cfg) {
  if (problem.rank_max < 1 || problem.rank_max > problem.reference.count())
    throw std::domain_error("rank_max must lie in [1, N]");
  return solve_t(problem.hamiltonian_matrix(), problem.reference, problem.manifold(), cfg);
}

CCSolution solve_t_partial(const OperatorMatrix& H, const AmplitudeSet& start,
                           const std::vector<Excitation>& active, const SolverConfig& cfg) {
  return solve_t_impl(H, start, active, cfg);
}

AmplitudeSet solve_lambda(const OperatorMatrix& Hbar, const AmplitudeSet& T, const SolverConfig& cfg) {
  ExcitationSpace space(T.reference, T.signatures(), Hbar.domain);
  const Eigen::MatrixXd hb = Hbar.dense();
  const auto ref = static_cast<Eigen::Index>(space.reference_index());
  const double e = hb(ref, ref);
  Eigen::VectorXd d(static_cast<Eigen::Index>(space.size()));
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(space.det_index(k));
    d[static_cast<Eigen::Index>(k)] = hb(i, i) - e;
  }
  auto residual = [&](const Eigen::VectorXd& l) -> Eigen::VectorXd {
    const Eigen::VectorXd row = space.embed(1.0, l);
    return space.project(hb.transpose() * row) - e * l;
  };
  const auto fp = solve_fixed_point(residual, [&](const Eigen::VectorXd&) { return d; },
                                    Eigen::VectorXd::Zero(d.size()), cfg, "Lambda equations");
  return space.amplitudes(AmplitudeKind::Lambda, fp.x);
}

AmplitudeSet solve_s_ext(const OperatorMatrix& Hbar, const AmplitudeSet& T, const ActiveSpace& h,
                         const AmplitudeSet& lambda_int, const SolverConfig& cfg) {
  h.validate(T.reference);
  auto [t_int, t_ext] = split(T, h);
  const auto ext = t_ext.signatures();
  AmplitudeSet lam_full{AmplitudeKind::Lambda, T.reference, {}};
  for (const auto& [e, x] : lambda_int.amplitudes) {
    if (!h.contains(e)) throw std::domain_error("Lambda_int holds external signature " + e.label());
    lam_full.amplitudes.emplace(e, x);
  }
  const auto sector = Hbar.domain;
  const Eigen::VectorXd bra0 = left_reference_row(lam_full, sector);
  if (ext.empty()) return AmplitudeSet{AmplitudeKind::S, T.reference, {}};

  ExcitationSpace space(T.reference, ext, sector);
  const auto gens = generators(ext, T.reference, sector, AmplitudeKind::S);
  const Eigen::MatrixXd hb = Hbar.dense();
  const auto n = hb.rows();
  const auto ref = static_cast<Eigen::Index>(space.reference_index());
  Eigen::VectorXd d(static_cast<Eigen::Index>(ext.size()));
  for (std::size_t k = 0; k < ext.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(space.det_index(k));
    d[static_cast<Eigen::Index>(k)] = hb(i, i) - hb(ref, ref);
  }
  auto residual = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    const Eigen::MatrixXd x = combine(gens, s, n);
    const Eigen::RowVectorXd row = bra0.transpose() * nilpotent_exp(x) * hb * nilpotent_exp(-x);
    return space.project(row.transpose());
  };
  const auto fp = solve_fixed_point(residual, [&](const Eigen::VectorXd&) { return d; },
                                    Eigen::VectorXd::Zero(d.size()), cfg, "S_ext equations");
  return space.amplitudes(AmplitudeKind::S, fp.x);
}

AmplitudeSet cluster_analyze_fci(const StateVector& psi, const Determinant& reference) {
  const auto& sector = *psi.sector;
  const double c0 = psi[reference];
  if (!(std::abs(c0) > 1e-12)) throw std::domain_error("state has no overlap with the reference");
  AmplitudeSet c{AmplitudeKind::T, reference, {}};
  for (std::size_t i = 0; i < sector.size(); ++i) {
    const auto& det = sector[i];
    if (det == reference) continue;
    const auto e = Excitation::between(reference, det);
    const auto r = apply_term(e.op().terms().front().ops, reference);
    c.amplitudes.emplace(e, r->second * psi.coefficients[static_cast<Eigen::Index>(i)] / c0);
  }
  return log_coefficients(c, AmplitudeKind::T);
}

Eigen::VectorXd left_reference_row(const AmplitudeSet& lambda, SectorPtr sector) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector->size()));
  row[static_cast<Eigen::Index>(sector->index_of(lambda.reference))] = 1.0;
  for (const auto& [e, x] : lambda.amplitudes) {
    auto r = apply_term(e.op().terms().front().ops, lambda.reference);
    if (!r) throw std::domain_error("signature " + e.label() + " does not act on the reference");
    row[static_cast<Eigen::Index>(sector->index_of(r->first))] += r->second * x;
  }
  return row;
}

double cc_expectation(const OperatorMatrix& O, const AmplitudeSet& T, const AmplitudeSet& lambda) {
  const auto sector = O.domain;
  const Eigen::MatrixXd t = excitation_matrix(T, sector).dense();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sector->size()));
  phi[static_cast<Eigen::Index>(sector->index_of(T.reference))] = 1.0;
  const Eigen::VectorXd ket = nilpotent_exp(-t) * (O.dense() * (nilpotent_exp(t) * phi));
  return left_reference_row(lambda, sector).dot(ket);
}

}  // namespace sescc
