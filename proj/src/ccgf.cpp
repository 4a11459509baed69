#include "sescc/ccgf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sescc {

namespace {

SectorPtr sector_or_empty(int m, int n) {
  if (n < 0 || n > m) return std::make_shared<const SectorBasis>(m, 0, std::vector<Determinant>{});
  return build_sector(m, n);
}

Eigen::MatrixXd dense_op(const SecondQuantizedOp& op, SectorPtr from, SectorPtr to) {
  if (from->size() == 0 || to->size() == 0)
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(to->size()), static_cast<Eigen::Index>(from->size()));
  return to_matrix(op, from, to).dense();
}

Eigen::MatrixXd amp_matrix(const AmplitudeSet& a, SectorPtr sector) {
  if (sector->size() == 0) return Eigen::MatrixXd::Zero(0, 0);
  return excitation_matrix(a, sector).dense();
}

Eigen::MatrixXd ladder(int orbital, bool dagger, SectorPtr from, SectorPtr to) {
  return dense_op(dagger ? SecondQuantizedOp::creator(orbital) : SecondQuantizedOp::annihilator(orbital), from, to);
}

struct Sectors {
  SectorPtr sec;
  const Eigen::MatrixXd* t;
};

Sectors pick(const GfContext& ctx, int shift) {
  if (shift < 0) return {ctx.sector_Nm1, &ctx.t_Nm1};
  if (shift > 0) return {ctx.sector_Np1, &ctx.t_Np1};
  return {ctx.sector_N, &ctx.t_N};
}

// a + [a, T] between two sectors given by their particle-number shifts.
Eigen::MatrixXd abar_between(const GfContext& ctx, int orbital, bool dagger, int from, int to) {
  const auto f = pick(ctx, from), t = pick(ctx, to);
  const Eigen::MatrixXd a = ladder(orbital, dagger, f.sec, t.sec);
  return a + a * (*f.t) - (*t.t) * a;
}

Eigen::VectorXd masked(const Eigen::VectorXd& v, const std::vector<bool>& mask) {
  Eigen::VectorXd out = v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) out[static_cast<Eigen::Index>(i)] = 0.0;
  return out;
}

Eigen::VectorXcd masked(const Eigen::VectorXcd& v, const std::vector<bool>& mask, bool keep) {
  Eigen::VectorXcd out = v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != keep) out[static_cast<Eigen::Index>(i)] = 0.0;
  return out;
}

Eigen::VectorXcd solve_one(const Eigen::PartialPivLU<Eigen::MatrixXcd>& lu, const Eigen::MatrixXcd& a,
                           const Eigen::VectorXd& b, double* residual) {
  const Eigen::VectorXcd bc = b.cast<cplx>();
  Eigen::VectorXcd x = lu.solve(bc);
  const double r = (a * x - bc).lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + bc.lpNorm<Eigen::Infinity>();
  if (!(r <= 1e-10 * scale)) throw std::runtime_error("resolvent solve residual exceeds 1e-10");
  if (residual) *residual = r;
  return x;
}

Eigen::MatrixXcd shifted(const Eigen::MatrixXd& hbar, double omega, double eta, XYKind kind) {
  const auto n = hbar.rows();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  if (kind == XYKind::X) return cplx(omega, -eta) * id + hbar.cast<cplx>();
  return cplx(omega, eta) * id - hbar.cast<cplx>();
}

// sum_k (u R)_k (R^{-1} v)_k / (omega -/+ ... ) pole decomposition of u (z +/- A)^{-1} v.
std::vector<Pole> resolvent_poles(const Eigen::MatrixXd& a, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                  double sign) {
  std::vector<Pole> poles;
  if (a.rows() == 0) return poles;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXcd r = es.eigenvectors();
  const Eigen::VectorXcd left = u.cast<cplx>().transpose() * r;
  const Eigen::VectorXcd right = r.partialPivLu().solve(v.cast<cplx>());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const cplx w = left[k] * right[k];
    poles.push_back({sign * es.eigenvalues()[k].real(), w.real()});
  }
  return consolidate_poles(poles);
}

bool any_true(const std::vector<bool>& m) { return std::find(m.begin(), m.end(), true) != m.end(); }

std::set<int> active_orbitals(const ActiveSpace& h) {
  std::set<int> s = h.R;
  s.insert(h.S.begin(), h.S.end());
  return s;
}

}  // namespace

GfContext make_gf_context(const SecondQuantizedOp& H, const AmplitudeSet& T, const AmplitudeSet& lambda,
                          double e_cc) {
  if (T.kind != AmplitudeKind::T || lambda.kind != AmplitudeKind::Lambda)
    throw std::domain_error("context needs T and Lambda amplitude sets");
  GfContext ctx;
  ctx.reference = T.reference;
  ctx.T = T;
  ctx.lambda = lambda;
  ctx.energy = e_cc;
  const int m = T.reference.n_orbitals(), n = T.reference.count();
  ctx.sector_N = build_sector(m, n);
  ctx.sector_Nm1 = sector_or_empty(m, n - 1);
  ctx.sector_Np1 = sector_or_empty(m, n + 1);
  ctx.h_N = dense_op(H, ctx.sector_N, ctx.sector_N);
  ctx.h_Nm1 = dense_op(H, ctx.sector_Nm1, ctx.sector_Nm1);
  ctx.h_Np1 = dense_op(H, ctx.sector_Np1, ctx.sector_Np1);
  ctx.t_N = amp_matrix(T, ctx.sector_N);
  ctx.t_Nm1 = amp_matrix(T, ctx.sector_Nm1);
  ctx.t_Np1 = amp_matrix(T, ctx.sector_Np1);
  auto hbar_n = [&](const Eigen::MatrixXd& h, const Eigen::MatrixXd& t) {
    const auto k = h.rows();
    return Eigen::MatrixXd(nilpotent_exp(-t) * h * nilpotent_exp(t) - e_cc * Eigen::MatrixXd::Identity(k, k));
  };
  ctx.hbar_Nm1 = hbar_n(ctx.h_Nm1, ctx.t_Nm1);
  ctx.hbar_Np1 = hbar_n(ctx.h_Np1, ctx.t_Np1);
  ctx.phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ctx.sector_N->size()));
  ctx.phi[static_cast<Eigen::Index>(ctx.sector_N->index_of(T.reference))] = 1.0;
  ctx.bra = left_reference_row(lambda, ctx.sector_N);
  return ctx;
}

Eigen::MatrixXd abar(const GfContext& ctx, int orbital, bool dagger) {
  return abar_between(ctx, orbital, dagger, 0, dagger ? 1 : -1);
}

Eigen::MatrixXd dressed_ladder(const GfContext& ctx, int orbital, bool dagger, const AmplitudeSet& X) {
  const auto to = dagger ? ctx.sector_Np1 : ctx.sector_Nm1;
  const Eigen::MatrixXd a = ladder(orbital, dagger, ctx.sector_N, to);
  return nilpotent_exp(-amp_matrix(X, to)) * a * nilpotent_exp(amp_matrix(X, ctx.sector_N));
}

Eigen::VectorXcd XYSolution::internal_part() const {
  return internal.empty() ? vector : masked(vector, internal, true);
}

Eigen::VectorXcd XYSolution::external_part() const {
  return internal.empty() ? Eigen::VectorXcd::Zero(vector.size()) : masked(vector, internal, false);
}

std::vector<bool> internal_mask(const Determinant& reference, const SectorBasis& sector, const ActiveSpace& h) {
  std::vector<bool> mask(sector.size());
  for (std::size_t i = 0; i < sector.size(); ++i) {
    const auto& d = sector[i];
    bool inside = true;
    for (int p = 0; p < reference.n_orbitals() && inside; ++p) {
      if (reference.occupied(p) && !d.occupied(p)) inside = h.R.count(p) > 0;
      if (!reference.occupied(p) && d.occupied(p)) inside = h.S.count(p) > 0;
    }
    mask[i] = inside;
  }
  return mask;
}

std::vector<XYSolution> solve_xy(const GfContext& ctx, int orbital, XYKind kind, const FrequencyGrid& grid,
                                 const ActiveSpace* h) {
  grid.validate();
  const bool is_x = kind == XYKind::X;
  const auto sector = is_x ? ctx.sector_Nm1 : ctx.sector_Np1;
  const Eigen::MatrixXd& hb = is_x ? ctx.hbar_Nm1 : ctx.hbar_Np1;
  const Eigen::VectorXd b = abar(ctx, orbital, !is_x) * ctx.phi;
  std::vector<bool> mask;
  if (h) mask = internal_mask(ctx.reference, *sector, *h);
  std::vector<XYSolution> out;
  out.reserve(grid.size());
  for (double om : grid.omegas) {
    XYSolution s;
    s.orbital = orbital;
    s.omega = om;
    s.kind = kind;
    s.sector = sector;
    s.internal = mask;
    if (sector->size() == 0) {
      s.vector = Eigen::VectorXcd::Zero(0);
    } else {
      const Eigen::MatrixXcd a = shifted(hb, om, grid.eta, kind);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
      s.vector = solve_one(lu, a, b, &s.residual);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<GfValue> gf_element(const GfContext& ctx, int K, int L, const std::vector<XYSolution>& x_K,
                                const std::vector<XYSolution>& y_L) {
  if (x_K.size() != y_L.size()) throw std::domain_error("X and Y solutions are on different grids");
  const Eigen::VectorXd u_hole = (ctx.bra.transpose() * abar_between(ctx, L, true, -1, 0)).transpose();
  const Eigen::VectorXd u_part = (ctx.bra.transpose() * abar_between(ctx, K, false, 1, 0)).transpose();
  std::vector<GfValue> out(x_K.size());
  for (std::size_t w = 0; w < x_K.size(); ++w) {
    if (x_K[w].orbital != K || y_L[w].orbital != L || x_K[w].kind != XYKind::X || y_L[w].kind != XYKind::Y)
      throw std::domain_error("X/Y solutions do not match the requested element");
    out[w].hole = u_hole.cast<cplx>().dot(x_K[w].vector);
    out[w].particle = u_part.cast<cplx>().dot(y_L[w].vector);
  }
  return out;
}

GreenFunctionResult gf_matrix(const GfContext& ctx, const std::vector<int>& probes, const FrequencyGrid& grid) {
  grid.validate();
  auto g = GreenFunctionResult::zeros(grid, probes);
  const auto np = probes.size();
  std::vector<Eigen::VectorXd> bx, by, u_hole, u_part;
  for (int p : probes) {
    bx.push_back(abar(ctx, p, false) * ctx.phi);
    by.push_back(abar(ctx, p, true) * ctx.phi);
    u_hole.push_back((ctx.bra.transpose() * abar_between(ctx, p, true, -1, 0)).transpose());
    u_part.push_back((ctx.bra.transpose() * abar_between(ctx, p, false, 1, 0)).transpose());
  }
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const double om = grid.omegas[w];
    std::vector<Eigen::VectorXcd> xs(np), ys(np);
    if (ctx.sector_Nm1->size()) {
      const Eigen::MatrixXcd a = shifted(ctx.hbar_Nm1, om, grid.eta, XYKind::X);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
      for (std::size_t k = 0; k < np; ++k) xs[k] = solve_one(lu, a, bx[k], nullptr);
    }
    if (ctx.sector_Np1->size()) {
      const Eigen::MatrixXcd a = shifted(ctx.hbar_Np1, om, grid.eta, XYKind::Y);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
      for (std::size_t k = 0; k < np; ++k) ys[k] = solve_one(lu, a, by[k], nullptr);
    }
    for (std::size_t k = 0; k < np; ++k)
      for (std::size_t l = 0; l < np; ++l) {
        const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
        if (ctx.sector_Nm1->size()) g.hole[w](kk, ll) = u_hole[l].cast<cplx>().dot(xs[k]);
        if (ctx.sector_Np1->size()) g.particle[w](kk, ll) = u_part[k].cast<cplx>().dot(ys[l]);
      }
  }
  for (auto& row : g.blocks) std::fill(row.begin(), row.end(), "full");
  return g;
}

EmbeddingAmplitudes embedding_amplitudes(const GfContext& ctx, const ActiveSpace& h) {
  h.validate(ctx.reference);
  EmbeddingAmplitudes a;
  std::tie(a.T_int, a.T_ext) = split(ctx.T, h);
  std::tie(a.S_int, a.S_ext) = split(s_from_lambda(ctx.lambda), h);
  a.lambda_int = split(ctx.lambda, h).first;
  return a;
}

std::vector<SplitValue> gf_split(const GfContext& ctx, int K, int L, const ActiveSpace& h,
                                 const AmplitudeSet& lambda_int, const AmplitudeSet& S_ext,
                                 const FrequencyGrid& grid) {
  h.validate(ctx.reference);
  const auto act = active_orbitals(h);
  if (!act.count(K) || !act.count(L))
    throw std::domain_error("internal/external split needs probes inside the active space");
  const auto xs = solve_xy(ctx, K, XYKind::X, grid, &h);
  const auto ys = solve_xy(ctx, L, XYKind::Y, grid, &h);
  const Eigen::VectorXd bra_int = left_reference_row(lambda_int, ctx.sector_N);
  const auto n = static_cast<Eigen::Index>(ctx.sector_N->size());
  const Eigen::MatrixXd es = nilpotent_exp(amp_matrix(S_ext, ctx.sector_N));
  const Eigen::VectorXd bra_ext = ((es - Eigen::MatrixXd::Identity(n, n)).transpose() * bra_int);
  const Eigen::MatrixXd a_dag = abar_between(ctx, L, true, -1, 0);
  const Eigen::MatrixXd a_ann = abar_between(ctx, K, false, 1, 0);
  const Eigen::VectorXcd ui_h = (a_dag.transpose() * bra_int).cast<cplx>();
  const Eigen::VectorXcd ui_p = (a_ann.transpose() * bra_int).cast<cplx>();
  const Eigen::VectorXcd ue_h = (a_dag.transpose() * bra_ext).cast<cplx>();
  const Eigen::VectorXcd ue_p = (a_ann.transpose() * bra_ext).cast<cplx>();
  std::vector<SplitValue> out(grid.size());
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const auto& x = xs[w];
    const auto& y = ys[w];
    out[w].internal = ui_h.dot(x.internal_part()) + ui_p.dot(y.internal_part());
    out[w].external = ue_h.dot(x.vector) + ue_p.dot(y.vector);
  }
  return out;
}

namespace {

struct EffectiveParts {
  Eigen::MatrixXd hext_m1, hext_p1;      // e^{-T_ext} H e^{T_ext} - E on N-1, N+1
  Eigen::VectorXd u_hole, v_hole;        // masked row / column for the ionization part
  Eigen::VectorXd u_part, v_part;        // and for the attachment part
};

EffectiveParts effective_parts(const GfContext& ctx, int K, int L, const ActiveSpace& h,
                               const EmbeddingAmplitudes& amps) {
  const auto sN = ctx.sector_N, sm = ctx.sector_Nm1, sp = ctx.sector_Np1;
  const auto q_m = internal_mask(ctx.reference, *sm, h);
  const auto q_p = internal_mask(ctx.reference, *sp, h);
  if (!any_true(q_m) || !any_true(q_p))
    throw std::domain_error("active space supports no internal N-1 or N+1 determinants");
  const auto p_N = internal_mask(ctx.reference, *sN, h);

  const Eigen::MatrixXd te_N = amp_matrix(amps.T_ext, sN), te_m = amp_matrix(amps.T_ext, sm),
                        te_p = amp_matrix(amps.T_ext, sp);
  const Eigen::MatrixXd ti_N = amp_matrix(amps.T_int, sN);
  const Eigen::MatrixXd exp_ti = nilpotent_exp(ti_N), exp_mti = nilpotent_exp(-ti_N);
  const Eigen::VectorXd ket = masked(Eigen::VectorXd(exp_ti * ctx.phi), p_N);
  const Eigen::VectorXd bra0 = (ctx.phi.transpose() * nilpotent_exp(amp_matrix(amps.S_int, sN)) * exp_mti).transpose();
  const Eigen::VectorXd bra = masked(bra0, p_N);
  const Eigen::MatrixXd w = exp_ti * nilpotent_exp(amp_matrix(amps.S_ext, sN)) * exp_mti;
  const Eigen::VectorXd bra_w = (bra.transpose() * w).transpose();

  auto dress = [&](int orb, bool dagger, SectorPtr from, const Eigen::MatrixXd& t_from, SectorPtr to,
                   const Eigen::MatrixXd& t_to) {
    return Eigen::MatrixXd(nilpotent_exp(-t_to) * ladder(orb, dagger, from, to) * nilpotent_exp(t_from));
  };
  auto hext = [&](const Eigen::MatrixXd& hh, const Eigen::MatrixXd& t) {
    const auto k = hh.rows();
    return Eigen::MatrixXd(nilpotent_exp(-t) * hh * nilpotent_exp(t) - ctx.energy * Eigen::MatrixXd::Identity(k, k));
  };
  EffectiveParts e;
  e.hext_m1 = hext(ctx.h_Nm1, te_m);
  e.hext_p1 = hext(ctx.h_Np1, te_p);
  e.u_hole = masked(Eigen::VectorXd(dress(L, true, sm, te_m, sN, te_N).transpose() * bra_w), q_m);
  e.v_hole = masked(Eigen::VectorXd(dress(K, false, sN, te_N, sm, te_m) * ket), q_m);
  e.u_part = masked(Eigen::VectorXd(dress(K, false, sp, te_p, sN, te_N).transpose() * bra_w), q_p);
  e.v_part = masked(Eigen::VectorXd(dress(L, true, sN, te_N, sp, te_p) * ket), q_p);
  return e;
}

}  // namespace

std::vector<GfValue> gf_effective(const GfContext& ctx, int K, int L, const ActiveSpace& h,
                                  const EmbeddingAmplitudes& amps, const FrequencyGrid& grid) {
  grid.validate();
  const auto e = effective_parts(ctx, K, L, h, amps);
  std::vector<GfValue> out(grid.size());
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const double om = grid.omegas[w];
    const Eigen::MatrixXcd am = shifted(e.hext_m1, om, grid.eta, XYKind::X);
    const Eigen::MatrixXcd ap = shifted(e.hext_p1, om, grid.eta, XYKind::Y);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lm(am), lp(ap);
    out[w].hole = e.u_hole.cast<cplx>().dot(solve_one(lm, am, e.v_hole, nullptr));
    out[w].particle = e.u_part.cast<cplx>().dot(solve_one(lp, ap, e.v_part, nullptr));
  }
  return out;
}

std::vector<Pole> CCPoleSet::all() const {
  std::vector<Pole> out = hole;
  out.insert(out.end(), particle.begin(), particle.end());
  return consolidate_poles(out);
}

CCPoleSet cc_poles(const GfContext& ctx, int K) {
  CCPoleSet ps;
  const Eigen::VectorXd u_hole = (ctx.bra.transpose() * abar_between(ctx, K, true, -1, 0)).transpose();
  const Eigen::VectorXd u_part = (ctx.bra.transpose() * abar_between(ctx, K, false, 1, 0)).transpose();
  ps.hole = resolvent_poles(ctx.hbar_Nm1, u_hole, abar(ctx, K, false) * ctx.phi, -1.0);
  ps.particle = resolvent_poles(ctx.hbar_Np1, u_part, abar(ctx, K, true) * ctx.phi, 1.0);
  return ps;
}

CCPoleSet gf_effective_poles(const GfContext& ctx, int K, const ActiveSpace& h, const EmbeddingAmplitudes& amps) {
  const auto e = effective_parts(ctx, K, K, h, amps);
  CCPoleSet ps;
  ps.hole = resolvent_poles(e.hext_m1, e.u_hole, e.v_hole, -1.0);
  ps.particle = resolvent_poles(e.hext_p1, e.u_part, e.v_part, 1.0);
  return ps;
}

std::vector<double> hbar_spectrum(const GfContext& ctx, XYKind kind) {
  const Eigen::MatrixXd& a = kind == XYKind::X ? ctx.hbar_Nm1 : ctx.hbar_Np1;
  std::vector<double> out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  for (Eigen::Index k = 0; k < a.rows(); ++k) out.push_back(es.eigenvalues()[k].real());
  std::sort(out.begin(), out.end());
  return out;
}

GreenFunctionResult gf_block_matrix(const GfContext& ctx, const std::vector<EmbeddingCenter>& centers,
                                    const std::vector<int>& environment, const FrequencyGrid& grid,
                                    bool with_split) {
  if (centers.empty()) throw std::domain_error("at least one embedded center is required");
  std::vector<int> probes;
  std::vector<int> owner;  // center index, -1 for environment
  std::set<int> seen;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int p : centers[c].probes) {
      if (!seen.insert(p).second) throw std::domain_error("probe partitions overlap");
      probes.push_back(p);
      owner.push_back(static_cast<int>(c));
    }
  for (int p : environment) {
    if (!seen.insert(p).second) throw std::domain_error("probe partitions overlap");
    probes.push_back(p);
    owner.push_back(-1);
  }
  auto g = gf_matrix(ctx, probes, grid);
  const bool single = centers.size() == 1;
  for (std::size_t k = 0; k < probes.size(); ++k)
    for (std::size_t l = 0; l < probes.size(); ++l) {
      const int a = owner[k], b = owner[l];
      std::string label;
      if (single) {
        label = a == 0 ? (b == 0 ? "emb" : "env1") : (b == 0 ? "env2" : "env3");
      } else {
        label = (a >= 0 && a == b) ? "emb" + std::to_string(a + 1) : "env";
      }
      g.blocks[k][l] = label;
    }
  if (with_split) {
    const auto np = static_cast<Eigen::Index>(probes.size());
    std::vector<Eigen::MatrixXcd> internal(grid.size(), Eigen::MatrixXcd::Zero(np, np));
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const auto& h = centers[c].subsystem.active;
      const auto amps = embedding_amplitudes(ctx, h);
      for (std::size_t k = 0; k < probes.size(); ++k)
        for (std::size_t l = 0; l < probes.size(); ++l) {
          if (owner[k] != static_cast<int>(c) || owner[l] != static_cast<int>(c)) continue;
          const auto sv = gf_split(ctx, probes[k], probes[l], h, amps.lambda_int, amps.S_ext, grid);
          for (std::size_t w = 0; w < grid.size(); ++w)
            internal[w](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = sv[w].internal;
        }
    }
    std::vector<Eigen::MatrixXcd> external(grid.size());
    for (std::size_t w = 0; w < grid.size(); ++w) external[w] = g.total(w) - internal[w];
    g.internal = std::move(internal);
    g.external = std::move(external);
  }
  return g;
}

}  // namespace sescc
