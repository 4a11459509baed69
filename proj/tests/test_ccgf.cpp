#include "support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace sescc;

namespace {

double nearest(double x, const std::vector<Pole>& poles) {
  double best = 1e9;
  for (const auto& p : poles) best = std::min(best, std::abs(p.position - x));
  return best;
}

const Pole* find_pole(double x, const std::vector<Pole>& poles, double tol) {
  for (const auto& p : poles)
    if (std::abs(p.position - x) < tol) return &p;
  return nullptr;
}

std::vector<double> positions(const std::vector<Pole>& poles) {
  std::vector<double> v;
  for (const auto& p : poles) v.push_back(p.position);
  return v;
}

}  // namespace

TEST(Abar, EqualsSimilarityTransformedLadder) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  for (int p = 0; p < 6; ++p)
    for (bool dag : {false, true})
      EXPECT_LT((abar(ctx, p, dag) - dressed_ladder(ctx, p, dag, s.cc.T)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Ccgf, PolesMatchLehmann) {
  for (double U : {1.0, 2.0, 4.0}) {
    const auto s = fixture::three_site(U, -U / 2);
    const auto ctx = fixture::context(s);
    const auto ex = fixture::exact(s);
    for (int k = 0; k < 6; ++k) {
      const auto cc = cc_poles(ctx, k).all();
      const auto ed = lehmann_poles(ex.n, ex.nm1, ex.np1, k).all();
      for (const auto& q : ed) {
        const Pole* m = find_pole(q.position, cc, 1e-6);
        ASSERT_NE(m, nullptr) << "U=" << U << " orbital " << k << " pole " << q.position;
        EXPECT_NEAR(m->weight, q.weight, 1e-8);
      }
      for (const auto& q : cc)
        if (std::abs(q.weight) > 1e-8) EXPECT_LT(nearest(q.position, ed), 1e-6);
    }
  }
}

TEST(Ccgf, MatrixMatchesLehmannOnGrid) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto ex = fixture::exact(s);
  const auto grid = FrequencyGrid::uniform(-6.0, 6.0, 0.25, 0.1);
  const std::vector<int> probes{0, 1, 4};
  const auto g = gf_matrix(ctx, probes, grid);
  const auto ref = lehmann_gf(ex.n, ex.nm1, ex.np1, probes, grid);
  for (std::size_t w = 0; w < grid.size(); ++w)
    EXPECT_LT((g.total(w) - ref.total(w)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ccgf, ElementFromSolvesAgreesWithMatrix) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto grid = FrequencyGrid::uniform(-2.0, 2.0, 0.5, 0.05);
  const auto x = solve_xy(ctx, 1, XYKind::X, grid);
  const auto y = solve_xy(ctx, 0, XYKind::Y, grid);
  const auto vals = gf_element(ctx, 1, 0, x, y);
  const auto g = gf_matrix(ctx, {1, 0}, grid);
  for (std::size_t w = 0; w < grid.size(); ++w) {
    EXPECT_LT(std::abs(vals[w].total() - g.element(w, 0, 1)), 1e-12);
    EXPECT_LT(x[w].residual, 1e-10);
  }
  EXPECT_THROW(gf_element(ctx, 0, 0, x, y), std::domain_error);
}

TEST(Ccgf, SpectralSumRule) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  std::vector<double> all;
  for (int k = 0; k < 6; ++k)
    for (double p : positions(cc_poles(ctx, k).all())) all.push_back(p);
  const auto grid = fixture::grid_around(all);
  const std::vector<int> probes{0, 1, 2, 3, 4, 5};
  const Eigen::MatrixXd a = spectral_function(gf_matrix(ctx, probes, grid));
  EXPECT_GT(a.minCoeff(), -1e-10);
  for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(integrate_spectrum(grid, a.row(k).transpose()), 1.0, 0.02);
}

TEST(Ccgf, PeakHeightScalesInverselyWithEta) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto poles = cc_poles(ctx, 1).all();
  const auto top = *std::max_element(poles.begin(), poles.end(),
                                     [](const Pole& a, const Pole& b) { return a.weight < b.weight; });
  FrequencyGrid g1{{top.position}, 0.01}, g2{{top.position}, 0.02};
  const double h1 = spectral_function(gf_matrix(ctx, {1}, g1))(0, 0);
  const double h2 = spectral_function(gf_matrix(ctx, {1}, g2))(0, 0);
  EXPECT_NEAR(h1 / h2, 2.0, 0.02);
  EXPECT_NEAR(h1, top.weight / (std::numbers::pi * 0.01), 0.01 * h1);
}

TEST(Split, InternalPlusExternalIsTotal) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto grid = FrequencyGrid::uniform(-7.0, 7.0, 0.01, 0.05);
  for (const ActiveSpace& h : {ActiveSpace{{0}, {1}}, ActiveSpace{{0, 4}, {1, 5}}}) {
    const auto amps = embedding_amplitudes(ctx, h);
    const auto g = gf_matrix(ctx, {0, 1}, grid);
    const std::vector<int> probes{0, 1};
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t l = 0; l < 2; ++l) {
        const auto sv = gf_split(ctx, probes[k], probes[l], h, amps.lambda_int, amps.S_ext, grid);
        double err = 0.0;
        for (std::size_t w = 0; w < grid.size(); ++w) err = std::max(err, std::abs(sv[w].total() - g.element(w, k, l)));
        EXPECT_LT(err, 1e-10);
      }
    EXPECT_THROW(gf_split(ctx, 2, 1, h, amps.lambda_int, amps.S_ext, grid), std::domain_error);
  }
}

TEST(Split, XYPartsPartitionTheSolution) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const ActiveSpace h{{0}, {1}};
  const auto grid = FrequencyGrid::uniform(-1.0, 1.0, 0.5, 0.05);
  for (const auto& x : solve_xy(ctx, 1, XYKind::X, grid, &h)) {
    EXPECT_LT((x.internal_part() + x.external_part() - x.vector).norm(), 1e-15);
    EXPECT_GT(x.external_part().norm(), 1e-6);
  }
}

TEST(Effective, FullActiveSpaceReproducesCcgf) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto h = ActiveSpace::full(s.problem.reference);
  const auto amps = embedding_amplitudes(ctx, h);
  const auto grid = FrequencyGrid::uniform(-6.0, 6.0, 0.1, 0.05);
  const auto g = gf_matrix(ctx, {1, 4}, grid);
  const auto v = gf_effective(ctx, 1, 4, h, amps, grid);
  for (std::size_t w = 0; w < grid.size(); ++w) EXPECT_LT(std::abs(v[w].total() - g.element(w, 0, 1)), 1e-10);
}

TEST(Effective, PolesLieInHbarSpectrum) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  std::vector<Pole> spectrum;
  for (double e : hbar_spectrum(ctx, XYKind::X)) spectrum.push_back({-e, 1.0});
  for (double e : hbar_spectrum(ctx, XYKind::Y)) spectrum.push_back({e, 1.0});
  for (const ActiveSpace& h : {ActiveSpace{{0}, {1}}, ActiveSpace{{0, 3}, {2, 5}}, ActiveSpace{{4}, {5}}}) {
    const auto amps = embedding_amplitudes(ctx, h);
    std::vector<int> probes(h.R.begin(), h.R.end());
    probes.insert(probes.end(), h.S.begin(), h.S.end());
    for (int k : probes) {
      const auto poles = gf_effective_poles(ctx, k, h, amps).all();
      EXPECT_FALSE(poles.empty());
      for (const auto& p : poles) EXPECT_LT(nearest(p.position, spectrum), 1e-8);
    }
  }
}

TEST(Effective, EmptyInternalSectorRejected) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const ActiveSpace h{{0}, {}};
  const auto grid = FrequencyGrid::uniform(0.0, 1.0, 0.5, 0.05);
  EXPECT_THROW(gf_effective(ctx, 1, 1, h, embedding_amplitudes(ctx, h), grid), std::domain_error);
}

TEST(BlockMatrix, LabelsAndSplit) {
  const auto& s = fixture::paper();
  const auto ctx = fixture::context(s);
  const auto grid = FrequencyGrid::uniform(-2.0, 2.0, 0.5, 0.05);
  const EmbeddingCenter c{SubsystemSpec{ActiveSpace{{0}, {1}}, "main"}, {0, 1}};
  const auto g = gf_block_matrix(ctx, {c}, {4}, grid, true);
  EXPECT_EQ(g.blocks[0][1], "emb");
  EXPECT_EQ(g.blocks[0][2], "env1");
  EXPECT_EQ(g.blocks[2][0], "env2");
  EXPECT_EQ(g.blocks[2][2], "env3");
  ASSERT_TRUE(g.internal && g.external);
  for (std::size_t w = 0; w < grid.size(); ++w) {
    EXPECT_LT(((*g.internal)[w] + (*g.external)[w] - g.total(w)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ((*g.internal)[w](2, 2), cplx(0.0));
  }
  EXPECT_THROW(gf_block_matrix(ctx, {c}, {1}, grid), std::domain_error);
  EXPECT_THROW(gf_block_matrix(ctx, {}, {1}, grid), std::domain_error);
  const EmbeddingCenter d{SubsystemSpec{ActiveSpace{{4}, {5}}, "other"}, {4, 5}};
  const auto g2 = gf_block_matrix(ctx, {c, d}, {}, grid);
  EXPECT_EQ(g2.blocks[0][0], "emb1");
  EXPECT_EQ(g2.blocks[3][2], "emb2");
  EXPECT_EQ(g2.blocks[0][3], "env");
}

TEST(Grid, Validation) {
  EXPECT_THROW(FrequencyGrid::uniform(1.0, 0.0, 0.1, 0.05), std::domain_error);
  FrequencyGrid g{{0.0, 0.0}, 0.05};
  EXPECT_THROW(g.validate(), std::domain_error);
  FrequencyGrid h{{0.0}, 0.0};
  EXPECT_THROW(h.validate(), std::domain_error);
  EXPECT_EQ(FrequencyGrid::uniform(-1.0, 1.0, 0.5, 0.05).size(), 5U);
}

TEST(Grid, PeakFinderRefinesLorentzian) {
  const auto grid = FrequencyGrid::uniform(-2.0, 2.0, 0.01, 0.05);
  Eigen::VectorXd a(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const double x = grid.omegas[w];
    a[static_cast<Eigen::Index>(w)] = 0.05 / ((x - 0.3333) * (x - 0.3333) + 0.0025) +
                                      0.02 / ((x + 1.2) * (x + 1.2) + 0.0025);
  }
  const auto peaks = find_peaks(grid, a, 1.0);
  ASSERT_EQ(peaks.size(), 2U);
  EXPECT_NEAR(peaks[0], -1.2, 1e-3);
  EXPECT_NEAR(peaks[1], 0.3333, 1e-3);
}

TEST(Nsl, DecoupledSubsystemsSeparate) {
  // resolvents near poles amplify amplitude errors by ~1/eta^2
  SolverConfig tight;
  tight.tol = 1e-13;
  const auto c = fixture::composite(0.0);
  const auto s = fixture::solve(c.op, c.reference, c.spins, -1, tight);
  auto mixed = [](const Excitation& e) {
    bool a = false, b = false;
    for (int p : e.holes) (p < 4 ? a : b) = true;
    for (int p : e.particles) (p < 4 ? a : b) = true;
    return a && b;
  };
  const auto s_ext = split(s.S, c.active_a).second;
  ASSERT_FALSE(s_ext.amplitudes.empty());
  for (const auto& [e, v] : s_ext.amplitudes)
    if (mixed(e)) EXPECT_LT(std::abs(v), 1e-9) << e.label();

  const auto ctx = fixture::context(s);
  const auto grid = FrequencyGrid::uniform(-5.0, 5.0, 0.05, 0.05);
  for (int k : {0, 1, 2, 3})
    for (auto kind : {XYKind::X, XYKind::Y})
      for (const auto& x : solve_xy(ctx, k, kind, grid, &c.active_a)) EXPECT_LT(x.external_part().norm(), 1e-9);

  const std::vector<int> probes{1, 3, 5, 7};
  const auto g = gf_matrix(ctx, probes, grid);
  const auto sa = fixture::solve(build_siam(c.a), Determinant::from_string("1010"), siam_layout(c.a).spins(), -1, tight);
  const auto ga = gf_matrix(fixture::context(sa), {1, 3}, grid);
  const auto amps = embedding_amplitudes(ctx, c.active_a);
  const auto eff = gf_effective(ctx, 1, 1, c.active_a, amps, grid);
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const auto t = g.total(w);
    EXPECT_LT(t.block(0, 2, 2, 2).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(t.block(2, 0, 2, 2).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((t.block(0, 0, 2, 2) - ga.total(w)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(std::abs(eff[w].total() - ga.element(w, 0, 0)), 1e-9);
  }
}

TEST(Nsl, CouplingMixesSubsystems) {
  const auto c = fixture::composite(0.3);
  const auto s = fixture::solve(c.op, c.reference, c.spins);
  const auto g = gf_matrix(fixture::context(s), {1, 5}, FrequencyGrid{{0.1}, 0.05});
  EXPECT_GT(std::abs(g.element(0, 0, 1)), 1e-4);
}
