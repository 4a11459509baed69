#include "sescc/amplitude_io.hpp"
#include "sescc/ccsolver.hpp"
#include "sescc/model.hpp"

#include "support/oracle_values.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace sescc;

namespace {

AmplitudeSet random_set(std::mt19937& rng, AmplitudeKind kind, const Determinant& ref,
                        const std::vector<Excitation>& manifold, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  AmplitudeSet a{kind, ref, {}};
  for (const auto& e : manifold) a.amplitudes[e] = u(rng);
  return a;
}

std::vector<Excitation> default_manifold() {
  return enumerate_excitations(paper_reference(), 3, siam_layout(paper_siam()).spins());
}

}  // namespace

TEST(Excitation, LabelsParseAndOrder) {
  const auto e = Excitation::parse("0,3->1,5");
  EXPECT_EQ(e.holes, (std::vector<int>{0, 3}));
  EXPECT_EQ(e.particles, (std::vector<int>{1, 5}));
  EXPECT_EQ(e.label(), "0,3->1,5");
  EXPECT_EQ(e.rank(), 2);
  EXPECT_LT(Excitation::parse("4->5"), e);
  EXPECT_THROW(Excitation::parse("0,3->1"), std::domain_error);
  EXPECT_THROW(Excitation::parse("3,0->1,5"), std::domain_error);
  EXPECT_EQ(Excitation::between(paper_reference(), Determinant::from_string("010011")), Excitation::parse("0,3->1,5"));
}

TEST(Excitation, SpinConservingManifold) {
  const auto m = default_manifold();
  ASSERT_EQ(m.size(), 8U);
  EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
  for (const auto& label : oracle::kSignatures)
    EXPECT_TRUE(std::count(m.begin(), m.end(), Excitation::parse(std::string(label))) == 1) << label;
}

TEST(Excitation, AllExcitationsWithoutSpinFilter) {
  // rank 1: 3*3, rank 2: 3*3, rank 3: 1
  EXPECT_EQ(enumerate_excitations(paper_reference(), 3).size(), 19U);
}

TEST(ActiveSpaceTest, ValidationAndContainment) {
  const ActiveSpace h{{0}, {1}};
  EXPECT_NO_THROW(h.validate(paper_reference()));
  EXPECT_TRUE(h.contains(Excitation::parse("0->1")));
  EXPECT_FALSE(h.contains(Excitation::parse("0->2")));
  EXPECT_THROW((ActiveSpace{{1}, {2}}).validate(paper_reference()), std::domain_error);
  EXPECT_THROW((ActiveSpace{{0}, {3}}).validate(paper_reference()), std::domain_error);
  const auto full = ActiveSpace::full(paper_reference());
  EXPECT_EQ(full.R, (std::set<int>{0, 3, 4}));
  EXPECT_EQ(full.S, (std::set<int>{1, 2, 5}));
}

TEST(Split, PartitionsEntries) {
  std::mt19937 rng(3);
  const auto t = random_set(rng, AmplitudeKind::T, paper_reference(), default_manifold(), 0.5);
  const ActiveSpace h{{0, 3}, {1, 5}};
  const auto [in, ex] = split(t, h);
  EXPECT_EQ(in.amplitudes.size() + ex.amplitudes.size(), t.amplitudes.size());
  for (const auto& [e, v] : in.amplitudes) EXPECT_TRUE(h.contains(e));
  for (const auto& [e, v] : ex.amplitudes) EXPECT_FALSE(h.contains(e));
  EXPECT_EQ(merged(in, ex), t);
}

TEST(ExpAlgebra, NilpotentExponentialInverts) {
  std::mt19937 rng(5);
  const auto sector = build_spin_sector(siam_layout(paper_siam()).spins(), 1, 2);
  const auto t = random_set(rng, AmplitudeKind::T, paper_reference(), default_manifold(), 1.0);
  const Eigen::MatrixXd x = excitation_matrix(t, sector).dense();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(x.rows(), x.cols());
  EXPECT_LT((nilpotent_exp(x) * nilpotent_exp(-x) - id).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((exp_map(t, sector).dense() - nilpotent_exp(x)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(nilpotent_exp(id), std::domain_error);
  EXPECT_THROW(exp_map(with_kind(t, AmplitudeKind::Lambda), sector), std::domain_error);
}

TEST(ExpAlgebra, LambdaIsAdjointOfExcitation) {
  std::mt19937 rng(11);
  const auto sector = build_spin_sector(siam_layout(paper_siam()).spins(), 1, 2);
  const auto t = random_set(rng, AmplitudeKind::T, paper_reference(), default_manifold(), 1.0);
  const Eigen::MatrixXd x = excitation_matrix(t, sector).dense();
  const Eigen::MatrixXd y = excitation_matrix(with_kind(t, AmplitudeKind::S), sector).dense();
  EXPECT_LT((x.transpose() - y).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExpAlgebra, ExpAndLogCoefficientsAreInverse) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_set(rng, AmplitudeKind::T, paper_reference(), default_manifold(), 1.0);
    const auto c = exp_coefficients(t, AmplitudeKind::T);
    EXPECT_LT(max_difference(log_coefficients(c, AmplitudeKind::T), t), 1e-12);
  }
}

TEST(ExpAlgebra, ExpCoefficientsMatchDenseExponential) {
  std::mt19937 rng(17);
  const auto sector = build_sector(6, 3);
  const auto manifold = enumerate_excitations(paper_reference(), 3);
  const auto t = random_set(rng, AmplitudeKind::T, paper_reference(), manifold, 0.7);
  const Eigen::VectorXd psi = exp_map(t, sector).dense().col(static_cast<Eigen::Index>(sector->index_of(paper_reference())));
  const ExcitationSpace space(paper_reference(), manifold, sector);
  const Eigen::VectorXd want = space.project(psi);
  const auto got = exp_coefficients(t, AmplitudeKind::T);
  for (std::size_t k = 0; k < manifold.size(); ++k)
    EXPECT_NEAR(got.at(manifold[k]), want[static_cast<Eigen::Index>(k)], 1e-12) << manifold[k].label();
}

TEST(LambdaS, RoundTripOnRandomSets) {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng, AmplitudeKind::S, paper_reference(), default_manifold(), 1.0);
    const auto lam = lambda_from_s(s);
    EXPECT_EQ(lam.kind, AmplitudeKind::Lambda);
    EXPECT_LT(max_difference(s_from_lambda(lam), s), 1e-12);
    EXPECT_LT(max_difference(lambda_from_s(s_from_lambda(lam)), lam), 1e-12);
  }
}

TEST(LambdaS, SinglesCoincideDoublesDiffer) {
  std::mt19937 rng(23);
  const auto s = random_set(rng, AmplitudeKind::S, paper_reference(), default_manifold(), 1.0);
  const auto lam = lambda_from_s(s);
  for (const auto& [e, v] : s.amplitudes)
    if (e.rank() == 1) {
      EXPECT_DOUBLE_EQ(lam.at(e), v);
    }
}

TEST(ClusterAnalysis, FciStateGivesExactAmplitudes) {
  const auto p = paper_siam();
  const auto ed = exact_diagonalize(build_siam(p), reference_sector(paper_reference(), siam_layout(p).spins()));
  const auto t = cluster_analyze_fci(ed.state(0), paper_reference());
  for (std::size_t k = 0; k < oracle::kT.size(); ++k)
    EXPECT_NEAR(t.at(Excitation::parse(std::string(oracle::kSignatures[k]))), oracle::kT[k], 1e-10);
}

TEST(AmplitudeIo, RoundTripAndValidation) {
  std::mt19937 rng(29);
  const auto t = random_set(rng, AmplitudeKind::Lambda, paper_reference(), default_manifold(), 1.0);
  EXPECT_EQ(load_amplitudes(dump_amplitudes(t)), t);
  const auto j = to_json(t, 9);
  EXPECT_EQ(j["kind"], "Lambda");
  EXPECT_EQ(j["reference"], "100110");
  EXPECT_LT(max_difference(amplitudes_from_json(j), t), 1e-9);

  auto bad = to_json(t);
  bad["entries"][0]["holes"] = {1};
  EXPECT_THROW(amplitudes_from_json(bad), std::domain_error);
  auto dup = to_json(t);
  dup["entries"].push_back(dup["entries"][0]);
  EXPECT_THROW(amplitudes_from_json(dup), std::domain_error);
  EXPECT_THROW(load_amplitudes("{not json"), std::domain_error);
}

TEST(AmplitudeIo, RoundSignificant) {
  EXPECT_DOUBLE_EQ(round_significant(-3.75725429941, 8), -3.7572543);
  EXPECT_DOUBLE_EQ(round_significant(0.000123456789, 3), 0.000123);
  EXPECT_DOUBLE_EQ(round_significant(0.0, 5), 0.0);
}
