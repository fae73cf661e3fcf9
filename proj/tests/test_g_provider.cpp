#include <algorithm>
#include <gtest/gtest.h>

#include <cmath>

#include "lyapkit/g_provider.hpp"

using namespace lyapkit;

TEST(ReducedG, PowerReaction) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{3.0, 2.0});
  EXPECT_NEAR(reduced_g(s, 0.5, 0.2, 0.5, {1.0, 0.0}), 2.0 * std::log(2.0), 1e-10);
}

TEST(ReducedG, InverseMcf) {
  const ProblemSpec s = instantiate(InverseMcf{});
  EXPECT_NEAR(reduced_g(s, 0.5, 0.2, 1.0, {0.0, 0.0}), std::log(0.5), 1e-10);
}

TEST(ReducedG, ConstantReactionKeepsG0) {
  ProblemSpec s = instantiate(QuasilinearGradient{{}, Polynomial{{1.0}}});
  EXPECT_DOUBLE_EQ(reduced_g(s, 0.5, 0.2, 3.0, {1.0, 0.4}), 0.4);
}

TEST(ReducedG, ThrowsAcrossReactionZero) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{3.0, 1.0});
  EXPECT_THROW(reduced_g(s, 0.5, 0.2, -1.0, {1.0, 0.0}), CharacteristicsError);
}

TEST(ReducedG, PorousMediumCarriesUDependence) {
  // f_qu != 0: source -F0_p - p f_qu = 4p - 2p = 2p, F0 = -2 p^2, dg/dp = -1/p.
  const ProblemSpec s = instantiate(PorousMedium{2.0});
  EXPECT_NEAR(reduced_g(s, 0.5, 0.7, 0.25, {1.0, 0.0}), std::log(4.0), 1e-8);
}

TEST(GProvider, AnalyticNormalized) {
  EXPECT_NEAR(GProvider::from_oracle(PorousMedium{2.0}, GNormalization{1.0, 0.0})(0.5, 0.5, 0.25), std::log(4.0),
              1e-14);
  EXPECT_NEAR(GProvider::from_oracle(McfPoly{1.0}, GNormalization{0.6, 0.3})(0.1, 0.2, 0.6), 0.3, 1e-14);
  EXPECT_NEAR(GProvider::from_oracle(InverseMcf{}, GNormalization{2.0, 0.7})(0.1, 0.2, 2.0), 0.7, 1e-14);
}

TEST(GProvider, TabulatedHeatIsZero) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 0.0});
  TabulationControls c;
  c.workers = 2;
  const GProvider g = GProvider::tabulate(s, {{-0.5, 0.0, 0.5}, {-1.0, 0.0, 1.0}}, c);
  EXPECT_EQ(g.kind(), GProvider::Kind::tabulated);
  for (double x : {0.1, 0.5, 0.9})
    for (double p : {-0.7, 0.2, 0.9}) EXPECT_EQ(g(x, 0.1, p), 0.0);
}

TEST(GProvider, TabulatedReproducesSamples) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 1.0});
  TabulationControls c;
  std::vector<CharTrajectory> traj;
  const GProvider g = GProvider::tabulate(s, {{0.0}, {0.5, 1.0, 2.0}}, c, &traj);
  ASSERT_EQ(traj.size(), 3u);
  for (const auto& t : traj)
    for (std::size_t k = 0; k < t.states.size(); k += 7) {
      const auto& st = t.states[k];
      EXPECT_DOUBLE_EQ(g(st.x, st.u, st.p), st.g);
    }
}

TEST(GProvider, TabulatedMatchesReducedOnTrajectory) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{3.0, 1.0});
  TabulationControls c;
  c.characteristics.max_sample_dtau = 0.01;
  std::vector<CharTrajectory> traj;
  const GProvider g = GProvider::tabulate(s, {{0.0, 0.5}, {0.5, 1.0, 1.5}}, c, &traj);
  // Seed p0 = 1 sits at index 1 (u0 outer, p0 inner).
  const auto& t = traj[1];
  std::vector<double> errors;
  for (std::size_t k = 1; k + 1 < t.states.size(); k += 5) {
    const auto& a = t.states[k];
    const auto& b = t.states[k + 1];
    const double x = 0.5 * (a.x + b.x), u = 0.5 * (a.u + b.u), p = 0.5 * (a.p + b.p);
    const double err = std::abs(g(x, u, p) - std::log(1.0 / p));
    // Inverse-distance weighting is first order: stay inside the bracket spread.
    EXPECT_LE(err, std::abs(a.g - b.g));
    errors.push_back(err);
  }
  std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
  EXPECT_LT(errors[errors.size() / 2], 1e-4);
}

TEST(GProvider, CoverageAndSnapshot) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 1.0});
  TabulationControls c;
  c.box = {0, 1, 0, 1, 0.5, 1.0, 6};
  const GProvider thin = GProvider::tabulate(s, {{0.5}, {1.0}}, c);
  EXPECT_TRUE(thin.low_coverage());
  EXPECT_LT(thin.coverage(), c.coverage_min);
  thin(0.5, 50.0, 0.5);
  EXPECT_EQ(thin.extrapolations(), 1u);

  const GProvider restored = GProvider::from_snapshot(thin.snapshot());
  EXPECT_EQ(restored.sample_count(), thin.sample_count());
  EXPECT_DOUBLE_EQ(restored(0.4, 0.6, 0.8), thin(0.4, 0.6, 0.8));
  EXPECT_DOUBLE_EQ(restored.coverage(), thin.coverage());
}

TEST(GProvider, TabulationIsDeterministicAcrossWorkerCounts) {
  const ProblemSpec s = instantiate(McfPoly{1.0});
  TabulationControls c;
  c.workers = 1;
  const GProvider a = GProvider::tabulate(s, {{-0.5, 0.5}, {0.5, 1.0, 1.5}}, c);
  c.workers = 4;
  const GProvider b = GProvider::tabulate(s, {{-0.5, 0.5}, {0.5, 1.0, 1.5}}, c);
  EXPECT_EQ(a.snapshot(), b.snapshot());
}
