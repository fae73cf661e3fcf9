#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lyapkit/closed_form.hpp"
#include "lyapkit/lagrangian.hpp"
#include "oracles.hpp"

using namespace lyapkit;

namespace {

Lagrangian analytic(const BuiltinModel& m, const LagrangianOptions& o = {}) {
  return Lagrangian::build(instantiate(m), GProvider::from_oracle(m), o);
}

Lagrangian analytic(const ModelDescriptor& d, const LagrangianOptions& o = {}) {
  return Lagrangian::build(instantiate(d), GProvider::from_oracle(d.model), o);
}

QuasilinearGradient rho_pure(double rho) {
  QuasilinearGradient m;
  m.a = {DiffusionLaw::Kind::rho_laplacian, rho};
  return m;
}

}  // namespace

TEST(Lagrangian, RhoLaplacianDoubleIntegral) {
  const Lagrangian lag = analytic(rho_pure(3.0));
  EXPECT_EQ(lag.info().p_base, 0.0);
  EXPECT_NEAR(lag.L(0.5, 0.2, 1.0), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(lag.L(0.5, 0.2, -1.7), std::pow(1.7, 3) / 3.0, 1e-9);
}

TEST(Lagrangian, McfDoubleIntegral) {
  QuasilinearGradient m;
  m.a = {DiffusionLaw::Kind::mcf, 0.0};
  const Lagrangian lag = analytic(m);
  EXPECT_NEAR(lag.L(0.5, 0.2, 1.0), std::sqrt(2.0) - 1.0, 1e-9);
}

TEST(Lagrangian, AtBasePointOnlyL0AndL1Remain) {
  ModelDescriptor d;
  d.model = QuasilinearGradient{{}, Polynomial{{0.5, 1.0}}};
  d.bc_left = BoundaryCondition::robin_polynomial({0.0, 1.0});
  const Lagrangian lag = analytic(d);
  const double base = lag.base_for(1.0);
  for (double u : {-0.6, 0.0, 0.3, 0.9}) {
    EXPECT_NEAR(lag.L(0.4, u, base), lag.l0(0.4, u) + lag.l1(0.4, u) * base, 1e-12);
    EXPECT_NEAR(lag.Lp(0.4, u, base), lag.l1(0.4, u), 1e-12);
  }
}

TEST(Lagrangian, PorousMediumSecondDerivative) {
  const Lagrangian lag = analytic(PorousMedium{2.0});
  EXPECT_TRUE(lag.info().singular);
  EXPECT_EQ(lag.info().p_base, 1.0);
  EXPECT_NEAR(lag.Lpp(0.5, 0.5, 0.25), 4.0, 1e-12);
}

TEST(Lagrangian, McfPolySecondDerivativeMatchesPrintedForm) {
  const Lagrangian lag = analytic(McfPoly{2.0});
  const auto closed = [](double p) {
    const double s = std::sqrt(1 + p * p);
    return 0.5 * std::log((s + 1) / (s - 1)) - 2 * s;
  };
  const double h = 1e-3, p = 1.0;
  const double second = (closed(p + h) - 2 * closed(p) + closed(p - h)) / (h * h);
  EXPECT_NEAR(lag.Lpp(0.5, 0.3, p), second, 1e-6);
  EXPECT_NEAR(lag.Lpp(0.5, 0.3, p), std::pow(p, -2) * std::pow(1 + p * p, -1.5), 1e-12);
}

TEST(Lagrangian, L0FromConstantForcing) {
  const Lagrangian lag = analytic(QuasilinearGradient{{}, Polynomial{{1.0}}});
  for (double u : {-0.8, 0.25, 1.0}) EXPECT_NEAR(lag.l0(0.3, u), -u, 1e-10);
  EXPECT_EQ(lag.l0(0.3, 0.0), 0.0);
}

// With p* = 0 the reaction term vanishes; what is left of L0 is the base
// shift, so D + L0 must reproduce 2u|p|(log|p| - 1).
TEST(Lagrangian, PorousMediumStarAtZeroMatchesClosedForm) {
  LagrangianOptions o;
  o.p_star = 0.0;
  const Lagrangian lag = analytic(PorousMedium{2.0}, o);
  for (double u : {0.1, 0.5, 1.0}) {
    EXPECT_NEAR(lag.l0(0.5, u), -2.0 * u, 1e-6);
    for (double p : {-1.5, 0.3, 2.0})
      EXPECT_NEAR(lag.L(0.5, u, p), 2.0 * u * std::abs(p) * (std::log(std::abs(p)) - 1.0), 1e-6);
  }
}

TEST(Lagrangian, L1FromBoundaryData) {
  ModelDescriptor d;
  d.model = QuasilinearGradient{};
  d.bc_left = BoundaryCondition::robin_polynomial({0.0, 1.0});
  const Lagrangian robin = analytic(d);
  for (double u : {-0.5, 0.2, 0.9}) EXPECT_NEAR(robin.l1(0.7, u), -u, 1e-12);

  d.bc_left = BoundaryCondition::neumann();
  EXPECT_EQ(analytic(d).l1(0.7, 0.4), 0.0);
  EXPECT_TRUE(analytic(QuasilinearGradient{}).info().l1_zero);
}

TEST(Lagrangian, TwoRobinEndsInterpolateLinearly) {
  ModelDescriptor d;
  d.model = QuasilinearGradient{};
  d.bc_left = BoundaryCondition::robin_polynomial({0.0, 1.0});
  d.bc_right = BoundaryCondition::robin_polynomial({0.0, 0.0, 1.0});
  const Lagrangian lag = analytic(d);
  const double u = 0.6;
  EXPECT_NEAR(lag.l1(0.0, u), -u, 1e-12);
  EXPECT_NEAR(lag.l1(1.0, u), -u * u, 1e-12);
  EXPECT_NEAR(lag.l1(0.25, u), -0.75 * u - 0.25 * u * u, 1e-12);
  EXPECT_NEAR(lag.Lp(0.0, u, u), 0.0, 1e-12);
  EXPECT_NEAR(lag.Lp(1.0, u, u * u), 0.0, 1e-12);
}

TEST(Lagrangian, SecondDerivativeIsNonnegativeWeight) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> du(0.1, 1.0), dp(0.1, 2.0);
  const BuiltinModel models[] = {RhoLaplacianPoly{3, 1}, McfPoly{1}, InverseMcf{}, PorousMedium{2}};
  for (const auto& m : models) {
    const Lagrangian lag = analytic(m);
    const ProblemSpec s = instantiate(m);
    const ModelOracle o = oracle_for(m);
    for (int i = 0; i < 50; ++i) {
      const double u = du(rng), p = (i % 2 ? -1 : 1) * dp(rng);
      const double w = lag.Lpp(0.5, u, p);
      EXPECT_GE(w, 0.0);
      EXPECT_NEAR(w, s.diffusion(0.5, u, p) * std::exp(o.g(0.5, u, p)), 1e-12 * (1 + w));
    }
  }
}

TEST(Lagrangian, FirstDerivativeIsIntegralOfSecond) {
  const Lagrangian lag = analytic(InverseMcf{});
  for (double p : {-1.5, 0.3, 2.0}) {
    const double ref = oracle::gauss([&](double s) { return 1.0 / (1.0 + s * s); }, lag.base_for(p), p);
    EXPECT_NEAR(lag.Lp(0.5, 0.2, p) - lag.l1(0.5, 0.2), ref, 1e-9);
  }
}

TEST(Lagrangian, EulerLagrangeOnNegativeBranch) {
  const BuiltinModel m = RhoLaplacianPoly{3, 1};
  const Lagrangian lag = analytic(m);
  const ProblemSpec s = instantiate(m);
  const double x = 0.4, u = 0.3, h = 1e-4;
  for (double p : {-1.3, -0.4, 0.6}) {
    const double Lu = (lag.L(x, u + h, p) - lag.L(x, u - h, p)) / (2 * h);
    const double Lpx = (lag.Lp(x + h, u, p) - lag.Lp(x - h, u, p)) / (2 * h);
    const double Lpu = (lag.Lp(x, u + h, p) - lag.Lp(x, u - h, p)) / (2 * h);
    const double rhs = std::exp(-std::log(std::abs(p))) * s.reaction(x, u, p);
    EXPECT_NEAR(Lu - Lpx - p * Lpu, rhs, 1e-5) << p;
  }
}

TEST(Lagrangian, DescribeRecordsChoices) {
  const auto j = analytic(PorousMedium{2.0}).describe();
  EXPECT_EQ(j.at("p_base"), 1.0);
  EXPECT_EQ(j.at("g_mode"), "analytic");
  EXPECT_TRUE(j.at("normalization").is_null());
}

TEST(ClosedForm, GridAvoidsZeroBand) {
  const auto g = grid_avoiding_zero(-2, 2, 40, 0.05);
  EXPECT_EQ(g.size(), 40u);
  for (double p : g) EXPECT_GE(std::abs(p), 0.05);
}

TEST(ClosedForm, RhoLaplacianResidual) {
  const BuiltinModel m = rho_pure(3.0);
  const auto cmp = compare_closed_form(analytic(m), oracle_for(m));
  EXPECT_LT(cmp.max_residual, 1e-6);
  EXPECT_EQ(cmp.rows.size(), 1600u);
}

TEST(ClosedForm, InverseMcfDiscrepancyFlagged) {
  const BuiltinModel m = InverseMcf{};
  const auto cmp = compare_closed_form(analytic(m), oracle_for(m));
  ASSERT_TRUE(cmp.discrepancy_checked);
  EXPECT_TRUE(cmp.discrepancy_detected);
  EXPECT_NEAR(cmp.fitted_coefficient, -0.5, 1e-6);
  EXPECT_DOUBLE_EQ(cmp.printed_coefficient, -1.0);
}
