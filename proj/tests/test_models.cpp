#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lyapkit/models.hpp"

using namespace lyapkit;

TEST(Models, RhoTwoNOneCoefficients) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 1.0});
  EXPECT_DOUBLE_EQ(s.diffusion(0.3, 0.1, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(s.reaction(0.3, 0.1, 2.0), -2.0);
}

TEST(Models, PorousMediumReaction) {
  const ProblemSpec s = instantiate(PorousMedium{2.0});
  EXPECT_DOUBLE_EQ(s.reaction(0.5, 1.0, 1.0), -2.0);
  EXPECT_DOUBLE_EQ(s.diffusion(0.5, 0.25, 1.0), 0.5);
  EXPECT_TRUE(s.nonnegative_state);
}

TEST(Models, HeatHasNoReaction) {
  const ProblemSpec s = instantiate(QuasilinearGradient{});
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(s.reaction(d(rng), d(rng), d(rng)), 0.0);
}

TEST(Models, RejectsBadParameters) {
  EXPECT_THROW(instantiate(RhoLaplacianPoly{1.5, 1.0}), ModelError);
  EXPECT_THROW(instantiate(PorousMedium{0.5}), ModelError);
  EXPECT_THROW(instantiate(McfPoly{-1.0}), ModelError);
}

TEST(Models, SplitIsConsistentOnSolutionManifold) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1, 1);
  const BuiltinModel models[] = {RhoLaplacianPoly{3, 1}, RhoLaplacianPoly{3, 2}, McfPoly{1}, McfPoly{2},
                                 InverseMcf{},          PorousMedium{2},        PorousMedium{3}};
  for (const auto& m : models) {
    const ProblemSpec s = instantiate(m);
    for (int i = 0; i < 200; ++i) {
      const double x = 0.5 * (d(rng) + 1), u = 0.5 * (d(rng) + 1.2), p = 2 * d(rng), q = 0.4 * d(rng);
      const double ut = s.rhs(x, u, p, q);
      EXPECT_NEAR(s.f1_weight(x, u, p, q, ut), s.diffusion(x, u, p) * q - s.reaction(x, u, p),
                  1e-10 * (1 + std::abs(ut)))
          << model_name(m);
    }
  }
}

TEST(Models, ValidatePmeIsClean) {
  const ProblemSpec s = instantiate(PorousMedium{2});
  const auto r = validate_spec(s, {0, 1, 0, 1, -1, 1, -1, 1}, 500, 3);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.samples, 500u);
}

TEST(Models, ValidateFlagsNegativeDiffusion) {
  ProblemSpec s = instantiate(QuasilinearGradient{});
  s.diffusion = [](double, double, double) { return -1.0; };
  const auto r = validate_spec(s, {}, 20, 3);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.violations.front().invariant.find("diffusion"), std::string::npos);
}

TEST(Models, InverseMcfWeightMatchesRewrittenForm) {
  // F1 u_t = (2 + p^2) p^2 / (1 + p^2)^2 ... evaluated through the resolved u_t.
  const ProblemSpec s = instantiate(InverseMcf{});
  const auto r = validate_spec(s, {0, 1, -1, 1, -2, 2, -0.5, 0.5}, 1000, 11);
  EXPECT_TRUE(r.ok());
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dp(-2, 2), dq(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double p = dp(rng), q = dq(rng);
    const double a = 1 + p * p;
    const double ut = a * a / (a - q);
    // F1 = q - F0... = q + a on the manifold; its product with u_t is positive.
    const double f1 = s.f1_weight(0.5, 0.0, p, q, ut);
    EXPECT_NEAR(f1, q + a, 1e-10 * ut);
    EXPECT_GT(f1 * ut, 0.0);
  }
}

TEST(Models, DescriptorRoundTrip) {
  const nlohmann::json j = {{"model", "rho_laplacian_poly"},
                            {"rho", 3},
                            {"n", 1},
                            {"bc", {{{"kind", "robin"}, {"b", {0.0, 1.0}}}, "dirichlet"}}};
  const ModelDescriptor d = parse_model_descriptor(j);
  EXPECT_TRUE(d.bc_left.is_robin());
  EXPECT_DOUBLE_EQ(d.bc_left.b(0.7), 0.7);
  const ModelDescriptor again = parse_model_descriptor(to_json(d));
  EXPECT_EQ(to_json(again), to_json(d));
}

TEST(Models, UnknownModelNamed) {
  try {
    parse_model_descriptor({{"model", "nope"}});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown model"), std::string::npos);
  }
}

TEST(Models, NumericDerivativesFillGaps) {
  ProblemSpec s;
  s.diffusion = [](double x, double u, double p) { return x * x + u * u * u + p; };
  s.reaction = [](double, double u, double p) { return u * p * p; };
  s = with_numeric_derivatives(std::move(s));
  EXPECT_NEAR(s.diffusion_dx(0.5, 0.3, 1.0), 1.0, 1e-8);
  EXPECT_NEAR(s.diffusion_du(0.5, 0.3, 1.0), 0.27, 1e-8);
  EXPECT_NEAR(s.reaction_dp(0.5, 0.3, 2.0), 1.2, 1e-8);
}
