#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "lyapkit/characteristics.hpp"
#include "oracles.hpp"

using namespace lyapkit;

TEST(Characteristics, HeatWithLinearGradientTerm) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 1.0});
  CharControls c;
  c.tol = 1e-12;
  const CharTrajectory t = integrate_characteristics(s, {0.3, 1.0, 0.0, 0.0}, c);
  EXPECT_EQ(t.termination, Termination::reached_x_end);
  const CharState& end = t.states.back();
  EXPECT_NEAR(end.tau, 1.0, 1e-10);
  EXPECT_NEAR(end.p, std::exp(-1.0), 1e-8);
  EXPECT_NEAR(end.g, 1.0, 1e-8);
  EXPECT_NEAR(end.u, 0.3 + 1.0 - std::exp(-1.0), 1e-8);
}

TEST(Characteristics, NoReactionKeepsPAndG) {
  QuasilinearGradient m;
  m.a = {DiffusionLaw::Kind::rho_laplacian, 3.0};
  const ProblemSpec s = instantiate(m);
  const CharTrajectory t = integrate_characteristics(s, {0.0, 0.8, 0.4, 0.0});
  for (const auto& st : t.states) {
    EXPECT_DOUBLE_EQ(st.p, 0.8);
    EXPECT_DOUBLE_EQ(st.g, 0.4);
  }
}

TEST(Characteristics, InverseMcfFromZeroSlope) {
  const ProblemSpec s = instantiate(InverseMcf{});
  CharControls c;
  c.tol = 1e-12;
  c.max_sample_dtau = 0.05;
  const CharTrajectory t = integrate_characteristics(s, {0.0, 0.0, 0.0, 0.0}, c);
  ASSERT_GT(t.states.size(), 10u);
  for (const auto& st : t.states) {
    EXPECT_NEAR(st.p, -std::tan(st.tau), 1e-7 * (1 + std::abs(st.p)));
    EXPECT_NEAR(st.g, 2.0 * std::log(std::cos(st.tau)), 1e-7);
  }
}

TEST(Characteristics, AgreesWithFixedStepRk4) {
  // rho = 3, n = 2: x' = 2|p|, u' = 2|p| p, p' = -p^2, g' = 2p.
  const ProblemSpec s = instantiate(RhoLaplacianPoly{3.0, 2.0});
  CharControls c;
  c.tol = 1e-11;
  c.x_end = 1e9;
  c.tau_max = 0.7;
  const CharTrajectory t = integrate_characteristics(s, {0.1, 1.3, 0.0, 0.0}, c);
  EXPECT_EQ(t.termination, Termination::tau_max);
  const auto ref = oracle::rk4(
      std::array<double, 4>{0.0, 0.1, 1.3, 0.0},
      [](const std::array<double, 4>& y) {
        const double p = y[2];
        return std::array<double, 4>{2 * std::abs(p), 2 * std::abs(p) * p, -p * p, 2 * p};
      },
      t.states.back().tau, 20000);
  EXPECT_NEAR(t.states.back().x, ref[0], 1e-8);
  EXPECT_NEAR(t.states.back().u, ref[1], 1e-8);
  EXPECT_NEAR(t.states.back().p, ref[2], 1e-8);
  EXPECT_NEAR(t.states.back().g, ref[3], 1e-8);
}

TEST(Characteristics, StallDetected) {
  // PME at u = 0 has f_q = 0, so x never moves.
  const ProblemSpec s = instantiate(PorousMedium{2.0});
  const CharTrajectory t = integrate_characteristics(s, {0.0, 0.0, 1.0, 0.0});
  EXPECT_EQ(t.termination, Termination::stalled);
}

TEST(Characteristics, CsvHasHeaderAndRows) {
  const ProblemSpec s = instantiate(RhoLaplacianPoly{2.0, 1.0});
  const CharTrajectory t = integrate_characteristics(s, {0.0, 1.0, 0.0, 0.0});
  std::ostringstream os;
  write_trajectory_csv(os, t);
  const std::string out = os.str();
  EXPECT_EQ(out.substr(0, out.find('\n')), "tau,x,u,p,g");
  EXPECT_EQ(static_cast<std::size_t>(std::count(out.begin(), out.end(), '\n')), t.states.size() + 1);
}
