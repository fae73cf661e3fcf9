#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lyapkit/energy.hpp"
#include "lyapkit/quadrature.hpp"

using namespace lyapkit;
using std::numbers::pi;

namespace {

StateFrame frame_of(const ProblemSpec& s, const Grid1D& g, double (*f)(double)) {
  StateFrame fr;
  fr.u.resize(g.nodes());
  for (std::size_t i = 0; i < fr.u.size(); ++i) fr.u[i] = f(g.x(i));
  fr.ut = evaluate_rhs(s, g, fr.u);
  return fr;
}

Lagrangian analytic(const BuiltinModel& m) { return Lagrangian::build(instantiate(m), GProvider::from_oracle(m)); }

double identity(double x) { return x; }

}  // namespace

TEST(Energy, RhoLaplacianLinearProfile) {
  QuasilinearGradient m;
  m.a = {DiffusionLaw::Kind::rho_laplacian, 3.0};
  const Grid1D g(32);
  EXPECT_NEAR(energy_of_frame(analytic(m), g, frame_of(instantiate(m), g, identity)), 1.0 / 3.0, 1e-9);
}

TEST(Energy, McfLinearProfile) {
  QuasilinearGradient m;
  m.a = {DiffusionLaw::Kind::mcf, 0.0};
  const Grid1D g(32);
  EXPECT_NEAR(energy_of_frame(analytic(m), g, frame_of(instantiate(m), g, identity)), std::sqrt(2.0) - 1.0, 1e-9);
}

TEST(Energy, ZeroState) {
  const BuiltinModel m = QuasilinearGradient{};
  const Grid1D g(16);
  EXPECT_EQ(energy_of_frame(analytic(m), g, frame_of(instantiate(m), g, [](double) { return 0.0; })), 0.0);
}

TEST(Energy, DecayFormulaAtEquilibriumIsZero) {
  const BuiltinModel m = RhoLaplacianPoly{3.0, 1.0};
  const Grid1D g(16);
  StateFrame f;
  f.u.assign(g.nodes(), 0.0);
  f.ut.assign(g.nodes(), 0.0);
  f.u[3] = 0.2;
  EXPECT_EQ(decay_formula(instantiate(m), GProvider::from_oracle(m), g, f).value, 0.0);
}

TEST(Energy, DecayFormulaForSemilinearModels) {
  const BuiltinModel m = QuasilinearGradient{{}, Polynomial{{0.0, 0.0, 1.0}}};
  const ProblemSpec s = instantiate(m);
  const Grid1D g(64);
  const StateFrame f = frame_of(s, g, [](double x) { return std::sin(pi * x) + 0.1 * x * (1 - x); });
  std::vector<double> sq(f.ut.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = f.ut[i] * f.ut[i];
  EXPECT_EQ(decay_formula(s, GProvider::from_oracle(m), g, f).value, -composite_simpson(sq, g.dx));
}

TEST(Energy, DecayFormulaForPorousMedium) {
  const BuiltinModel m = PorousMedium{2.0};
  const ProblemSpec s = instantiate(m);
  const Grid1D g(64);
  StateFrame f;
  f.u.resize(g.nodes());
  for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = 0.3 + 0.5 * g.x(i) + 0.1 * std::sin(pi * g.x(i));
  f.ut = evaluate_rhs(s, g, f.u);
  const auto p = node_gradients(s, g, f.u);
  std::vector<double> v(f.u.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.ut[i] == 0.0 ? 0.0 : f.ut[i] * f.ut[i] / std::abs(p[i]);
  const DecayEstimate est = decay_formula(s, GProvider::from_oracle(m), g, f);
  EXPECT_NEAR(est.value, -composite_simpson(v, g.dx), 1e-12);
  EXPECT_EQ(est.mask_fraction, 0.0);
  EXPECT_TRUE(est.reliable);
}

TEST(Energy, MaskCoversFlatNodes) {
  const BuiltinModel m = RhoLaplacianPoly{3.0, 1.0};
  const Grid1D g(16);
  StateFrame f;
  f.u.assign(g.nodes(), 0.0);
  f.ut.assign(g.nodes(), 1.0);
  for (std::size_t i = 12; i < f.u.size(); ++i) f.u[i] = 0.1 * (g.x(i) - g.x(12));
  const DecayEstimate est = decay_formula(instantiate(m), GProvider::from_oracle(m), g, f);
  EXPECT_GT(est.mask_fraction, 0.2);
  EXPECT_FALSE(est.reliable);
}

TEST(Energy, StandardPorousMedium) {
  const Grid1D g(128);
  StateFrame zero;
  zero.u.assign(g.nodes(), 0.0);
  zero.ut = zero.u;
  const StandardEnergy z = standard_pme_energy(g, zero, 2.0);
  EXPECT_EQ(z.E, 0.0);
  EXPECT_EQ(z.dEdt, 0.0);

  StateFrame f;
  f.u.resize(g.nodes());
  for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = std::sin(pi * g.x(i));
  EXPECT_NEAR(standard_pme_energy(g, f, 1.0).E, 0.25, 1e-9);
  for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = g.x(i);
  EXPECT_NEAR(standard_pme_energy(g, f, 2.0).E, 1.0 / 12.0, 1e-14);
}

TEST(Energy, LiftedStandardEnergyReducesForZeroData) {
  const Grid1D g(64);
  StateFrame f;
  f.u.resize(g.nodes());
  for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = std::sin(pi * g.x(i));
  f.u.back() = 0.0;
  const auto a = standard_pme_energy(g, f, 2.0, false);
  const auto b = standard_pme_energy(g, f, 2.0, true);
  EXPECT_DOUBLE_EQ(a.E, b.E);
  EXPECT_DOUBLE_EQ(a.dEdt, b.dEdt);
}

TEST(Energy, FiltrationLaws) {
  const Grid1D g(32);
  StateFrame f;
  f.u.resize(g.nodes());
  for (std::size_t i = 0; i < f.u.size(); ++i) f.u[i] = 0.2 + 0.6 * g.x(i) * (1 - g.x(i));
  const auto pme = standard_pme_energy(g, f, 3.0);
  const auto fil = filtration_energy(g, f, [](double u) { return u * u * u; });
  EXPECT_NEAR(fil.E, pme.E, 1e-11);
  EXPECT_NEAR(fil.dEdt, pme.dEdt, 1e-11);
  EXPECT_EQ(filtration_energy(g, f, [](double) { return 0.0; }).E, 0.0);

  // Superslow law at u = 1: E = int_0^1 exp(-1/s) ds, against a fine midpoint sum.
  f.u.assign(g.nodes(), 1.0);
  const int n = 2'000'000;
  double riemann = 0.0;
  for (int k = 0; k < n; ++k) riemann += std::exp(-1.0 / ((k + 0.5) / n));
  riemann /= n;
  const auto slow = filtration_energy(g, f, [](double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; });
  EXPECT_NEAR(slow.E, riemann, 1e-9);
}

TEST(Energy, TimeDerivativeExactForQuadratics) {
  const std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.6, 0.65};
  std::vector<double> e;
  for (double s : t) e.push_back(2 - 3 * s + 4 * s * s);
  const auto d = time_derivative(t, e);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(d[k], -3 + 8 * t[k], 1e-11);
}

TEST(Energy, HeatTraceAgreesWithDissipation) {
  const BuiltinModel m = QuasilinearGradient{};
  const ProblemSpec s = instantiate(m);
  const Grid1D g(128);
  std::vector<double> u0(g.nodes());
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = std::sin(pi * g.x(i));
  u0.back() = 0.0;
  SolverControls c;
  c.output_stride = 20;
  const auto sim = simulate(s, g, u0, 0.05, c);
  const EnergyTrace tr = build_energy_trace(analytic(m), oracle_for(m), g, sim.frames, 2);
  const DecayReport r = verify_decay(tr, {1e-8, 0.02, 0.1, 1e-6});
  EXPECT_TRUE(r.ok()) << to_json(r).dump();
  for (std::size_t k = 1; k + 1 < tr.times.size(); ++k) {
    EXPECT_LT(tr.E[k + 1], tr.E[k]);
    EXPECT_NEAR(tr.dEdt_measured[k], tr.dEdt_formula[k], 0.02 * std::abs(tr.dEdt_formula[k]));
    EXPECT_DOUBLE_EQ((*tr.dEdt_model)[k], tr.dEdt_formula[k]);
  }
  std::ostringstream os;
  write_energy_csv(os, tr);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,E,dEdt_measured,dEdt_formula,dEdt_model,mask_fraction");
}

TEST(Energy, EquilibriumTraceIsFlat) {
  const BuiltinModel m = QuasilinearGradient{};
  const ProblemSpec s = instantiate(m);
  const Grid1D g(32);
  const auto sim = simulate(s, g, std::vector<double>(g.nodes(), 0.0), 0.01);
  const EnergyTrace tr = build_energy_trace(analytic(m), std::nullopt, g, sim.frames);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    EXPECT_EQ(tr.dEdt_measured[k], 0.0);
    EXPECT_EQ(tr.dEdt_formula[k], 0.0);
  }
  EXPECT_TRUE(verify_decay(tr).ok());
}

TEST(Energy, PorousMediumEnergyMonotone) {
  ModelDescriptor d;
  d.model = PorousMedium{2.0};
  d.bc_left = BoundaryCondition::dirichlet(0.2);
  d.bc_right = BoundaryCondition::dirichlet(0.8);
  const ProblemSpec s = instantiate(d);
  const Grid1D g(64);
  std::vector<double> u0(g.nodes());
  for (std::size_t i = 0; i < u0.size(); ++i)
    u0[i] = std::sqrt(0.04 + 0.6 * g.x(i) + 0.1 * std::sin(pi * g.x(i)));
  u0.back() = 0.8;
  const auto sim = simulate(s, g, u0, 0.01);
  const Lagrangian lag = Lagrangian::build(s, GProvider::from_oracle(d.model));
  const EnergyTrace tr = build_energy_trace(lag, oracle_for(d.model), g, sim.frames);
  EXPECT_TRUE(verify_decay(tr).monotone);
}

TEST(Energy, VerifyFlagsIncrease) {
  StandardTrace tr;
  tr.times = {0, 1, 2, 3};
  tr.E = {1.0, 0.9, 0.95, 0.8};
  tr.dEdt_formula = {-0.1, -0.1, -0.1, -0.1};
  tr.max_abs_ut = {1, 1, 1, 1};
  tr.dEdt_measured = time_derivative(tr.times, tr.E);
  const DecayReport r = verify_decay(tr);
  EXPECT_FALSE(r.monotone);
  ASSERT_FALSE(r.violations.empty());
  EXPECT_EQ(r.violations.front().kind, "monotonicity");
  EXPECT_EQ(r.violations.front().index, 2u);
}
