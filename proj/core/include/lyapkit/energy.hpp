#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapkit/g_provider.hpp"
#include "lyapkit/lagrangian.hpp"
#include "lyapkit/models.hpp"
#include "lyapkit/solver.hpp"

namespace lyapkit {

class EnergyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// E = int_0^1 L(x, u, u_x) dx by composite Simpson over the grid nodes.
double energy_of_frame(const Lagrangian& lag, const Grid1D& grid, const StateFrame& frame);

struct DecayEstimate {
  double value = 0.0;
  double mask_fraction = 0.0;
  bool reliable = true;
};

/// -int exp(g) F1 u_t dx by Simpson. When the spec's decay weight is singular
/// at u_x = 0, nodes with |u_x| < 1e-6 max|u_x| are left out.
DecayEstimate decay_formula(const ProblemSpec& spec, const GProvider& g, const Grid1D& grid, const StateFrame& frame,
                            double unreliable_above = 0.2);

/// -int integrand(u_x, u_xx, u_t) dx from a model oracle, same mask.
DecayEstimate decay_model(const ProblemSpec& spec, const ModelOracle& oracle, const Grid1D& grid,
                          const StateFrame& frame, double unreliable_above = 0.2);

struct StandardEnergy {
  double E = 0.0;
  double dEdt = 0.0;
};

/// E~ = int u^{m+1}/(m+1), dE~/dt = -int ((u^m)_x)^2.
/// With `lift`, phi(x) = affine interpolant of u^m between the end values and
/// E~ = int u^{m+1}/(m+1) - phi u, dE~/dt = -int ((u^m - phi)_x)^2; this is the
/// form that decays under inhomogeneous Dirichlet data.
StandardEnergy standard_pme_energy(const Grid1D& grid, const StateFrame& frame, double m, bool lift = false);

/// E~ = int A(u) with A(u) = int_0^u a, dE~/dt = -int ((a(u))_x)^2; `lift` as above.
StandardEnergy filtration_energy(const Grid1D& grid, const StateFrame& frame, const std::function<double(double)>& a,
                                 bool lift = false);

/// Centred differences on a possibly non-uniform time grid, one-sided
/// three-point formulas at the ends.
std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& e);

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> E;
  std::vector<double> dEdt_measured;
  std::vector<double> dEdt_formula;
  std::optional<std::vector<double>> dEdt_model;
  std::vector<double> mask_fraction;
  std::vector<double> max_abs_ut;
};

/// Evaluates E, the decay formula and (when the oracle has one) the model
/// decay on every frame; frames are spread over `workers` threads.
EnergyTrace build_energy_trace(const Lagrangian& lag, const std::optional<ModelOracle>& oracle, const Grid1D& grid,
                               const std::vector<StateFrame>& frames, unsigned workers = 1);

struct StandardTrace {
  std::string name;
  std::vector<double> times;
  std::vector<double> E;
  std::vector<double> dEdt_measured;
  std::vector<double> dEdt_formula;
  std::vector<double> max_abs_ut;
};

StandardTrace build_standard_trace(const std::string& name, const std::vector<StateFrame>& frames,
                                   const std::function<StandardEnergy(const StateFrame&)>& energy);

struct DecayViolation {
  std::string kind;  // monotonicity, consistency, formula_sign
  std::size_t index = 0;
  double t = 0.0;
  double lhs = 0.0, rhs = 0.0;
};

struct DecayReport {
  std::vector<DecayViolation> violations;
  bool monotone = true;
  bool consistent = true;
  bool formula_negative = true;
  std::size_t consistency_points = 0;
  double max_relative_consistency_error = 0.0;
  bool ok() const { return violations.empty(); }
};

struct DecayTolerances {
  double monotonicity = 1e-8;
  double consistency = 0.05;
  /// Times whose mask fraction is at or above this are skipped in the
  /// consistency check.
  double mask_threshold = 0.1;
  /// Frames with max|u_t| above this must have dEdt_formula < 0.
  double equilibrium_ut = 1e-6;
};

/// (a) E(t_{k+1}) <= E(t_k) + tol_mono (1 + |E(t_k)|);
/// (b) |measured - formula| <= tol (1 + |formula|) at interior times;
/// (c) formula < 0 off equilibrium at reliable times.
DecayReport verify_decay(const EnergyTrace& trace, const DecayTolerances& tol = {});
DecayReport verify_decay(const StandardTrace& trace, const DecayTolerances& tol = {});

/// t,E,dEdt_measured,dEdt_formula,dEdt_model,mask_fraction
void write_energy_csv(std::ostream& os, const EnergyTrace& trace);
/// t,E,dEdt_measured,dEdt_formula
void write_standard_csv(std::ostream& os, const StandardTrace& trace);
nlohmann::json to_json(const DecayReport& report);

}  // namespace lyapkit
