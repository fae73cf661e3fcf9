#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace lyapkit {

/// Thrown for invalid model parameters or malformed model descriptors.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ScalarFn = std::function<double(double)>;
/// Coefficient evaluated at (x, u, p) with q = u_t = 0.
using CoeffFn = std::function<double(double x, double u, double p)>;
/// Resolved time evolution u_t = G(x, u, p, q).
using RhsFn = std::function<double(double x, double u, double p, double q)>;
/// F^1(x, u, p, q, u_t).
using WeightFn = std::function<double(double x, double u, double p, double q, double ut)>;

/// Separated boundary condition at one end of [0, 1].
///
/// Dirichlet pins u to a constant (zero unless stated otherwise); Robin
/// prescribes u_x = b(u). Neumann is Robin with b == 0.
struct BoundaryCondition {
  enum class Kind { dirichlet, robin };

  Kind kind = Kind::dirichlet;
  double value = 0.0;
  ScalarFn b;
  ScalarFn b_du;
  /// Polynomial coefficients of b when built from a descriptor; kept for manifests.
  std::vector<double> b_coeffs;

  static BoundaryCondition dirichlet(double value = 0.0);
  static BoundaryCondition neumann();
  static BoundaryCondition robin(ScalarFn b, ScalarFn b_du);
  /// Robin condition u_x = c0 + c1 u + c2 u^2 + ...
  static BoundaryCondition robin_polynomial(std::vector<double> coeffs);

  bool is_robin() const { return kind == Kind::robin; }
};

struct StructureFlags {
  bool autonomous_in_x = false;
  bool autonomous_in_u = false;
  bool shared_factor_reducible = false;
};

/// A PDE model f(x, u, u_x, u_xx, u_t) = 0 in the split form
/// F^1 = f_q(x,u,p,0,0) q - F^0(x,u,p), together with its explicit resolution
/// u_t = G(x,u,p,q) and boundary data.
///
/// All evaluators must be pure; a spec is shared read-only between workers.
struct ProblemSpec {
  std::string name;

  CoeffFn diffusion;     // f_q(x,u,p,0,0) >= 0
  CoeffFn diffusion_dx;  // f_qx
  CoeffFn diffusion_du;  // f_qu
  CoeffFn reaction;      // F^0
  CoeffFn reaction_dp;   // F^0_p
  RhsFn rhs;
  WeightFn f1_weight;

  BoundaryCondition bc_left;
  BoundaryCondition bc_right;
  StructureFlags flags;

  /// When set, rhs == (flux_potential(u))_xx and the solver uses the
  /// divergence-form stencil.
  ScalarFn flux_potential;
  /// Positive factor s(x,u,p): characteristics are integrated in the
  /// rescaled parameter d(tau~) = s d(tau).
  CoeffFn characteristic_rescale;
  /// k such that the decay weight carries |u_x|^{-k}; 0 when regular.
  double decay_singularity_order = 0.0;
  /// Solutions are required to stay non-negative (porous medium).
  bool nonnegative_state = false;
  /// Flux exponent for the porous medium builtin (0 when not a PME).
  double pme_exponent = 0.0;
};

/// Fills missing diffusion_dx, diffusion_du, reaction_dp with central
/// differences of step 1e-6 (1 + |arg|). Throws if diffusion or reaction is
/// missing.
ProblemSpec with_numeric_derivatives(ProblemSpec spec);

/// a(u_x) for the quasilinear family.
struct DiffusionLaw {
  enum class Kind { constant, rho_laplacian, mcf };
  Kind kind = Kind::constant;
  double parameter = 1.0;  // the constant, or rho

  double operator()(double p) const;
};

struct Polynomial {
  std::vector<double> coeffs;  // c0 + c1 u + ...

  double operator()(double u) const;
  double derivative(double u) const;
  /// Integral from 0 to u.
  double antiderivative(double u) const;
  bool is_zero() const;
};

/// a(u) for filtration equations u_t = (a(u))_xx.
struct FiltrationLaw {
  enum class Kind { power, superslow };
  Kind kind = Kind::power;
  double exponent = 2.0;  // a(u) = |u|^exponent for Kind::power

  double value(double u) const;
  double du(double u) const;
  double duu(double u) const;
};

struct QuasilinearGradient {
  DiffusionLaw a;
  Polynomial h;
};
struct RhoLaplacianPoly {
  double rho = 2.0;
  double n = 0.0;
};
struct McfPoly {
  double n = 0.0;
};
struct InverseMcf {};
struct PorousMedium {
  double m = 1.0;
};
struct Filtration {
  FiltrationLaw a;
};

using BuiltinModel =
    std::variant<QuasilinearGradient, RhoLaplacianPoly, McfPoly, InverseMcf, PorousMedium, Filtration>;

/// A builtin together with boundary conditions, as read from a JSON descriptor.
struct ModelDescriptor {
  BuiltinModel model;
  BoundaryCondition bc_left = BoundaryCondition::dirichlet();
  BoundaryCondition bc_right = BoundaryCondition::dirichlet();
};

std::string model_name(const BuiltinModel& model);

/// Builds the ProblemSpec of a builtin with homogeneous Dirichlet ends.
ProblemSpec instantiate(const BuiltinModel& model);
ProblemSpec instantiate(const ModelDescriptor& descriptor);

/// Parses {"model": "rho_laplacian_poly", "rho": 3.0, "n": 1.0, "bc": [...]}.
ModelDescriptor parse_model_descriptor(const nlohmann::json& j);
nlohmann::json to_json(const ModelDescriptor& descriptor);

/// Closed forms attached to a builtin. Every member is optional.
struct ModelOracle {
  /// g up to an additive constant, so that g = g0 + G(p) - G(p0) under a
  /// normalization and g = G(p) when the constant is dropped.
  CoeffFn g;
  bool g_depends_only_on_p = false;
  /// Closed-form Lagrangian from the worked examples (constants dropped).
  CoeffFn lagrangian;
  std::string lagrangian_formula;
  /// Model-specific decay integrand: dE/dt = -int integrand(p, q, u_t) dx.
  std::function<double(double p, double q, double ut)> decay_integrand;
  /// Known disagreement between the printed closed form and the construction.
  struct Discrepancy {
    std::string term;               // e.g. "log(1+p^2)"
    ScalarFn basis;                 // the term as a function of p
    ScalarFn anchor;                // remaining p-dependent part shared by both
    double printed_coefficient = 0.0;
    double constructed_coefficient = 0.0;
  };
  std::optional<Discrepancy> discrepancy;
  std::string note;
};

ModelOracle oracle_for(const BuiltinModel& model);

/// Sampling region for validate_spec.
struct SampleBox {
  double x_lo = 0.0, x_hi = 1.0;
  double u_lo = -1.0, u_hi = 1.0;
  double p_lo = -1.0, p_hi = 1.0;
  double q_lo = -1.0, q_hi = 1.0;
};

struct SpecViolation {
  std::string invariant;
  double x = 0, u = 0, p = 0, q = 0, ut = 0;
  double value = 0;
};

struct ValidationReport {
  std::size_t samples = 0;
  std::vector<SpecViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Random sampling of the ProblemSpec invariants over a box. The sign of
/// F^1 u_t is checked on the solution manifold u_t = rhs(x,u,p,q).
/// Never throws for invariant failures; they are reported.
ValidationReport validate_spec(const ProblemSpec& spec, const SampleBox& box, std::size_t n_samples,
                               std::uint64_t seed = 0x5eed, double consistency_tol = 1e-10);

}  // namespace lyapkit
