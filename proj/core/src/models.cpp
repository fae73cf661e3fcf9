#include "lyapkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace lyapkit {

namespace {

bool is_integer(double n) { return std::abs(n - std::round(n)) < 1e-12; }

// u_x^n; odd extension sign(p)|p|^n for non-integer n.
double signed_power(double p, double n) {
  if (is_integer(n)) return std::pow(p, std::round(n));
  const double mag = std::pow(std::abs(p), n);
  return p < 0.0 ? -mag : mag;
}

double signed_power_dp(double p, double n) {
  if (n == 0.0) return 0.0;
  if (is_integer(n)) return n * std::pow(p, std::round(n) - 1.0);
  return n * std::pow(std::abs(p), n - 1.0);
}

double central_step(double arg) { return 1e-6 * (1.0 + std::abs(arg)); }

CoeffFn zero3() {
  return [](double, double, double) { return 0.0; };
}

double clamp_nonneg(double u) { return u > 0.0 ? u : 0.0; }

void require(bool cond, const std::string& msg) {
  if (!cond) throw ModelError(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Boundary conditions

BoundaryCondition BoundaryCondition::dirichlet(double value) {
  BoundaryCondition bc;
  bc.kind = Kind::dirichlet;
  bc.value = value;
  return bc;
}

BoundaryCondition BoundaryCondition::neumann() { return robin_polynomial({}); }

BoundaryCondition BoundaryCondition::robin(ScalarFn b, ScalarFn b_du) {
  if (!b) throw ModelError("robin boundary condition needs b(u)");
  BoundaryCondition bc;
  bc.kind = Kind::robin;
  bc.b = std::move(b);
  bc.b_du = b_du ? std::move(b_du) : ScalarFn([f = bc.b](double u) {
    const double h = central_step(u);
    return (f(u + h) - f(u - h)) / (2.0 * h);
  });
  return bc;
}

BoundaryCondition BoundaryCondition::robin_polynomial(std::vector<double> coeffs) {
  Polynomial poly{coeffs};
  BoundaryCondition bc = robin([poly](double u) { return poly(u); },
                               [poly](double u) { return poly.derivative(u); });
  bc.b_coeffs = std::move(coeffs);
  return bc;
}

// ---------------------------------------------------------------------------
// Coefficient laws

double DiffusionLaw::operator()(double p) const {
  switch (kind) {
    case Kind::constant:
      return parameter;
    case Kind::rho_laplacian:
      return (parameter - 1.0) * std::pow(std::abs(p), parameter - 2.0);
    case Kind::mcf:
      return std::pow(1.0 + p * p, -1.5);
  }
  return 0.0;
}

double Polynomial::operator()(double u) const {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
  return acc;
}

double Polynomial::derivative(double u) const {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * u + static_cast<double>(k) * coeffs[k];
  return acc;
}

double Polynomial::antiderivative(double u) const {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * u + coeffs[k] / static_cast<double>(k + 1);
  return acc * u;
}

bool Polynomial::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
}

double FiltrationLaw::value(double u) const {
  u = clamp_nonneg(u);
  if (kind == Kind::power) return std::pow(u, exponent);
  return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
}

double FiltrationLaw::du(double u) const {
  u = clamp_nonneg(u);
  if (kind == Kind::power) return exponent == 1.0 ? 1.0 : exponent * std::pow(u, exponent - 1.0);
  return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0;
}

double FiltrationLaw::duu(double u) const {
  u = clamp_nonneg(u);
  if (kind == Kind::power) {
    if (exponent == 1.0) return 0.0;
    if (exponent == 2.0) return 2.0;
    return exponent * (exponent - 1.0) * std::pow(u, exponent - 2.0);
  }
  if (u <= 0.0) return 0.0;
  const double inv = 1.0 / u;
  return std::exp(-inv) * (inv * inv * inv * inv - 2.0 * inv * inv * inv);
}

// ---------------------------------------------------------------------------

ProblemSpec with_numeric_derivatives(ProblemSpec spec) {
  if (!spec.diffusion || !spec.reaction) throw ModelError("spec needs diffusion and reaction evaluators");
  if (!spec.diffusion_dx) {
    spec.diffusion_dx = [f = spec.diffusion](double x, double u, double p) {
      const double h = central_step(x);
      return (f(x + h, u, p) - f(x - h, u, p)) / (2.0 * h);
    };
  }
  if (!spec.diffusion_du) {
    spec.diffusion_du = [f = spec.diffusion](double x, double u, double p) {
      const double h = central_step(u);
      return (f(x, u + h, p) - f(x, u - h, p)) / (2.0 * h);
    };
  }
  if (!spec.reaction_dp) {
    spec.reaction_dp = [f = spec.reaction](double x, double u, double p) {
      const double h = central_step(p);
      return (f(x, u, p + h) - f(x, u, p - h)) / (2.0 * h);
    };
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

struct SpecBuilder {
  ProblemSpec operator()(const QuasilinearGradient& m) const {
    require(m.a.kind != DiffusionLaw::Kind::constant || m.a.parameter > 0.0,
            "quasilinear_gradient: constant diffusion must be positive");
    require(m.a.kind != DiffusionLaw::Kind::rho_laplacian || m.a.parameter >= 2.0,
            "quasilinear_gradient: rho must be >= 2");
    ProblemSpec s;
    s.name = "quasilinear_gradient";
    const DiffusionLaw a = m.a;
    const Polynomial h = m.h;
    s.diffusion = [a](double, double, double p) { return a(p); };
    s.diffusion_dx = zero3();
    s.diffusion_du = zero3();
    s.reaction = [h](double, double u, double) { return -h(u); };
    s.reaction_dp = zero3();
    s.rhs = [a, h](double, double u, double p, double q) { return a(p) * q + h(u); };
    s.f1_weight = [](double, double, double, double, double ut) { return ut; };
    s.flags = {true, true, true};
    return s;
  }

  ProblemSpec operator()(const RhoLaplacianPoly& m) const {
    require(m.rho >= 2.0, "rho_laplacian_poly: rho must be >= 2");
    require(m.n >= 0.0, "rho_laplacian_poly: n must be >= 0");
    ProblemSpec s;
    s.name = "rho_laplacian_poly";
    const double rho = m.rho, n = m.n;
    s.diffusion = [rho](double, double, double p) { return (rho - 1.0) * std::pow(std::abs(p), rho - 2.0); };
    s.diffusion_dx = zero3();
    s.diffusion_du = zero3();
    s.reaction = [n](double, double, double p) { return -signed_power(p, n); };
    s.reaction_dp = [n](double, double, double p) { return -signed_power_dp(p, n); };
    s.rhs = [rho, n](double, double, double p, double q) {
      return (rho - 1.0) * std::pow(std::abs(p), rho - 2.0) * q + signed_power(p, n);
    };
    s.f1_weight = [](double, double, double, double, double ut) { return ut; };
    s.flags = {true, true, true};
    s.decay_singularity_order = n;
    return s;
  }

  ProblemSpec operator()(const McfPoly& m) const {
    require(m.n >= 0.0, "mcf_poly: n must be >= 0");
    ProblemSpec s;
    s.name = "mcf_poly";
    const double n = m.n;
    s.diffusion = [](double, double, double p) { return std::pow(1.0 + p * p, -1.5); };
    s.diffusion_dx = zero3();
    s.diffusion_du = zero3();
    s.reaction = [n](double, double, double p) { return -signed_power(p, n); };
    s.reaction_dp = [n](double, double, double p) { return -signed_power_dp(p, n); };
    s.rhs = [n](double, double, double p, double q) {
      return std::pow(1.0 + p * p, -1.5) * q + signed_power(p, n);
    };
    s.f1_weight = [](double, double, double, double, double ut) { return ut; };
    s.flags = {true, true, true};
    s.decay_singularity_order = n;
    return s;
  }

  ProblemSpec operator()(const InverseMcf&) const {
    ProblemSpec s;
    s.name = "inverse_mcf";
    s.diffusion = [](double, double, double) { return 1.0; };
    s.diffusion_dx = zero3();
    s.diffusion_du = zero3();
    s.reaction = [](double, double, double p) { return -(1.0 + p * p); };
    s.reaction_dp = [](double, double, double p) { return -2.0 * p; };
    s.rhs = [](double, double, double p, double q) {
      const double a = 1.0 + p * p;
      return a * a / (a - q);
    };
    s.f1_weight = [](double, double, double p, double q, double ut) {
      const double a = 1.0 + p * p;
      return ut + q * q / (q - a);
    };
    s.flags = {true, true, true};
    return s;
  }

  ProblemSpec operator()(const PorousMedium& m) const {
    require(m.m >= 1.0, "porous_medium: m must be >= 1");
    ProblemSpec s;
    s.name = "porous_medium";
    const double e = m.m;
    // m(m-1) u^{m-2}, zero for the linear case.
    auto curvature = [e](double u) {
      if (e == 1.0) return 0.0;
      if (e == 2.0) return 2.0;
      return e * (e - 1.0) * std::pow(clamp_nonneg(u), e - 2.0);
    };
    s.diffusion = [e](double, double u, double) {
      return e == 1.0 ? 1.0 : e * std::pow(clamp_nonneg(u), e - 1.0);
    };
    s.diffusion_dx = zero3();
    s.diffusion_du = [curvature](double, double u, double) { return curvature(u); };
    s.reaction = [curvature](double, double u, double p) { return -curvature(u) * p * p; };
    s.reaction_dp = [curvature](double, double u, double p) { return -2.0 * curvature(u) * p; };
    s.rhs = [e, curvature](double, double u, double p, double q) {
      const double fq = e == 1.0 ? 1.0 : e * std::pow(clamp_nonneg(u), e - 1.0);
      return fq * q + curvature(u) * p * p;
    };
    s.f1_weight = [](double, double, double, double, double ut) { return ut; };
    s.flux_potential = [e](double u) { return std::pow(clamp_nonneg(u), e); };
    if (e > 1.0) {
      s.characteristic_rescale = [e](double, double u, double) {
        return e == 2.0 ? 2.0 : e * std::pow(clamp_nonneg(u), e - 2.0);
      };
    }
    s.flags = {true, false, true};
    s.decay_singularity_order = e == 1.0 ? 0.0 : 1.0;
    s.nonnegative_state = true;
    s.pme_exponent = e;
    return s;
  }

  ProblemSpec operator()(const Filtration& m) const {
    require(m.a.kind != FiltrationLaw::Kind::power || m.a.exponent >= 1.0,
            "filtration: power exponent must be >= 1");
    ProblemSpec s;
    s.name = "filtration";
    const FiltrationLaw a = m.a;
    s.diffusion = [a](double, double u, double) { return a.du(u); };
    s.diffusion_dx = zero3();
    s.diffusion_du = [a](double, double u, double) { return a.duu(u); };
    s.reaction = [a](double, double u, double p) { return -a.duu(u) * p * p; };
    s.reaction_dp = [a](double, double u, double p) { return -2.0 * a.duu(u) * p; };
    s.rhs = [a](double, double u, double p, double q) { return a.du(u) * q + a.duu(u) * p * p; };
    s.f1_weight = [](double, double, double, double, double ut) { return ut; };
    s.flux_potential = [a](double u) { return a.value(u); };
    s.flags = {true, false, true};
    const bool linear = a.kind == FiltrationLaw::Kind::power && a.exponent == 1.0;
    s.decay_singularity_order = linear ? 0.0 : 1.0;
    s.nonnegative_state = true;
    return s;
  }
};

struct NameOf {
  std::string operator()(const QuasilinearGradient&) const { return "quasilinear_gradient"; }
  std::string operator()(const RhoLaplacianPoly&) const { return "rho_laplacian_poly"; }
  std::string operator()(const McfPoly&) const { return "mcf_poly"; }
  std::string operator()(const InverseMcf&) const { return "inverse_mcf"; }
  std::string operator()(const PorousMedium&) const { return "porous_medium"; }
  std::string operator()(const Filtration&) const { return "filtration"; }
};

double log_abs(double p) { return std::log(std::abs(p)); }

struct OracleBuilder {
  ModelOracle operator()(const QuasilinearGradient& m) const {
    ModelOracle o;
    o.g = [](double, double, double) { return 0.0; };
    o.g_depends_only_on_p = true;
    o.decay_integrand = [](double, double, double ut) { return ut * ut; };
    const Polynomial h = m.h;
    switch (m.a.kind) {
      case DiffusionLaw::Kind::constant: {
        const double c = m.a.parameter;
        o.lagrangian = [c, h](double, double u, double p) { return 0.5 * c * p * p - h.antiderivative(u); };
        o.lagrangian_formula = "a p^2/2 - H(u)";
        break;
      }
      case DiffusionLaw::Kind::rho_laplacian: {
        const double rho = m.a.parameter;
        o.lagrangian = [rho, h](double, double u, double p) {
          return std::pow(std::abs(p), rho) / rho - h.antiderivative(u);
        };
        o.lagrangian_formula = "|p|^rho/rho - H(u)";
        break;
      }
      case DiffusionLaw::Kind::mcf:
        o.lagrangian = [h](double, double u, double p) { return std::sqrt(1.0 + p * p) - h.antiderivative(u); };
        o.lagrangian_formula = "sqrt(1+p^2) - H(u)";
        break;
    }
    return o;
  }

  ModelOracle operator()(const RhoLaplacianPoly& m) const {
    ModelOracle o;
    const double rho = m.rho, n = m.n;
    o.g = [n](double, double, double p) { return n == 0.0 ? 0.0 : -n * log_abs(p); };
    o.g_depends_only_on_p = true;
    o.decay_integrand = [n](double p, double, double ut) { return ut * ut / std::pow(std::abs(p), n); };
    const double d0 = rho - n, d1 = rho - n - 1.0;
    if (std::abs(d0) < 1e-12 || std::abs(d1) < 1e-12) {
      o.note = "oracle disabled: closed-form energy coefficient is singular for n = rho or n = rho - 1";
      return o;
    }
    const double coef = (rho - 1.0) / (d0 * d1);
    o.lagrangian = [coef, d0](double, double u, double p) { return coef * std::pow(std::abs(p), d0) - u; };
    o.lagrangian_formula = "(rho-1)/((rho-n)(rho-n-1)) |p|^(rho-n) - u";
    return o;
  }

  ModelOracle operator()(const McfPoly& m) const {
    ModelOracle o;
    const double n = m.n;
    o.g = [n](double, double, double p) { return n == 0.0 ? 0.0 : -n * log_abs(p); };
    o.g_depends_only_on_p = true;
    o.decay_integrand = [n](double p, double, double ut) { return ut * ut / std::pow(std::abs(p), n); };
    if (n == 0.0) {
      o.lagrangian = [](double, double u, double p) { return std::sqrt(1.0 + p * p) - u; };
      o.lagrangian_formula = "sqrt(1+p^2) - u";
    } else if (n == 2.0) {
      o.lagrangian = [](double, double u, double p) {
        const double s = std::sqrt(1.0 + p * p);
        return 0.5 * std::log((s + 1.0) / (s - 1.0)) - 2.0 * s - u;
      };
      o.lagrangian_formula = "arccoth(sqrt(1+p^2)) - 2 sqrt(1+p^2) - u";
    } else {
      o.note = "oracle disabled: closed form wired only for n = 0 and n = 2";
    }
    return o;
  }

  ModelOracle operator()(const InverseMcf&) const {
    ModelOracle o;
    o.g = [](double, double, double p) { return -std::log1p(p * p); };
    o.g_depends_only_on_p = true;
    o.lagrangian = [](double, double u, double p) { return p * std::atan(p) - std::log1p(p * p) - u; };
    o.lagrangian_formula = "p arctan p - log(1+p^2) - u";
    o.decay_integrand = [](double p, double, double ut) {
      const double a = 1.0 + p * p;
      return (2.0 + p * p) * p * p / (a * a * a) * ut * ut;
    };
    ModelOracle::Discrepancy d;
    d.term = "log(1+p^2)";
    d.basis = [](double p) { return std::log1p(p * p); };
    d.anchor = [](double p) { return p * std::atan(p); };
    d.printed_coefficient = -1.0;
    d.constructed_coefficient = -0.5;
    o.discrepancy = d;
    o.note =
        "printed energy has coefficient -1 on log(1+p^2); double integration of L_pp = (1+p^2)^-1 "
        "gives -1/2";
    return o;
  }

  ModelOracle operator()(const PorousMedium& m) const {
    ModelOracle o;
    const double e = m.m;
    if (e == 1.0) {
      o.g = [](double, double, double) { return 0.0; };
      o.g_depends_only_on_p = true;
      o.lagrangian = [](double, double, double p) { return 0.5 * p * p; };
      o.lagrangian_formula = "p^2/2";
      o.decay_integrand = [](double, double, double ut) { return ut * ut; };
      return o;
    }
    o.g = [](double, double, double p) { return -log_abs(p); };
    o.g_depends_only_on_p = true;
    o.lagrangian = [e](double, double u, double p) {
      const double ap = std::abs(p);
      if (ap == 0.0) return 0.0;
      return e * std::pow(clamp_nonneg(u), e - 1.0) * ap * (std::log(ap) - 1.0);
    };
    o.lagrangian_formula = "m u^(m-1) |p| (log|p| - 1)";
    o.decay_integrand = [](double p, double, double ut) { return ut * ut / std::abs(p); };
    return o;
  }

  ModelOracle operator()(const Filtration& m) const {
    ModelOracle o;
    const FiltrationLaw a = m.a;
    if (a.kind == FiltrationLaw::Kind::power && a.exponent == 1.0) {
      o.g = [](double, double, double) { return 0.0; };
      o.g_depends_only_on_p = true;
      o.lagrangian = [](double, double, double p) { return 0.5 * p * p; };
      o.lagrangian_formula = "p^2/2";
      o.decay_integrand = [](double, double, double ut) { return ut * ut; };
      return o;
    }
    o.g = [](double, double, double p) { return -log_abs(p); };
    o.g_depends_only_on_p = true;
    o.lagrangian = [a](double, double u, double p) {
      const double ap = std::abs(p);
      if (ap == 0.0) return 0.0;
      return a.du(u) * ap * (std::log(ap) - 1.0);
    };
    o.lagrangian_formula = "a'(u) |p| (log|p| - 1)";
    o.decay_integrand = [](double p, double, double ut) { return ut * ut / std::abs(p); };
    return o;
  }
};

double json_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ModelError(std::string("descriptor field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

BoundaryCondition parse_bc(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto kind = j.get<std::string>();
    if (kind == "dirichlet") return BoundaryCondition::dirichlet();
    if (kind == "neumann") return BoundaryCondition::neumann();
    throw ModelError("unknown boundary condition '" + kind + "'");
  }
  if (!j.is_object() || !j.contains("kind")) throw ModelError("boundary condition must be a string or {kind: ...}");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "dirichlet") return BoundaryCondition::dirichlet(json_number(j, "value", 0.0));
  if (kind == "neumann") return BoundaryCondition::neumann();
  if (kind == "robin") {
    std::vector<double> coeffs;
    if (j.contains("b")) coeffs = j.at("b").get<std::vector<double>>();
    return BoundaryCondition::robin_polynomial(std::move(coeffs));
  }
  throw ModelError("unknown boundary condition '" + kind + "'");
}

nlohmann::json bc_to_json(const BoundaryCondition& bc) {
  if (bc.kind == BoundaryCondition::Kind::dirichlet) return {{"kind", "dirichlet"}, {"value", bc.value}};
  return {{"kind", "robin"}, {"b", bc.b_coeffs}};
}

}  // namespace

std::string model_name(const BuiltinModel& model) { return std::visit(NameOf{}, model); }

ProblemSpec instantiate(const BuiltinModel& model) {
  ProblemSpec s = std::visit(SpecBuilder{}, model);
  s.bc_left = BoundaryCondition::dirichlet();
  s.bc_right = BoundaryCondition::dirichlet();
  return s;
}

ProblemSpec instantiate(const ModelDescriptor& descriptor) {
  ProblemSpec s = instantiate(descriptor.model);
  s.bc_left = descriptor.bc_left;
  s.bc_right = descriptor.bc_right;
  return s;
}

ModelOracle oracle_for(const BuiltinModel& model) { return std::visit(OracleBuilder{}, model); }

ModelDescriptor parse_model_descriptor(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("model") || !j.at("model").is_string())
    throw ModelError("model descriptor needs a string field 'model'");
  const auto name = j.at("model").get<std::string>();
  ModelDescriptor d;
  if (name == "quasilinear_gradient") {
    QuasilinearGradient m;
    if (j.contains("a")) {
      const auto& a = j.at("a");
      const auto kind = a.value("kind", std::string("constant"));
      if (kind == "constant") {
        m.a = {DiffusionLaw::Kind::constant, json_number(a, "value", 1.0)};
      } else if (kind == "rho_laplacian") {
        m.a = {DiffusionLaw::Kind::rho_laplacian, json_number(a, "rho", 2.0)};
      } else if (kind == "mcf") {
        m.a = {DiffusionLaw::Kind::mcf, 0.0};
      } else {
        throw ModelError("unknown diffusion law '" + kind + "'");
      }
    }
    if (j.contains("h")) m.h.coeffs = j.at("h").get<std::vector<double>>();
    d.model = m;
  } else if (name == "rho_laplacian_poly") {
    d.model = RhoLaplacianPoly{json_number(j, "rho", 2.0), json_number(j, "n", 0.0)};
  } else if (name == "mcf_poly") {
    d.model = McfPoly{json_number(j, "n", 0.0)};
  } else if (name == "inverse_mcf") {
    d.model = InverseMcf{};
  } else if (name == "porous_medium") {
    d.model = PorousMedium{json_number(j, "m", 2.0)};
  } else if (name == "filtration") {
    Filtration f;
    if (j.contains("a")) {
      const auto& a = j.at("a");
      const auto kind = a.value("kind", std::string("power"));
      if (kind == "power") {
        f.a = {FiltrationLaw::Kind::power, json_number(a, "m", 2.0)};
      } else if (kind == "superslow") {
        f.a = {FiltrationLaw::Kind::superslow, 0.0};
      } else {
        throw ModelError("unknown filtration law '" + kind + "'");
      }
    }
    d.model = f;
  } else {
    throw ModelError("unknown model '" + name + "'");
  }
  if (j.contains("bc")) {
    const auto& bc = j.at("bc");
    if (!bc.is_array() || bc.size() != 2) throw ModelError("'bc' must be an array of two boundary conditions");
    d.bc_left = parse_bc(bc[0]);
    d.bc_right = parse_bc(bc[1]);
  }
  // Fail early on parameter ranges.
  (void)instantiate(d.model);
  return d;
}

nlohmann::json to_json(const ModelDescriptor& descriptor) {
  nlohmann::json j;
  j["model"] = model_name(descriptor.model);
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuasilinearGradient>) {
          switch (m.a.kind) {
            case DiffusionLaw::Kind::constant:
              j["a"] = {{"kind", "constant"}, {"value", m.a.parameter}};
              break;
            case DiffusionLaw::Kind::rho_laplacian:
              j["a"] = {{"kind", "rho_laplacian"}, {"rho", m.a.parameter}};
              break;
            case DiffusionLaw::Kind::mcf:
              j["a"] = {{"kind", "mcf"}};
              break;
          }
          j["h"] = m.h.coeffs;
        } else if constexpr (std::is_same_v<T, RhoLaplacianPoly>) {
          j["rho"] = m.rho;
          j["n"] = m.n;
        } else if constexpr (std::is_same_v<T, McfPoly>) {
          j["n"] = m.n;
        } else if constexpr (std::is_same_v<T, PorousMedium>) {
          j["m"] = m.m;
        } else if constexpr (std::is_same_v<T, Filtration>) {
          if (m.a.kind == FiltrationLaw::Kind::power)
            j["a"] = {{"kind", "power"}, {"m", m.a.exponent}};
          else
            j["a"] = {{"kind", "superslow"}};
        }
      },
      descriptor.model);
  j["bc"] = {bc_to_json(descriptor.bc_left), bc_to_json(descriptor.bc_right)};
  return j;
}

// ---------------------------------------------------------------------------

ValidationReport validate_spec(const ProblemSpec& spec, const SampleBox& box, std::size_t n_samples,
                               std::uint64_t seed, double consistency_tol) {
  ValidationReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  double max_diffusion = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double x = draw(box.x_lo, box.x_hi);
    const double u = draw(box.u_lo, box.u_hi);
    const double p = draw(box.p_lo, box.p_hi);
    const double q = draw(box.q_lo, box.q_hi);
    ++report.samples;

    const double fq = spec.diffusion(x, u, p);
    if (!std::isfinite(fq) || fq < 0.0) {
      report.violations.push_back({"diffusion_nonnegative", x, u, p, q, 0.0, fq});
      continue;
    }
    max_diffusion = std::max(max_diffusion, fq);

    const double ut = spec.rhs(x, u, p, q);
    const double f1 = spec.f1_weight(x, u, p, q, ut);
    const double sign_product = f1 * ut;
    if (!std::isfinite(sign_product) || sign_product < 0.0 || (ut != 0.0 && sign_product == 0.0)) {
      report.violations.push_back({"f1_sign", x, u, p, q, ut, sign_product});
    }

    const double f0 = spec.reaction(x, u, p);
    const double expected = fq * q - f0;
    const double scale = 1.0 + std::abs(fq * q) + std::abs(f0);
    if (!(std::abs(f1 - expected) <= consistency_tol * scale)) {
      report.violations.push_back({"rhs_consistency", x, u, p, q, ut, f1 - expected});
    }
  }
  if (report.samples > 0 && max_diffusion == 0.0) {
    report.violations.push_back({"diffusion_not_identically_zero", 0, 0, 0, 0, 0, 0.0});
  }
  return report;
}

}  // namespace lyapkit
