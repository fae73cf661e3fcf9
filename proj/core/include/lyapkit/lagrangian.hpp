#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lyapkit/g_provider.hpp"
#include "lyapkit/models.hpp"
#include "lyapkit/quadrature.hpp"

namespace lyapkit {

class LagrangianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LagrangianOptions {
  /// Fixed lower limit of the p-integrations. Unset: probe (0, or +-1 by the
  /// sign of p when f_q exp(g) is not integrable at 0).
  std::optional<double> p_base;
  /// Fixed p_* for L0. Unset: the base point, or +-1 by the sign of p when
  /// exp(g) F0 has no limit at the base point.
  std::optional<double> p_star;
  double quad_tol = 1e-9;
  /// Step for the central differences in the L0 correction.
  double fd_step = 1e-3;
};

struct LagrangianInfo {
  double p_base = 0.0;          // magnitude when sign-aware
  bool p_base_sign_aware = false;
  double p_star = 0.0;          // magnitude when sign-aware
  bool p_star_sign_aware = false;
  /// Power-law exponent of f_q exp(g) at p -> 0 (most singular side).
  double probe_exponent = 0.0;
  bool singular = false;
  bool l1_zero = true;
  /// L0 carries the -(D_u - D_px - p_* D_pu) correction (p_* off the base).
  bool l0_correction = false;
};

using Fn2 = std::function<double(double x, double u)>;

/// exp(g) F0 at (x, u, p); zero where F0 vanishes exactly.
double weighted_reaction(const ProblemSpec& spec, const GProvider& g, double x, double u, double p);

/// L1 from the Robin data: -int_{base(b)}^{b(u)} f_q exp(g)(iota, u, p) dp at a
/// Robin end, x-independent with one Robin end, linear in x with two, and
/// zero with two Dirichlet ends.
struct L1Function {
  Fn2 value;
  Fn2 dx;
  bool zero = true;
};
L1Function build_L1(const ProblemSpec& spec, const GProvider& g, std::function<double(double p)> base_for,
                    const QuadratureOptions& quad);

/// L0(x,u) = int_0^u [L1_x + exp(g) F0 (x, u1, p_*) - correction(x, u1)] du1.
Fn2 build_L0(const ProblemSpec& spec, const GProvider& g, const L1Function& l1, double p_star,
             const QuadratureOptions& quad, Fn2 correction = {});

/// L(x,u,p) = D(x,u,p) + L0(x,u) + L1(x,u) p with
/// D = int_{base}^{p} (p - s) f_q exp(g)(x,u,s) ds, so that L_pp = f_q exp(g).
/// Evaluation is pure and may run concurrently.
class Lagrangian {
 public:
  static Lagrangian build(ProblemSpec spec, GProvider g, const LagrangianOptions& options = {});

  double L(double x, double u, double p) const;
  double Lp(double x, double u, double p) const;
  double Lpp(double x, double u, double p) const;

  double double_integral(double x, double u, double p) const;
  /// L0 on the branch of p (matters only when p_* or the base is sign-aware).
  double l0(double x, double u, double p = 1.0) const;
  double l1(double x, double u) const;

  double base_for(double p) const;
  double star_for(double p) const;

  const LagrangianInfo& info() const { return info_; }
  const ProblemSpec& spec() const { return spec_; }
  const GProvider& g() const { return g_; }
  const LagrangianOptions& options() const { return options_; }
  nlohmann::json describe() const;

 private:
  Lagrangian(ProblemSpec spec, GProvider g, LagrangianOptions options)
      : spec_(std::move(spec)), g_(std::move(g)), options_(options) {}

  double inner(double x, double u, double p) const;  // int_{base}^{p} w
  double weight(double x, double u, double p) const;
  [[noreturn]] void fail(const char* what, double x, double u, double p, const std::exception& e) const;

  ProblemSpec spec_;
  GProvider g_;
  LagrangianOptions options_;
  LagrangianInfo info_;
  QuadratureOptions quad_;
  L1Function l1_;
  Fn2 l0_pos_, l0_neg_;
};

Lagrangian build_lagrangian(ProblemSpec spec, GProvider g, const LagrangianOptions& options = {});
inline double eval_L(const Lagrangian& lag, double x, double u, double p) { return lag.L(x, u, p); }
inline double eval_Lp(const Lagrangian& lag, double x, double u, double p) { return lag.Lp(x, u, p); }
inline double eval_Lpp(const Lagrangian& lag, double x, double u, double p) { return lag.Lpp(x, u, p); }

}  // namespace lyapkit
