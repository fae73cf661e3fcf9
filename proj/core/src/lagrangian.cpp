#include "lyapkit/lagrangian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace lyapkit {

namespace {

constexpr std::array<double, 1> kSplitAtZero{0.0};

double w_at(const ProblemSpec& spec, const GProvider& g, double x, double u, double p) {
  return spec.diffusion(x, u, p) * std::exp(g(x, u, p));
}

// int_{base}^{p} w ds
double inner_at(const ProblemSpec& spec, const GProvider& g, double x, double u, double p, double base,
                const QuadratureOptions& quad) {
  return integrate([&](double s) { return w_at(spec, g, x, u, s); }, base, p, quad, kSplitAtZero);
}

// int_{base}^{p} (p - s) w ds
double double_at(const ProblemSpec& spec, const GProvider& g, double x, double u, double p, double base,
                 const QuadratureOptions& quad) {
  if (p == base) return 0.0;
  return integrate([&](double s) { return (p - s) * w_at(spec, g, x, u, s); }, base, p, quad, kSplitAtZero);
}

struct ProbePoint {
  double x, u;
};
constexpr std::array<ProbePoint, 6> kProbePoints{{{0.5, 0.5}, {0.5, 1.0}, {0.25, 0.25}, {0.75, -0.5}, {0.5, 0.1}, {0.5, 2.0}}};

struct ProbeResult {
  bool singular = false;
  double exponent = 0.0;
};

// Power-law exponent of w at p -> 0 from either side.
ProbeResult probe_singularity(const ProblemSpec& spec, const GProvider& g) {
  constexpr double e1 = 1e-4, e2 = 1e-6;
  ProbeResult r;
  bool seen = false;
  for (const auto& pt : kProbePoints) {
    for (double side : {1.0, -1.0}) {
      const double w1 = w_at(spec, g, pt.x, pt.u, side * e1);
      const double w2 = w_at(spec, g, pt.x, pt.u, side * e2);
      if (!std::isfinite(w1) || !std::isfinite(w2)) {
        r.singular = true;
        r.exponent = -std::numeric_limits<double>::infinity();
        return r;
      }
      if (w1 == 0.0 || w2 == 0.0) continue;
      const double alpha = std::log(std::abs(w1 / w2)) / std::log(e1 / e2);
      r.exponent = seen ? std::min(r.exponent, alpha) : alpha;
      seen = true;
      if (alpha <= -1.0 + 1e-3) r.singular = true;
    }
  }
  return r;
}

// exp(g) F0 has a finite value at p and matches its one-sided limits.
bool reaction_continuous_at(const ProblemSpec& spec, const GProvider& g, double p) {
  constexpr double eps = 1e-6;
  for (const auto& pt : kProbePoints) {
    const double v0 = weighted_reaction(spec, g, pt.x, pt.u, p);
    const double vp = weighted_reaction(spec, g, pt.x, pt.u, p + eps);
    const double vm = weighted_reaction(spec, g, pt.x, pt.u, p - eps);
    if (!std::isfinite(v0) || !std::isfinite(vp) || !std::isfinite(vm)) return false;
    const double tol = 1e-3 * (1.0 + std::abs(v0));
    if (std::abs(vp - v0) > tol || std::abs(vm - v0) > tol) return false;
  }
  return true;
}

// f_q exp(g) depends on p alone, so D_u = D_px = D_pu = 0.
bool weight_depends_only_on_p(const ProblemSpec& spec, const GProvider& g) {
  if (!g.depends_only_on_p()) return false;
  for (double x : {0.1, 0.5, 0.9})
    for (double u : {-0.7, 0.3, 0.9})
      for (double p : {-0.6, 0.3, 1.1})
        if (spec.diffusion_dx(x, u, p) != 0.0 || spec.diffusion_du(x, u, p) != 0.0) return false;
  return true;
}

}  // namespace

double weighted_reaction(const ProblemSpec& spec, const GProvider& g, double x, double u, double p) {
  const double f0 = spec.reaction(x, u, p);
  if (f0 == 0.0) return 0.0;
  return std::exp(g(x, u, p)) * f0;
}

L1Function build_L1(const ProblemSpec& spec, const GProvider& g, std::function<double(double p)> base_for,
                    const QuadratureOptions& quad) {
  const bool left = spec.bc_left.is_robin(), right = spec.bc_right.is_robin();
  L1Function l1;
  if (!left && !right) {
    l1.value = [](double, double) { return 0.0; };
    l1.dx = [](double, double) { return 0.0; };
    return l1;
  }
  l1.zero = false;
  auto end_value = [spec, g, base_for, quad](double iota, const BoundaryCondition& bc) {
    return [spec, g, base_for, quad, iota, b = bc.b](double u) {
      const double bu = b(u);
      return -inner_at(spec, g, iota, u, bu, base_for(bu), quad);
    };
  };
  if (left && right) {
    auto e0 = end_value(0.0, spec.bc_left);
    auto e1 = end_value(1.0, spec.bc_right);
    l1.value = [e0, e1](double x, double u) { return (1.0 - x) * e0(u) + x * e1(u); };
    l1.dx = [e0, e1](double, double u) { return e1(u) - e0(u); };
  } else {
    auto e = left ? end_value(0.0, spec.bc_left) : end_value(1.0, spec.bc_right);
    l1.value = [e](double, double u) { return e(u); };
    l1.dx = [](double, double) { return 0.0; };
  }
  return l1;
}

Fn2 build_L0(const ProblemSpec& spec, const GProvider& g, const L1Function& l1, double p_star,
             const QuadratureOptions& quad, Fn2 correction) {
  return [spec, g, l1, p_star, quad, correction](double x, double u) {
    if (u == 0.0) return 0.0;
    auto integrand = [&](double u1) {
      double v = weighted_reaction(spec, g, x, u1, p_star);
      if (!l1.zero) v += l1.dx(x, u1);
      if (correction) v -= correction(x, u1);
      return v;
    };
    const QuadratureResult r = adaptive_simpson(integrand, 0.0, u, quad);
    if (!r.converged) {
      std::ostringstream msg;
      msg << "L0 integrand exp(g) F0 is not defined on u in [0, " << u << "] at x = " << x << ", p_* = " << p_star
          << "; choose a different p_star";
      throw LagrangianError(msg.str());
    }
    return r.value;
  };
}

Lagrangian build_lagrangian(ProblemSpec spec, GProvider g, const LagrangianOptions& options) {
  return Lagrangian::build(std::move(spec), std::move(g), options);
}

Lagrangian Lagrangian::build(ProblemSpec spec, GProvider g, const LagrangianOptions& options) {
  if (!(options.quad_tol > 0.0)) throw LagrangianError("quad_tol must be positive");
  Lagrangian lag(with_numeric_derivatives(std::move(spec)), std::move(g), options);
  lag.quad_ = {options.quad_tol, options.quad_tol, std::size_t{1} << 20};
  LagrangianInfo& info = lag.info_;

  const ProbeResult probe = probe_singularity(lag.spec_, lag.g_);
  info.probe_exponent = probe.exponent;
  info.singular = probe.singular;
  if (options.p_base) {
    info.p_base = *options.p_base;
  } else if (probe.singular) {
    info.p_base = 1.0;
    info.p_base_sign_aware = true;
  }

  if (options.p_star) {
    info.p_star = *options.p_star;
  } else if (info.p_base_sign_aware) {
    info.p_star = info.p_base;
    info.p_star_sign_aware = true;
  } else if (reaction_continuous_at(lag.spec_, lag.g_, info.p_base)) {
    info.p_star = info.p_base;
  } else {
    info.p_star = 1.0;
    info.p_star_sign_aware = true;
  }

  const LagrangianInfo snapshot = info;
  auto base_for = [snapshot](double p) {
    return snapshot.p_base_sign_aware ? (p < 0.0 ? -snapshot.p_base : snapshot.p_base) : snapshot.p_base;
  };
  lag.l1_ = build_L1(lag.spec_, lag.g_, base_for, lag.quad_);
  info.l1_zero = lag.l1_.zero;

  const bool p_only = weight_depends_only_on_p(lag.spec_, lag.g_);
  auto make_l0 = [&](double sign) {
    const double ps = lag.star_for(sign);
    const double pb = base_for(sign);
    Fn2 correction;
    if (ps != pb && !p_only) {
      info.l0_correction = true;
      correction = [spec = lag.spec_, g = lag.g_, quad = lag.quad_, ps, pb, h = options.fd_step](double x,
                                                                                                double u) {
        const double hu = h * (1.0 + std::abs(u)), hx = h;
        // One-sided near u = 0, where models built on |u| have a kink.
        auto d_du = [&](auto&& f) {
          if (u - hu < 0.0 && u >= 0.0) return (-3.0 * f(u) + 4.0 * f(u + hu) - f(u + 2 * hu)) / (2 * hu);
          if (u + hu > 0.0 && u < 0.0) return (3.0 * f(u) - 4.0 * f(u - hu) + f(u - 2 * hu)) / (2 * hu);
          return (f(u + hu) - f(u - hu)) / (2 * hu);
        };
        const double d_u = d_du([&](double v) { return double_at(spec, g, x, v, ps, pb, quad); });
        // Differencing under the integral keeps a singular x-independent part of w out.
        const double d_px = integrate(
            [&](double s) { return (w_at(spec, g, x + hx, u, s) - w_at(spec, g, x - hx, u, s)) / (2 * hx); }, pb, ps,
            quad, kSplitAtZero);
        // p* D_pu -> 0 as p* -> 0 even where D_pu grows like log|p*|.
        if (ps == 0.0) return d_u - d_px;
        const double d_pu = d_du([&](double v) { return inner_at(spec, g, x, v, ps, pb, quad); });
        return d_u - d_px - ps * d_pu;
      };
    }
    return build_L0(lag.spec_, lag.g_, lag.l1_, ps, lag.quad_, correction);
  };
  lag.l0_pos_ = make_l0(1.0);
  lag.l0_neg_ = info.p_base_sign_aware || info.p_star_sign_aware ? make_l0(-1.0) : lag.l0_pos_;
  return lag;
}

double Lagrangian::base_for(double p) const {
  if (!info_.p_base_sign_aware) return info_.p_base;
  return p < 0.0 ? -info_.p_base : info_.p_base;
}

double Lagrangian::star_for(double p) const {
  if (!info_.p_star_sign_aware) return info_.p_star;
  return p < 0.0 ? -info_.p_star : info_.p_star;
}

double Lagrangian::weight(double x, double u, double p) const { return w_at(spec_, g_, x, u, p); }

double Lagrangian::inner(double x, double u, double p) const {
  return inner_at(spec_, g_, x, u, p, base_for(p), quad_);
}

void Lagrangian::fail(const char* what, double x, double u, double p, const std::exception& e) const {
  std::ostringstream msg;
  msg << what << " failed at (x, u, p) = (" << x << ", " << u << ", " << p << "): " << e.what();
  throw LagrangianError(msg.str());
}

double Lagrangian::Lpp(double x, double u, double p) const { return weight(x, u, p); }

double Lagrangian::double_integral(double x, double u, double p) const {
  try {
    return double_at(spec_, g_, x, u, p, base_for(p), quad_);
  } catch (const QuadratureError& e) {
    fail("double integral", x, u, p, e);
  }
}

double Lagrangian::l0(double x, double u, double p) const { return p < 0.0 ? l0_neg_(x, u) : l0_pos_(x, u); }

double Lagrangian::l1(double x, double u) const {
  try {
    return l1_.value(x, u);
  } catch (const QuadratureError& e) {
    fail("L1", x, u, 0.0, e);
  }
}

double Lagrangian::Lp(double x, double u, double p) const {
  try {
    return inner(x, u, p) + l1_.value(x, u);
  } catch (const QuadratureError& e) {
    fail("L_p", x, u, p, e);
  }
}

double Lagrangian::L(double x, double u, double p) const {
  try {
    const double d = double_at(spec_, g_, x, u, p, base_for(p), quad_);
    return d + l0(x, u, p) + (l1_.zero ? 0.0 : l1_.value(x, u) * p);
  } catch (const QuadratureError& e) {
    fail("L", x, u, p, e);
  }
}

nlohmann::json Lagrangian::describe() const {
  nlohmann::json j;
  j["p_base"] = info_.p_base;
  j["p_base_sign_aware"] = info_.p_base_sign_aware;
  j["p_star"] = info_.p_star;
  j["p_star_sign_aware"] = info_.p_star_sign_aware;
  j["probe_exponent"] = std::isfinite(info_.probe_exponent) ? nlohmann::json(info_.probe_exponent) : nlohmann::json("-inf");
  j["singular"] = info_.singular;
  j["l1_zero"] = info_.l1_zero;
  j["l0_correction"] = info_.l0_correction;
  j["quad_tol"] = options_.quad_tol;
  j["g_mode"] = to_string(g_.kind());
  if (const auto norm = g_.normalization())
    j["normalization"] = {{"p0", norm->p0}, {"g0", norm->g0}};
  else
    j["normalization"] = nullptr;
  return j;
}

}  // namespace lyapkit
