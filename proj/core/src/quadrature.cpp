#include "lyapkit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lyapkit {

namespace {

constexpr int kMaxDepth = 60;
constexpr int kInitialPanels = 8;

struct Panel {
  double a, fa, m, fm, b, fb, whole, eps;
  int depth;
};

double simpson(double a, double fa, double fm, double b, double fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

// Non-finite samples poison the panel so the caller sees non-convergence.
double guarded(const std::function<double(double)>& f, double t) {
  const double v = f(t);
  return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
}

QuadratureResult simpson_on(const std::function<double(double)>& f, double a, double b,
                            const QuadratureOptions& opts) {
  QuadratureResult result;
  if (a == b) return result;

  std::vector<Panel> stack;
  stack.reserve(128);

  // Coarse estimate to set the relative tolerance.
  const double h = (b - a) / kInitialPanels;
  std::vector<double> xs(2 * kInitialPanels + 1), fs(2 * kInitialPanels + 1);
  for (int i = 0; i <= 2 * kInitialPanels; ++i) {
    xs[i] = a + 0.5 * h * i;
    fs[i] = guarded(f, xs[i]);
  }
  double coarse = 0.0;
  for (int k = 0; k < kInitialPanels; ++k) coarse += simpson(xs[2 * k], fs[2 * k], fs[2 * k + 1], xs[2 * k + 2], fs[2 * k + 2]);
  const double eps_total = std::max(opts.abs_tol, opts.rel_tol * std::abs(coarse));

  for (int k = kInitialPanels - 1; k >= 0; --k) {
    const double pa = xs[2 * k], pb = xs[2 * k + 2];
    stack.push_back({pa, fs[2 * k], xs[2 * k + 1], fs[2 * k + 1], pb, fs[2 * k + 2],
                     simpson(pa, fs[2 * k], fs[2 * k + 1], pb, fs[2 * k + 2]), eps_total / kInitialPanels, 0});
  }

  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    ++result.intervals;
    if (result.intervals > opts.max_intervals) {
      result.converged = false;
      break;
    }
    const double lm = 0.5 * (p.a + p.m), rm = 0.5 * (p.m + p.b);
    const double flm = guarded(f, lm), frm = guarded(f, rm);
    const double left = simpson(p.a, p.fa, flm, p.m, p.fm);
    const double right = simpson(p.m, p.fm, frm, p.b, p.fb);
    const double delta = left + right - p.whole;
    if (!std::isfinite(delta)) {
      result.converged = false;
      result.value = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    if (std::abs(delta) <= 15.0 * p.eps || p.depth >= kMaxDepth) {
      if (p.depth >= kMaxDepth && std::abs(delta) > 15.0 * p.eps) result.converged = false;
      result.value += left + right + delta / 15.0;
      result.error_estimate += std::abs(delta) / 15.0;
      continue;
    }
    const double half_eps = std::max(0.5 * p.eps, std::numeric_limits<double>::epsilon() * std::abs(p.whole));
    stack.push_back({p.m, p.fm, rm, frm, p.b, p.fb, right, half_eps, p.depth + 1});
    stack.push_back({p.a, p.fa, lm, flm, p.m, p.fm, left, half_eps, p.depth + 1});
  }
  return result;
}

// Integrates one piece [a, b] with a ≤ b, substituting near singular ends.
QuadratureResult piece(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts) {
  QuadratureResult out;
  if (a == b) return out;
  const bool bad_a = !std::isfinite(f(a));
  const bool bad_b = !std::isfinite(f(b));

  auto accumulate = [&out](const QuadratureResult& r) {
    out.value += r.value;
    out.error_estimate += r.error_estimate;
    out.intervals += r.intervals;
    out.converged = out.converged && r.converged;
  };

  // Value of the mapped integrand at t = 0: its limit when v(t0) and v(2 t0)
  // agree (as for |s - a|^{-1/2}), zero otherwise (the |s - a|^alpha,
  // alpha > -1/2, and log cases, where the limit is 0).
  auto mapped = [&f](double end, double w, double dir) {
    const double t0 = std::sqrt(64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(end)) / w);
    auto v = [&f, end, w, dir](double t) { return 2.0 * t * w * f(end + dir * w * t * t); };
    const double v1 = v(t0), v2 = v(2.0 * t0);
    const double at_zero =
        std::isfinite(v1) && std::isfinite(v2) && std::abs(v1 - v2) <= 1e-3 * std::abs(v1) ? v1 : 0.0;
    return [v, at_zero](double t) { return t == 0.0 ? at_zero : v(t); };
  };
  auto from_left = [&mapped](double lo, double hi) { return mapped(lo, hi - lo, 1.0); };
  auto from_right = [&mapped](double lo, double hi) { return mapped(hi, hi - lo, -1.0); };

  if (bad_a && bad_b) {
    const double mid = 0.5 * (a + b);
    accumulate(simpson_on(from_left(a, mid), 0.0, 1.0, opts));
    accumulate(simpson_on(from_right(mid, b), 0.0, 1.0, opts));
  } else if (bad_a) {
    accumulate(simpson_on(from_left(a, b), 0.0, 1.0, opts));
  } else if (bad_b) {
    accumulate(simpson_on(from_right(a, b), 0.0, 1.0, opts));
  } else {
    accumulate(simpson_on(f, a, b, opts));
  }
  return out;
}

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureOptions& opts, std::span<const double> breakpoints) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw QuadratureError("quadrature limits must be finite");
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && c < b) cuts.push_back(c);
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);

  QuadratureOptions piece_opts = opts;
  const double share = 1.0 / static_cast<double>(cuts.size() - 1);
  piece_opts.abs_tol = opts.abs_tol * share;

  QuadratureResult total;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const QuadratureResult r = piece(f, cuts[k], cuts[k + 1], piece_opts);
    total.value += r.value;
    total.error_estimate += r.error_estimate;
    total.intervals += r.intervals;
    total.converged = total.converged && r.converged;
  }
  total.value *= sign;
  if (!std::isfinite(total.value)) total.converged = false;
  return total;
}

double integrate(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts,
                 std::span<const double> breakpoints) {
  const QuadratureResult r = adaptive_simpson(f, a, b, opts, breakpoints);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "adaptive Simpson did not converge on [" << a << ", " << b << "] after " << r.intervals
        << " intervals (estimate " << r.value << ")";
    throw QuadratureError(msg.str());
  }
  return r.value;
}

double composite_simpson(std::span<const double> values, double h) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (values[0] + values[1]);
  const std::size_t panels = n - 1;
  std::size_t simpson_end = panels;
  double tail = 0.0;
  if (panels % 2 == 1) {
    if (panels == 1) return 0.5 * h * (values[0] + values[1]);
    simpson_end = panels - 3;
    tail = 3.0 * h / 8.0 *
           (values[simpson_end] + 3.0 * values[simpson_end + 1] + 3.0 * values[simpson_end + 2] + values[simpson_end + 3]);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) acc += values[k] + 4.0 * values[k + 1] + values[k + 2];
  return h / 3.0 * acc + tail;
}

}  // namespace lyapkit
