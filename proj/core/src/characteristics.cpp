#include "lyapkit/characteristics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

namespace lyapkit {

namespace {

using State = std::array<double, 4>;  // x, u, p, g

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class System {
 public:
  explicit System(const ProblemSpec& spec) : spec_(spec) {}

  State operator()(const State& y) const {
    const CharDerivative d = characteristic_rhs(spec_, y[0], y[1], y[2]);
    return {d.x, d.u, d.p, d.g};
  }

 private:
  const ProblemSpec& spec_;
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (const auto& [coef, k] : terms) {
    if (coef == 0.0) continue;
    for (int i = 0; i < 4; ++i) out[i] += h * coef * (*k)[i];
  }
  return out;
}

bool finite(const State& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

struct StepResult {
  State y;
  State f_end;
  State err;
};

StepResult dopri_step(const System& sys, const State& y, const State& k1, double h) {
  const State k2 = sys(axpy(y, h, {{a21, &k1}}));
  const State k3 = sys(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
  const State k4 = sys(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const State k5 = sys(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const State k6 = sys(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  StepResult r;
  r.y = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  r.f_end = sys(r.y);
  for (int i = 0; i < 4; ++i)
    r.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * r.f_end[i]);
  return r;
}

double error_norm(const State& err, const State& y0, const State& y1, double tol) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    acc += (err[i] / sc) * (err[i] / sc);
  }
  return std::sqrt(acc / 4.0);
}

// Cubic Hermite between two accepted states.
State hermite(const State& y0, const State& f0, const State& y1, const State& f1, double h, double theta) {
  const double t2 = theta * theta, t3 = t2 * theta;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  State out;
  for (int i = 0; i < 4; ++i) out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  return out;
}

CharState to_char_state(double tau, const State& y) { return {tau, y[0], y[1], y[2], y[3]}; }

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_x_end:
      return "reached_x_end";
    case Termination::stalled:
      return "stalled";
    case Termination::blowup:
      return "blowup";
    case Termination::max_steps:
      return "max_steps";
    case Termination::tau_max:
      return "tau_max";
  }
  return "unknown";
}

CharDerivative characteristic_rhs(const ProblemSpec& spec, double x, double u, double p) {
  const double fq = spec.diffusion(x, u, p);
  const double f0 = spec.reaction(x, u, p);
  CharDerivative d{fq, fq * p, f0,
                   -spec.reaction_dp(x, u, p) - spec.diffusion_dx(x, u, p) - p * spec.diffusion_du(x, u, p)};
  if (spec.characteristic_rescale) {
    const double s = spec.characteristic_rescale(x, u, p);
    if (std::isfinite(s) && s > 0.0) {
      d.x /= s;
      d.u /= s;
      d.p /= s;
      d.g /= s;
    }
  }
  return d;
}

CharTrajectory integrate_characteristics(const ProblemSpec& spec, const CharInit& init,
                                         const CharControls& controls) {
  if (!(controls.dt0 > 0.0) || !(controls.tol > 0.0) || !(controls.tau_max > 0.0))
    throw CharacteristicsError("characteristic controls must be positive");
  if (controls.fixed_step && !(*controls.fixed_step > 0.0))
    throw CharacteristicsError("fixed step must be positive");

  const System sys(spec);
  CharTrajectory traj;
  double tau = 0.0;
  State y{init.x0, init.u0, init.p0, init.g0};
  State f = sys(y);
  if (!finite(f)) {
    std::ostringstream msg;
    msg << "characteristic right-hand side is not finite at (x,u,p) = (" << y[0] << ", " << y[1] << ", " << y[2]
        << ")";
    throw CharacteristicsError(msg.str());
  }
  traj.states.push_back(to_char_state(tau, y));

  double h = controls.fixed_step ? *controls.fixed_step : controls.dt0;
  int stalled_steps = 0;
  std::size_t steps = 0;

  auto push_dense = [&](double tau0, const State& y0, const State& f0, double tau1, const State& y1,
                        const State& f1) {
    const double span = tau1 - tau0;
    if (std::isfinite(controls.max_sample_dtau) && span > controls.max_sample_dtau) {
      const int pieces = static_cast<int>(std::ceil(span / controls.max_sample_dtau));
      for (int k = 1; k < pieces; ++k) {
        const double theta = static_cast<double>(k) / pieces;
        State yi = hermite(y0, f0, y1, f1, span, theta);
        yi[0] = std::max(yi[0], y0[0]);
        traj.states.push_back(to_char_state(tau0 + theta * span, yi));
      }
    }
    traj.states.push_back(to_char_state(tau1, y1));
  };

  while (true) {
    if (steps >= controls.max_steps) {
      traj.termination = Termination::max_steps;
      break;
    }
    if (tau >= controls.tau_max) {
      // A stall run cut short by tau_max (steps grow fast when x' == 0) still counts.
      traj.termination = stalled_steps > 0 ? Termination::stalled : Termination::tau_max;
      break;
    }
    bool last_for_tau = false;
    if (tau + h >= controls.tau_max) {
      h = controls.tau_max - tau;
      last_for_tau = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(tau))) {
      std::ostringstream msg;
      msg << "step size underflow at tau = " << tau << " (x = " << y[0] << ", u = " << y[1] << ", p = " << y[2]
          << ")";
      throw CharacteristicsError(msg.str());
    }

    StepResult step = dopri_step(sys, y, f, h);
    double h_next = h;
    if (!controls.fixed_step) {
      const double err = finite(step.y) && finite(step.f_end) ? error_norm(step.err, y, step.y, controls.tol)
                                                              : std::numeric_limits<double>::infinity();
      if (!(err <= 1.0)) {
        const double shrink = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
        h *= shrink;
        continue;
      }
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
      h_next = h * grow;
    }
    if (step.y[0] < y[0]) {
      if (y[0] - step.y[0] <= controls.tol * (1.0 + std::abs(y[0])) || controls.fixed_step) {
        step.y[0] = y[0];
      } else {
        h *= 0.5;
        continue;
      }
    }
    ++steps;

    // Event: x crosses x_end inside this step.
    if (y[0] < controls.x_end && step.y[0] >= controls.x_end) {
      double lo = 0.0, hi = h;
      double hk = h * (controls.x_end - y[0]) / (step.y[0] - y[0]);
      StepResult ev = step;
      for (int it = 0; it < 50; ++it) {
        hk = std::clamp(hk, lo, hi);
        ev = dopri_step(sys, y, f, hk);
        const double r = ev.y[0] - controls.x_end;
        if (std::abs(r) <= 1e-14 * (1.0 + std::abs(controls.x_end))) break;
        if (r > 0.0)
          hi = hk;
        else
          lo = hk;
        const double xdot = ev.f_end[0];
        double next = xdot > 0.0 ? hk - r / xdot : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        hk = next;
      }
      ev.y[0] = controls.x_end;
      push_dense(tau, y, f, tau + hk, ev.y, ev.f_end);
      traj.termination = Termination::reached_x_end;
      break;
    }

    push_dense(tau, y, f, tau + h, step.y, step.f_end);
    tau = last_for_tau ? controls.tau_max : tau + h;
    y = step.y;
    f = step.f_end;

    if (!finite(y) || std::abs(y[2]) > controls.blowup_cap || std::abs(y[3]) > controls.blowup_cap) {
      traj.termination = Termination::blowup;
      break;
    }
    if (std::abs(f[0]) < controls.stall_eps) {
      if (++stalled_steps >= controls.stall_window) {
        traj.termination = Termination::stalled;
        break;
      }
    } else {
      stalled_steps = 0;
    }
    if (!controls.fixed_step) h = h_next;
  }
  return traj;
}

void write_trajectory_csv(std::ostream& os, const CharTrajectory& trajectory) {
  os << "tau,x,u,p,g\n";
  os.precision(17);
  for (const auto& s : trajectory.states) os << s.tau << ',' << s.x << ',' << s.u << ',' << s.p << ',' << s.g << '\n';
}

}  // namespace lyapkit
