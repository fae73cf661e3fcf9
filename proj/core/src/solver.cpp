#include "lyapkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace lyapkit {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

void pin(const ProblemSpec& spec, std::vector<double>& u) {
  if (!spec.bc_left.is_robin()) u.front() = spec.bc_left.value;
  if (!spec.bc_right.is_robin()) u.back() = spec.bc_right.value;
}

// Value with a ghost node on either side (index i in -1..n+1).
struct Ghosted {
  const ProblemSpec& spec;
  std::span<const double> u;
  double dx;
  double left_ghost = 0.0, right_ghost = 0.0;

  Ghosted(const ProblemSpec& s, std::span<const double> v, double h) : spec(s), u(v), dx(h) {
    const std::size_t n = u.size() - 1;
    if (spec.bc_left.is_robin()) left_ghost = u[1] - 2.0 * dx * spec.bc_left.b(u[0]);
    if (spec.bc_right.is_robin()) right_ghost = u[n - 1] + 2.0 * dx * spec.bc_right.b(u[n]);
  }
  double operator[](std::ptrdiff_t i) const {
    if (i < 0) return left_ghost;
    if (static_cast<std::size_t>(i) >= u.size()) return right_ghost;
    return u[static_cast<std::size_t>(i)];
  }
};

// p and q at node i from the (ghosted) central stencil.
void derivatives(const Ghosted& g, std::size_t i, double& p, double& q) {
  const auto k = static_cast<std::ptrdiff_t>(i);
  p = (g[k + 1] - g[k - 1]) / (2.0 * g.dx);
  q = (g[k + 1] - 2.0 * g[k] + g[k - 1]) / (g.dx * g.dx);
}

bool active(const ProblemSpec& spec, std::size_t i, std::size_t n) {
  if (i == 0) return spec.bc_left.is_robin();
  if (i == n) return spec.bc_right.is_robin();
  return true;
}

}  // namespace

Grid1D::Grid1D(int n) : n_cells(n), dx(0.0) {
  if (n < 8) throw std::invalid_argument("grid needs at least 8 cells");
  dx = 1.0 / n;
}

std::vector<double> node_gradients(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u) {
  const std::size_t n = u.size() - 1;
  std::vector<double> p(u.size());
  for (std::size_t i = 1; i < n; ++i) p[i] = (u[i + 1] - u[i - 1]) / (2.0 * grid.dx);
  p[0] = spec.bc_left.is_robin() ? spec.bc_left.b(u[0]) : (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * grid.dx);
  p[n] = spec.bc_right.is_robin() ? spec.bc_right.b(u[n])
                                  : (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * grid.dx);
  return p;
}

std::vector<double> node_second_derivatives(const ProblemSpec& spec, const Grid1D& grid,
                                            std::span<const double> u) {
  const std::size_t n = u.size() - 1;
  const Ghosted g(spec, u, grid.dx);
  const double h2 = grid.dx * grid.dx;
  std::vector<double> q(u.size());
  for (std::size_t i = 0; i <= n; ++i) {
    if (active(spec, i, n)) {
      double p;
      derivatives(g, i, p, q[i]);
    } else if (i == 0) {
      q[i] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    } else {
      q[i] = (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / h2;
    }
  }
  return q;
}

std::vector<double> pme_rhs(std::span<const double> u, double m, double dx) {
  std::vector<double> out(u.size(), 0.0);
  std::vector<double> phi(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < -1e-12) {
      std::ostringstream msg;
      msg << "porous medium stencil needs u >= 0, got u[" << i << "] = " << u[i];
      throw SolverError(msg.str(), 0.0);
    }
    phi[i] = std::pow(std::max(u[i], 0.0), m);
  }
  for (std::size_t i = 1; i + 1 < u.size(); ++i) out[i] = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (dx * dx);
  return out;
}

std::vector<double> evaluate_rhs(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u) {
  if (u.size() != grid.nodes()) throw std::invalid_argument("state size does not match the grid");
  const std::size_t n = u.size() - 1;
  const Ghosted g(spec, u, grid.dx);
  std::vector<double> out(u.size(), 0.0);
  if (spec.flux_potential) {
    if (spec.nonnegative_state)
      for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] < -1e-12) {
          std::ostringstream msg;
          msg << "state must stay non-negative, got u[" << i << "] = " << u[i];
          throw SolverError(msg.str(), 0.0);
        }
    const auto phi = [&](std::ptrdiff_t i) { return spec.flux_potential(g[i]); };
    for (std::size_t i = 0; i <= n; ++i) {
      if (!active(spec, i, n)) continue;
      const auto k = static_cast<std::ptrdiff_t>(i);
      out[i] = (phi(k + 1) - 2.0 * phi(k) + phi(k - 1)) / (grid.dx * grid.dx);
    }
    return out;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    if (!active(spec, i, n)) continue;
    double p, q;
    derivatives(g, i, p, q);
    out[i] = spec.rhs(grid.x(i), u[i], p, q);
  }
  return out;
}

double stable_dt(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u,
                 const SolverControls& controls) {
  const std::size_t n = u.size() - 1;
  const Ghosted g(spec, u, grid.dx);
  double coeff = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    if (!active(spec, i, n)) continue;
    double p, q;
    derivatives(g, i, p, q);
    const double x = grid.x(i);
    const double dq = 1e-6 * (1.0 + std::abs(q));
    const double slope = (spec.rhs(x, u[i], p, q + dq) - spec.rhs(x, u[i], p, q - dq)) / (2.0 * dq);
    double c = std::max(spec.diffusion(x, u[i], p), std::abs(slope));
    if (!std::isfinite(c)) c = std::numeric_limits<double>::infinity();
    coeff = std::max(coeff, c);
  }
  if (coeff == 0.0) return controls.dt_max;
  return std::min(controls.dt_max, controls.cfl_safety * grid.dx * grid.dx / coeff);
}

StateFrame initial_frame(const ProblemSpec& spec, const Grid1D& grid, std::vector<double> u0) {
  if (u0.size() != grid.nodes()) throw SolverError("initial data size does not match the grid", 0.0);
  if (!all_finite(u0)) throw SolverError("initial data is not finite", 0.0);
  auto check_end = [](const BoundaryCondition& bc, double v, const char* side) {
    if (!bc.is_robin() && std::abs(v - bc.value) > 1e-9) {
      std::ostringstream msg;
      msg << "initial data violates the Dirichlet condition at the " << side << " end (u = " << v << ", expected "
          << bc.value << ")";
      throw SolverError(msg.str(), 0.0);
    }
  };
  check_end(spec.bc_left, u0.front(), "left");
  check_end(spec.bc_right, u0.back(), "right");
  if (spec.nonnegative_state)
    for (double v : u0)
      if (v < 0.0) throw SolverError("initial data must be non-negative for this model", 0.0);
  pin(spec, u0);
  StateFrame f;
  f.t = 0.0;
  f.ut = evaluate_rhs(spec, grid, u0);
  f.u = std::move(u0);
  return f;
}

StateFrame step(const ProblemSpec& spec, const Grid1D& grid, const StateFrame& frame, double dt) {
  const std::size_t n = frame.u.size();
  const std::vector<double> k1 = frame.ut.size() == n ? frame.ut : evaluate_rhs(spec, grid, frame.u);

  auto clamp_state = [&](std::vector<double>& u) {
    pin(spec, u);
    if (spec.nonnegative_state)
      for (auto& v : u)
        if (v < 0.0 && v >= -1e-12) v = 0.0;
  };

  StateFrame out;
  out.t = frame.t + dt;
  try {
    std::vector<double> mid(n);
    for (std::size_t i = 0; i < n; ++i) mid[i] = frame.u[i] + dt * k1[i];
    clamp_state(mid);
    const std::vector<double> k2 = evaluate_rhs(spec, grid, mid);
    out.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.u[i] = frame.u[i] + 0.5 * dt * (k1[i] + k2[i]);
    clamp_state(out.u);
    if (!all_finite(out.u)) throw SolverError("non-finite state", out.t);
    out.ut = evaluate_rhs(spec, grid, out.u);
    if (!all_finite(out.ut)) throw SolverError("non-finite right-hand side", out.t);
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << "step from t = " << frame.t << " with dt = " << dt << " failed: " << e.what();
    throw SolverError(msg.str(), out.t);
  }
  return out;
}

SimulationResult simulate(const ProblemSpec& spec, const Grid1D& grid, std::vector<double> u0, double t_end,
                          const SolverControls& controls) {
  if (!(t_end >= 0.0)) throw SolverError("t_end must be non-negative", 0.0);
  if (controls.output_stride == 0) throw SolverError("output_stride must be positive", 0.0);
  SimulationResult res;
  StateFrame frame = initial_frame(spec, grid, std::move(u0));
  res.frames.push_back(frame);

  double dt_sum = 0.0;
  res.dt_min = std::numeric_limits<double>::infinity();
  while (frame.t < t_end) {
    if (res.steps >= controls.max_steps) throw SolverError("step limit reached", frame.t);
    double dt = controls.fixed_dt ? *controls.fixed_dt : stable_dt(spec, grid, frame.u, controls);
    // Vanishing diffusion with no dt_max: nothing limits the step.
    if (dt == std::numeric_limits<double>::infinity()) dt = t_end - frame.t;
    if (!(dt >= controls.dt_min) || !std::isfinite(dt)) {
      std::ostringstream msg;
      msg << "time step " << dt << " below the floor " << controls.dt_min << " at t = " << frame.t;
      throw SolverError(msg.str(), frame.t);
    }
    const bool last = frame.t + dt >= t_end * (1.0 - 1e-14);
    if (last) dt = t_end - frame.t;
    if (dt <= 0.0) break;
    frame = step(spec, grid, frame, dt);
    if (last) frame.t = t_end;
    ++res.steps;
    dt_sum += dt;
    res.dt_max = std::max(res.dt_max, dt);
    if (!last) res.dt_min = std::min(res.dt_min, dt);
    if (last || res.steps % controls.output_stride == 0) res.frames.push_back(frame);
  }
  if (!std::isfinite(res.dt_min)) res.dt_min = res.dt_max;
  res.dt_mean = res.steps ? dt_sum / static_cast<double>(res.steps) : 0.0;
  res.termination = "t_end_reached";
  return res;
}

void write_frames_csv(std::ostream& os, const Grid1D& grid, const std::vector<StateFrame>& frames) {
  os << "t,x,u,ut\n";
  os.precision(17);
  for (const auto& f : frames)
    for (std::size_t i = 0; i < f.u.size(); ++i) os << f.t << ',' << grid.x(i) << ',' << f.u[i] << ',' << f.ut[i] << '\n';
}

}  // namespace lyapkit
