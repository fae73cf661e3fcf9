#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapkit/models.hpp"

namespace lyapkit {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Uniform nodes x_i = i dx on [0, 1], i = 0..n_cells.
struct Grid1D {
  explicit Grid1D(int n_cells);
  int n_cells;
  double dx;
  std::size_t nodes() const { return static_cast<std::size_t>(n_cells) + 1; }
  double x(std::size_t i) const { return static_cast<double>(i) * dx; }
};

struct StateFrame {
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> ut;  // rhs at u
};

struct SolverControls {
  double cfl_safety = 0.4;
  double dt_min = 1e-12;
  double dt_max = std::numeric_limits<double>::infinity();
  /// Overrides the CFL step (still clipped to land on t_end).
  std::optional<double> fixed_dt;
  std::size_t output_stride = 10;
  std::size_t max_steps = 50'000'000;
};

/// u_x at every node: central differences inside, the Robin value b(u) at a
/// Robin end and second-order one-sided differences at a Dirichlet end.
std::vector<double> node_gradients(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u);

/// u_xx at every node: central inside, through the Robin ghost node at a
/// Robin end, one-sided second order at a Dirichlet end.
std::vector<double> node_second_derivatives(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u);

/// Semi-discrete right-hand side u_t = G at every node. Dirichlet nodes get 0;
/// Robin ends use the ghost node u_{-1} = u_1 - 2 dx b(u_0) (mirrored on the
/// right). Specs with a flux potential use the divergence-form stencil.
std::vector<double> evaluate_rhs(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u);

/// Conservative stencil ((u^m)_{i+1} - 2 (u^m)_i + (u^m)_{i-1}) / dx^2 at
/// interior nodes, zero at the two ends. Throws SolverError (time 0) on u < 0
/// beyond a 1e-12 roundoff allowance.
std::vector<double> pme_rhs(std::span<const double> u, double m, double dx);

/// cfl_safety dx^2 / max_i |dG/dq| (at least f_q) at the current state.
double stable_dt(const ProblemSpec& spec, const Grid1D& grid, std::span<const double> u,
                 const SolverControls& controls = {});

/// One Heun step; the returned frame carries ut at the new state.
StateFrame step(const ProblemSpec& spec, const Grid1D& grid, const StateFrame& frame, double dt);

/// Frame with ut filled in; pins Dirichlet ends and checks the data.
StateFrame initial_frame(const ProblemSpec& spec, const Grid1D& grid, std::vector<double> u0);

struct SimulationResult {
  std::vector<StateFrame> frames;
  std::size_t steps = 0;
  double dt_min = 0.0, dt_max = 0.0, dt_mean = 0.0;
  std::string termination;  // "t_end_reached"
};

/// Steps from t = 0 to t_end under the CFL rule. Frames: the initial state,
/// every output_stride steps, and the state at t_end.
SimulationResult simulate(const ProblemSpec& spec, const Grid1D& grid, std::vector<double> u0, double t_end,
                          const SolverControls& controls = {});

/// Long format t,x,u,ut.
void write_frames_csv(std::ostream& os, const Grid1D& grid, const std::vector<StateFrame>& frames);

}  // namespace lyapkit
