#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyapkit/models.hpp"

namespace lyapkit {

class CharacteristicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One point (x, u, p, g) on a characteristic, at parameter tau.
struct CharState {
  double tau = 0.0;
  double x = 0.0;
  double u = 0.0;
  double p = 0.0;
  double g = 0.0;
};

enum class Termination { reached_x_end, stalled, blowup, max_steps, tau_max };

std::string to_string(Termination t);

struct CharTrajectory {
  std::vector<CharState> states;
  Termination termination = Termination::tau_max;
};

struct CharInit {
  double u0 = 0.0;
  double p0 = 0.0;
  double g0 = 0.0;
  double x0 = 0.0;
};

struct CharControls {
  double dt0 = 1e-3;
  double tol = 1e-8;
  double tau_max = 50.0;
  double x_end = 1.0;
  double stall_eps = 1e-12;
  int stall_window = 50;
  double blowup_cap = 1e8;
  std::size_t max_steps = 1'000'000;
  /// Fixed step size; disables error control when set.
  std::optional<double> fixed_step;
  /// Extra samples are interpolated so consecutive states are at most this
  /// far apart in tau.
  double max_sample_dtau = std::numeric_limits<double>::infinity();
};

/// Right-hand side of the characteristic system in tau (or in the rescaled
/// parameter when the spec carries a rescale factor):
///   x' = f_q, u' = f_q p, p' = F^0, g' = -F^0_p - f_qx - p f_qu.
struct CharDerivative {
  double x, u, p, g;
};
CharDerivative characteristic_rhs(const ProblemSpec& spec, double x, double u, double p);

/// Adaptive Dormand-Prince 5(4) integration from x0 until x reaches x_end,
/// the trajectory stalls (|x'| < stall_eps for stall_window accepted steps),
/// |p| or |g| exceed blowup_cap, or tau_max is reached. The final state lands
/// on x_end exactly when that event fires. Throws CharacteristicsError on
/// step-size underflow.
CharTrajectory integrate_characteristics(const ProblemSpec& spec, const CharInit& init,
                                         const CharControls& controls = {});

/// Writes tau,x,u,p,g with a header line.
void write_trajectory_csv(std::ostream& os, const CharTrajectory& trajectory);

}  // namespace lyapkit
