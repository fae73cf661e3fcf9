#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapkit/closed_form.hpp"
#include "lyapkit/energy.hpp"
#include "lyapkit/g_provider.hpp"
#include "lyapkit/lagrangian.hpp"
#include "lyapkit/models.hpp"
#include "lyapkit/solver.hpp"

namespace lyapkit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named initial profiles, or node values read from a CSV file.
struct InitialCondition {
  /// sine: amplitude sin(mode pi x)
  /// polynomial_plus_sine: c0 + c1 x + ... + sine_amplitude sin(pi x), with
  ///   the square root taken when `sqrt` is set
  /// bump: max(0, height - scale (x - center)^2)
  /// constant: value; zero
  std::string profile = "zero";
  double amplitude = 1.0;
  int mode = 1;
  std::vector<double> coeffs;
  double sine_amplitude = 0.0;
  bool sqrt = false;
  double height = 0.5, center = 0.5, scale = 8.0;
  double value = 0.0;
  std::filesystem::path csv;

  std::vector<double> sample(const Grid1D& grid) const;
};

/// Axis of the construct-energy grid dump.
struct Axis {
  double lo = 0.0, hi = 1.0;
  int n = 3;
};

struct RunConfig {
  ModelDescriptor model;
  std::string g_mode = "analytic";  // analytic | reduced | tabulated
  std::optional<GNormalization> normalization;
  LagrangianOptions lagrangian;
  int n_cells = 128;
  double t_end = 0.01;
  SolverControls solver;
  std::optional<InitialCondition> initial_condition;
  SeedGrid seeds;
  TabulationControls tabulation;
  Axis dump_x{0.0, 1.0, 3}, dump_u{-1.0, 1.0, 5}, dump_p{-2.0, 2.0, 8};
  ClosedFormGrid compare;
  DecayTolerances verify;
  unsigned workers = 0;
  std::uint64_t seed = 0x5eed;
};

/// Fills defaults; relative CSV paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// The fully resolved configuration, as recorded in manifests.
nlohmann::json to_json(const RunConfig& config);

struct RunOutcome {
  int exit_code = 0;  // 0 pass, 1 error, 2 pass with warnings
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  nlohmann::json summary;
};

/// g provider for the configured mode; tabulated trajectories are returned
/// through `trajectories`.
GProvider make_g_provider(const RunConfig& config, const ProblemSpec& spec,
                          std::vector<CharTrajectory>* trajectories = nullptr);

/// lagrangian_grid.csv (x,u,p,L,L_p,L_pp) and lagrangian.json; tabulated
/// runs add g_snapshot.json and trajectories/seed_NNNN.csv.
RunOutcome run_construct_energy(const RunConfig& config, const std::filesystem::path& out);
/// trajectory.csv (t,x,u,ut) and manifest.json.
RunOutcome run_simulate(const RunConfig& config, const std::filesystem::path& out);
/// Simulates, builds L and writes energy.csv and verification.json (plus
/// standard_energy.csv for porous medium / filtration models).
RunOutcome run_verify(const RunConfig& config, const std::filesystem::path& out);
/// closed_form_comparison.csv and comparison.json.
RunOutcome run_compare_closed_form(const RunConfig& config, const std::filesystem::path& out);

}  // namespace lyapkit
