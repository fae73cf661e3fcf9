#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lyapkit/characteristics.hpp"
#include "lyapkit/energy.hpp"
#include "lyapkit/lagrangian.hpp"
#include "lyapkit/models.hpp"
#include "lyapkit/pipeline.hpp"
#include "lyapkit/quadrature.hpp"
#include "lyapkit/solver.hpp"

namespace {

using namespace lyapkit;
namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Options& opts) {
  std::ifstream in(opts.config);
  if (!in) throw ConfigError("cannot open config " + opts.config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig config = parse_run_config(j, fs::path(opts.config).parent_path());
  if (opts.workers) config.workers = *opts.workers;
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

// Prefix naming the module an exception came from.
const char* module_of(const std::exception& e) {
  if (dynamic_cast<const ModelError*>(&e)) return "models";
  if (dynamic_cast<const CharacteristicsError*>(&e)) return "characteristics";
  if (dynamic_cast<const LagrangianError*>(&e)) return "lagrangian";
  if (dynamic_cast<const QuadratureError*>(&e)) return "lagrangian";
  if (dynamic_cast<const SolverError*>(&e)) return "solver";
  if (dynamic_cast<const EnergyError*>(&e)) return "energy";
  if (dynamic_cast<const ConfigError*>(&e)) return "cli";
  return "lyapkit";
}

int run(RunOutcome (*command)(const RunConfig&, const fs::path&), const Options& opts) {
  try {
    const RunOutcome outcome = command(load(opts), opts.out);
    for (const auto& n : outcome.notes) std::cout << "note: " << n << '\n';
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << outcome.summary.dump() << '\n';
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << module_of(e) << ": " << e.what() << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov functions for one-dimensional parabolic equations"};
  app.require_subcommand(1);
  Options opts;

  struct Command {
    const char* name;
    const char* help;
    RunOutcome (*fn)(const RunConfig&, const fs::path&);
  };
  const Command commands[] = {
      {"construct-energy", "build L on a grid and write lagrangian_grid.csv", run_construct_energy},
      {"simulate", "integrate the PDE and write trajectory.csv", run_simulate},
      {"verify", "simulate, then check energy decay", run_verify},
      {"compare-closed-form", "compare L with the model's closed form", run_compare_closed_form},
  };
  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opts.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--workers", opts.workers, "worker threads (0 = available parallelism)");
    sub->add_option("--seed", opts.seed, "seed for the Monte-Carlo spec validator");
    sub->callback([&chosen, &c] { chosen = &c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(chosen->fn, opts);
}
