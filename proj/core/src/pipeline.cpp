#include "lyapkit/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace lyapkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON helpers

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::pair<double, double> range(const json& j, const char* key, std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
    throw ConfigError(std::string("'") + key + "' must be [lo, hi]");
  const double lo = r[0].get<double>(), hi = r[1].get<double>();
  if (!(lo <= hi)) throw ConfigError(std::string("'") + key + "' needs lo <= hi");
  return {lo, hi};
}

Axis axis(const json& j, const char* key, Axis fallback) {
  if (!j.contains(key)) return fallback;
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 3) throw ConfigError(std::string("'") + key + "' must be [lo, hi, n]");
  Axis a{r[0].get<double>(), r[1].get<double>(), r[2].get<int>()};
  if (a.n < 1 || !(a.lo <= a.hi)) throw ConfigError(std::string("'") + key + "' needs lo <= hi and n >= 1");
  return a;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n == 1) return {0.5 * (lo + hi)};
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

std::vector<double> values_of(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  if (v.is_object()) {
    check_keys(v, {"lo", "hi", "n"}, std::string("'") + key + "'");
    const int n = v.value("n", 9);
    if (n < 1) throw ConfigError(std::string("'") + key + "' needs n >= 1");
    return linspace(number(v, "lo", 0.0), number(v, "hi", 1.0), n);
  }
  throw ConfigError(std::string("'") + key + "' must be an array or {lo, hi, n}");
}

InitialCondition parse_initial_condition(const json& j, const fs::path& base_dir) {
  check_keys(j, {"profile", "amplitude", "mode", "coeffs", "sine_amplitude", "sqrt", "height", "center", "scale",
                 "value", "csv"},
             "initial_condition");
  InitialCondition ic;
  if (j.contains("csv")) {
    ic.profile = "csv";
    ic.csv = j.at("csv").get<std::string>();
    if (ic.csv.is_relative() && !base_dir.empty()) ic.csv = base_dir / ic.csv;
    if (!fs::exists(ic.csv)) throw ConfigError("initial condition file not found: " + ic.csv.string());
    return ic;
  }
  ic.profile = j.value("profile", std::string("zero"));
  static const std::set<std::string> known{"sine", "polynomial_plus_sine", "bump", "constant", "zero"};
  if (!known.count(ic.profile)) throw ConfigError("unknown initial profile '" + ic.profile + "'");
  ic.amplitude = number(j, "amplitude", 1.0);
  ic.mode = j.value("mode", 1);
  if (j.contains("coeffs")) ic.coeffs = j.at("coeffs").get<std::vector<double>>();
  ic.sine_amplitude = number(j, "sine_amplitude", 0.0);
  ic.sqrt = j.value("sqrt", false);
  ic.height = number(j, "height", 0.5);
  ic.center = number(j, "center", 0.5);
  ic.scale = number(j, "scale", 8.0);
  ic.value = number(j, "value", 0.0);
  return ic;
}

json ic_to_json(const InitialCondition& ic) {
  if (ic.profile == "csv") return {{"csv", ic.csv.string()}};
  json j{{"profile", ic.profile}};
  if (ic.profile == "sine") {
    j["amplitude"] = ic.amplitude;
    j["mode"] = ic.mode;
  } else if (ic.profile == "polynomial_plus_sine") {
    j["coeffs"] = ic.coeffs;
    j["sine_amplitude"] = ic.sine_amplitude;
    j["sqrt"] = ic.sqrt;
  } else if (ic.profile == "bump") {
    j["height"] = ic.height;
    j["center"] = ic.center;
    j["scale"] = ic.scale;
  } else if (ic.profile == "constant") {
    j["value"] = ic.value;
  }
  return j;
}

json axis_json(const Axis& a) { return json::array({a.lo, a.hi, a.n}); }

// ---------------------------------------------------------------------------
// Output helpers

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  writer(os);
  if (!os) throw ConfigError("error while writing " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& os) { os << std::setw(2) << j << '\n'; });
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
}

json g_summary(const GProvider& g) {
  json j{{"mode", to_string(g.kind())}};
  if (const auto norm = g.normalization())
    j["normalization"] = {{"p0", norm->p0}, {"g0", norm->g0}};
  else
    j["normalization"] = nullptr;
  if (g.kind() == GProvider::Kind::tabulated) {
    j["coverage"] = g.coverage();
    j["low_coverage"] = g.low_coverage();
    j["extrapolations"] = g.extrapolations();
    j["samples"] = g.sample_count();
  }
  return j;
}

void coverage_warnings(const GProvider& g, RunOutcome& outcome) {
  if (g.low_coverage()) {
    std::ostringstream msg;
    msg << "characteristics: tabulated g covers " << g.coverage() << " of the query box (below coverage_min)";
    outcome.warnings.push_back(msg.str());
  }
  if (g.extrapolations() > 0) {
    std::ostringstream msg;
    msg << "characteristics: " << g.extrapolations() << " g queries fell outside the covered region";
    outcome.warnings.push_back(msg.str());
  }
}

void finish(RunOutcome& outcome) {
  if (outcome.exit_code == 0 && !outcome.warnings.empty()) outcome.exit_code = 2;
  outcome.summary["warnings"] = outcome.warnings;
  outcome.summary["notes"] = outcome.notes;
  outcome.summary["exit_code"] = outcome.exit_code;
}

SimulationResult run_solver(const RunConfig& config, const ProblemSpec& spec, const Grid1D& grid,
                            const fs::path& out, bool write_outputs) {
  if (!config.initial_condition) throw ConfigError("simulation needs an initial_condition");
  const auto u0 = config.initial_condition->sample(grid);
  json manifest{{"config", to_json(config)},
                {"grid", {{"n_cells", grid.n_cells}, {"dx", grid.dx}}},
                {"t_end", config.t_end}};
  try {
    SimulationResult sim = simulate(spec, grid, u0, config.t_end, config.solver);
    if (write_outputs) {
      manifest["termination"] = sim.termination;
      manifest["steps"] = sim.steps;
      manifest["frames"] = sim.frames.size();
      manifest["dt"] = {{"min", sim.dt_min}, {"max", sim.dt_max}, {"mean", sim.dt_mean}};
      write_file(out / "trajectory.csv", [&](std::ostream& os) { write_frames_csv(os, grid, sim.frames); });
      write_json(out / "manifest.json", manifest);
    }
    return sim;
  } catch (const SolverError& e) {
    manifest["termination"] = "error";
    manifest["error"] = e.what();
    manifest["error_time"] = e.time();
    write_json(out / "manifest.json", manifest);
    throw;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> InitialCondition::sample(const Grid1D& grid) const {
  std::vector<double> u(grid.nodes());
  if (profile == "csv") {
    std::ifstream in(csv);
    if (!in) throw ConfigError("cannot read initial condition file " + csv.string());
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find_last_of(',');
      const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        vals.push_back(v);
      } catch (const std::exception&) {
        if (!vals.empty()) throw ConfigError("non-numeric value in " + csv.string() + ": " + line);
      }
    }
    if (vals.size() != u.size()) {
      std::ostringstream msg;
      msg << "initial condition file has " << vals.size() << " values, grid has " << u.size() << " nodes";
      throw ConfigError(msg.str());
    }
    return vals;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = grid.x(i);
    double v = 0.0;
    if (profile == "sine") {
      v = amplitude * std::sin(mode * std::numbers::pi * x);
    } else if (profile == "polynomial_plus_sine") {
      v = Polynomial{coeffs}(x) + sine_amplitude * std::sin(std::numbers::pi * x);
      if (sqrt) v = std::sqrt(std::max(v, 0.0));
    } else if (profile == "bump") {
      v = std::max(0.0, height - scale * (x - center) * (x - center));
    } else if (profile == "constant") {
      v = value;
    }
    u[i] = v;
  }
  // Exact zeros where sin(k pi x) hits the ends.
  if (profile == "sine") u.front() = u.back() = 0.0;
  return u;
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  check_keys(j, {"model", "g_mode", "normalization", "lagrangian", "grid", "time", "initial_condition", "seed_grid",
                 "tabulation", "dump", "compare", "verify", "workers", "seed"},
             "config");
  if (!j.contains("model")) throw ConfigError("config needs a 'model' descriptor");
  RunConfig c;
  c.model = parse_model_descriptor(j.at("model"));
  const ProblemSpec spec = instantiate(c.model);
  const bool nonneg = spec.nonnegative_state;

  c.g_mode = j.value("g_mode", std::string("analytic"));
  if (c.g_mode != "analytic" && c.g_mode != "reduced" && c.g_mode != "tabulated")
    throw ConfigError("g_mode must be analytic, reduced or tabulated");
  if (j.contains("normalization") && !j.at("normalization").is_null()) {
    const auto& n = j.at("normalization");
    check_keys(n, {"p0", "g0"}, "normalization");
    c.normalization = GNormalization{number(n, "p0", 1.0), number(n, "g0", 0.0)};
  }

  if (j.contains("lagrangian")) {
    const auto& l = j.at("lagrangian");
    check_keys(l, {"p_base", "p_star", "quad_tol", "fd_step"}, "lagrangian");
    c.lagrangian.p_base = optional_number(l, "p_base");
    c.lagrangian.p_star = optional_number(l, "p_star");
    c.lagrangian.quad_tol = number(l, "quad_tol", 1e-9);
    c.lagrangian.fd_step = number(l, "fd_step", 1e-3);
    if (!(c.lagrangian.quad_tol > 0.0)) throw ConfigError("quad_tol must be positive");
  }

  if (j.contains("grid")) {
    check_keys(j.at("grid"), {"n_cells"}, "grid");
    c.n_cells = j.at("grid").value("n_cells", 128);
  }
  if (c.n_cells < 8 || c.n_cells > 4096) throw ConfigError("grid.n_cells must be in [8, 4096]");

  if (j.contains("time")) {
    const auto& t = j.at("time");
    check_keys(t, {"t_end", "output_stride", "cfl_safety", "dt_min", "dt_max", "fixed_dt"}, "time");
    c.t_end = number(t, "t_end", c.t_end);
    c.solver.output_stride = t.value("output_stride", c.solver.output_stride);
    c.solver.cfl_safety = number(t, "cfl_safety", c.solver.cfl_safety);
    c.solver.dt_min = number(t, "dt_min", c.solver.dt_min);
    c.solver.dt_max = number(t, "dt_max", c.solver.dt_max);
    c.solver.fixed_dt = optional_number(t, "fixed_dt");
  }
  if (!(c.t_end >= 0.0)) throw ConfigError("time.t_end must be non-negative");
  if (c.solver.output_stride == 0) throw ConfigError("time.output_stride must be positive");
  if (!(c.solver.cfl_safety > 0.0 && c.solver.cfl_safety <= 0.5)) throw ConfigError("time.cfl_safety must be in (0, 0.5]");

  if (j.contains("initial_condition")) c.initial_condition = parse_initial_condition(j.at("initial_condition"), base_dir);

  // Tabulation: query box first, the seed defaults span it.
  QueryBox& box = c.tabulation.box;
  if (nonneg) {
    box.u_lo = 0.1;
    box.u_hi = 1.0;
  }
  if (j.contains("tabulation")) {
    const auto& t = j.at("tabulation");
    check_keys(t, {"query_box", "coverage_min", "coverage_radius", "neighbors", "power", "characteristics"},
               "tabulation");
    if (t.contains("query_box")) {
      const auto& b = t.at("query_box");
      check_keys(b, {"x", "u", "p", "probes_per_axis"}, "query_box");
      std::tie(box.x_lo, box.x_hi) = range(b, "x", {box.x_lo, box.x_hi});
      std::tie(box.u_lo, box.u_hi) = range(b, "u", {box.u_lo, box.u_hi});
      std::tie(box.p_lo, box.p_hi) = range(b, "p", {box.p_lo, box.p_hi});
      box.probes_per_axis = b.value("probes_per_axis", box.probes_per_axis);
    }
    c.tabulation.coverage_min = number(t, "coverage_min", c.tabulation.coverage_min);
    c.tabulation.coverage_radius = number(t, "coverage_radius", c.tabulation.coverage_radius);
    c.tabulation.neighbors = t.value("neighbors", c.tabulation.neighbors);
    c.tabulation.power = number(t, "power", c.tabulation.power);
    if (t.contains("characteristics")) {
      const auto& ch = t.at("characteristics");
      check_keys(ch, {"dt0", "tol", "tau_max", "stall_eps", "stall_window", "blowup_cap", "max_sample_dtau"},
                 "characteristics");
      auto& cc = c.tabulation.characteristics;
      cc.dt0 = number(ch, "dt0", cc.dt0);
      cc.tol = number(ch, "tol", cc.tol);
      cc.tau_max = number(ch, "tau_max", cc.tau_max);
      cc.stall_eps = number(ch, "stall_eps", cc.stall_eps);
      cc.stall_window = ch.value("stall_window", cc.stall_window);
      cc.blowup_cap = number(ch, "blowup_cap", cc.blowup_cap);
      cc.max_sample_dtau = number(ch, "max_sample_dtau", 0.02);
    }
  }
  if (!std::isfinite(c.tabulation.characteristics.max_sample_dtau)) c.tabulation.characteristics.max_sample_dtau = 0.02;
  if (c.tabulation.neighbors == 0) throw ConfigError("tabulation.neighbors must be positive");

  const json seeds = j.value("seed_grid", json::object());
  check_keys(seeds, {"u0", "p0"}, "seed_grid");
  c.seeds.u0 = values_of(seeds, "u0", linspace(box.u_lo, box.u_hi, 9));
  c.seeds.p0 = values_of(seeds, "p0", linspace(box.p_lo, box.p_hi, 9));

  if (nonneg) c.dump_u = {0.1, 1.0, 5};
  if (j.contains("dump")) {
    const auto& d = j.at("dump");
    check_keys(d, {"x", "u", "p"}, "dump");
    c.dump_x = axis(d, "x", c.dump_x);
    c.dump_u = axis(d, "u", c.dump_u);
    c.dump_p = axis(d, "p", c.dump_p);
  }

  if (nonneg) {
    c.compare.u_lo = 0.1;
    c.compare.u_hi = 1.0;
  }
  if (j.contains("compare")) {
    const auto& cm = j.at("compare");
    check_keys(cm, {"x", "u", "p", "n_u", "n_p", "p_exclude"}, "compare");
    c.compare.x = number(cm, "x", c.compare.x);
    std::tie(c.compare.u_lo, c.compare.u_hi) = range(cm, "u", {c.compare.u_lo, c.compare.u_hi});
    std::tie(c.compare.p_lo, c.compare.p_hi) = range(cm, "p", {c.compare.p_lo, c.compare.p_hi});
    c.compare.n_u = cm.value("n_u", c.compare.n_u);
    c.compare.n_p = cm.value("n_p", c.compare.n_p);
    c.compare.p_exclude = number(cm, "p_exclude", c.compare.p_exclude);
  }

  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    check_keys(v, {"tol_mono", "tol_consistency", "mask_threshold"}, "verify");
    c.verify.monotonicity = number(v, "tol_mono", c.verify.monotonicity);
    c.verify.consistency = number(v, "tol_consistency", c.verify.consistency);
    c.verify.mask_threshold = number(v, "mask_threshold", c.verify.mask_threshold);
  }
  c.workers = j.value("workers", 0u);
  c.seed = j.value("seed", c.seed);
  return c;
}

json to_json(const RunConfig& c) {
  const auto& cc = c.tabulation.characteristics;
  const auto& b = c.tabulation.box;
  json j;
  j["model"] = to_json(c.model);
  j["g_mode"] = c.g_mode;
  j["normalization"] = c.normalization ? json{{"p0", c.normalization->p0}, {"g0", c.normalization->g0}} : json(nullptr);
  j["lagrangian"] = {{"p_base", c.lagrangian.p_base ? json(*c.lagrangian.p_base) : json(nullptr)},
                     {"p_star", c.lagrangian.p_star ? json(*c.lagrangian.p_star) : json(nullptr)},
                     {"quad_tol", c.lagrangian.quad_tol},
                     {"fd_step", c.lagrangian.fd_step}};
  j["grid"] = {{"n_cells", c.n_cells}};
  j["time"] = {{"t_end", c.t_end},
               {"output_stride", c.solver.output_stride},
               {"cfl_safety", c.solver.cfl_safety},
               {"dt_min", c.solver.dt_min},
               {"dt_max", std::isfinite(c.solver.dt_max) ? json(c.solver.dt_max) : json(nullptr)},
               {"fixed_dt", c.solver.fixed_dt ? json(*c.solver.fixed_dt) : json(nullptr)}};
  j["initial_condition"] = c.initial_condition ? ic_to_json(*c.initial_condition) : json(nullptr);
  j["seed_grid"] = {{"u0", c.seeds.u0}, {"p0", c.seeds.p0}};
  j["tabulation"] = {{"query_box",
                      {{"x", {b.x_lo, b.x_hi}}, {"u", {b.u_lo, b.u_hi}}, {"p", {b.p_lo, b.p_hi}},
                       {"probes_per_axis", b.probes_per_axis}}},
                     {"coverage_min", c.tabulation.coverage_min},
                     {"coverage_radius", c.tabulation.coverage_radius},
                     {"neighbors", c.tabulation.neighbors},
                     {"power", c.tabulation.power},
                     {"characteristics",
                      {{"dt0", cc.dt0},
                       {"tol", cc.tol},
                       {"tau_max", cc.tau_max},
                       {"stall_eps", cc.stall_eps},
                       {"stall_window", cc.stall_window},
                       {"blowup_cap", cc.blowup_cap},
                       {"max_sample_dtau", cc.max_sample_dtau}}}};
  j["dump"] = {{"x", axis_json(c.dump_x)}, {"u", axis_json(c.dump_u)}, {"p", axis_json(c.dump_p)}};
  j["compare"] = {{"x", c.compare.x},
                  {"u", {c.compare.u_lo, c.compare.u_hi}},
                  {"p", {c.compare.p_lo, c.compare.p_hi}},
                  {"n_u", c.compare.n_u},
                  {"n_p", c.compare.n_p},
                  {"p_exclude", c.compare.p_exclude}};
  j["verify"] = {{"tol_mono", c.verify.monotonicity},
                 {"tol_consistency", c.verify.consistency},
                 {"mask_threshold", c.verify.mask_threshold}};
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  return j;
}

GProvider make_g_provider(const RunConfig& config, const ProblemSpec& spec, std::vector<CharTrajectory>* trajectories) {
  if (config.g_mode == "analytic") return GProvider::from_oracle(config.model.model, config.normalization);
  if (config.g_mode == "reduced") return GProvider::reduced(spec, config.normalization.value_or(GNormalization{}));
  TabulationControls controls = config.tabulation;
  controls.workers = config.workers;
  return GProvider::tabulate(spec, config.seeds, controls, trajectories);
}

RunOutcome run_construct_energy(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  RunOutcome outcome;
  const ProblemSpec spec = instantiate(config.model);

  const auto& b = config.tabulation.box;
  const ValidationReport validation =
      validate_spec(spec, {b.x_lo, b.x_hi, b.u_lo, b.u_hi, b.p_lo, b.p_hi, -1.0, 1.0}, 1000, config.seed);
  if (!validation.ok()) {
    std::ostringstream msg;
    msg << "models: " << validation.violations.size() << " spec invariant violations (first: "
        << validation.violations.front().invariant << ")";
    outcome.warnings.push_back(msg.str());
  }

  std::vector<CharTrajectory> trajectories;
  const GProvider g = make_g_provider(config, spec, &trajectories);
  if (g.kind() == GProvider::Kind::tabulated) {
    const fs::path dir = out / "trajectories";
    fs::create_directories(dir);
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      std::ostringstream name;
      name << "seed_" << std::setw(4) << std::setfill('0') << k << ".csv";
      write_file(dir / name.str(), [&](std::ostream& os) { write_trajectory_csv(os, trajectories[k]); });
    }
    write_json(out / "g_snapshot.json", g.snapshot());
  }

  const Lagrangian lag = Lagrangian::build(spec, g, config.lagrangian);

  const auto xs = linspace(config.dump_x.lo, config.dump_x.hi, config.dump_x.n);
  const auto us = linspace(config.dump_u.lo, config.dump_u.hi, config.dump_u.n);
  const auto ps = linspace(config.dump_p.lo, config.dump_p.hi, config.dump_p.n);
  std::size_t undefined = 0;
  write_file(out / "lagrangian_grid.csv", [&](std::ostream& os) {
    os << "x,u,p,L,L_p,L_pp\n";
    os.precision(17);
    for (double x : xs)
      for (double u : us)
        for (double p : ps) {
          os << x << ',' << u << ',' << p;
          for (auto fn : {&Lagrangian::L, &Lagrangian::Lp, &Lagrangian::Lpp}) {
            double v;
            try {
              v = (lag.*fn)(x, u, p);
            } catch (const LagrangianError&) {
              v = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(v)) ++undefined;
            os << ',' << v;
          }
          os << '\n';
        }
  });
  if (undefined > 0)
    outcome.notes.push_back("lagrangian: " + std::to_string(undefined) +
                            " grid values are undefined (written as nan), e.g. L_p at a singular base");

  json sidecar = lag.describe();
  sidecar["g"] = g_summary(g);
  sidecar["validation"] = {{"samples", validation.samples}, {"violations", validation.violations.size()}};

  const ModelOracle oracle = oracle_for(config.model.model);
  if (oracle.lagrangian && g.kind() == GProvider::Kind::tabulated) {
    sidecar["closed_form"] = {{"note", "skipped for tabulated g; use compare-closed-form"}};
  } else if (oracle.lagrangian) {
    const ClosedFormComparison cmp = compare_closed_form(lag, oracle, config.compare);
    sidecar["closed_form"] = {{"formula", cmp.formula}, {"max_residual_after_affine_fit", cmp.max_residual}};
    if (cmp.discrepancy_checked)
      sidecar["closed_form"]["discrepancy"] = {{"term", cmp.discrepancy_term},
                                               {"printed_coefficient", cmp.printed_coefficient},
                                               {"fitted_coefficient", cmp.fitted_coefficient}};
    outcome.summary["closed_form_max_residual"] = cmp.max_residual;
  } else if (!oracle.note.empty()) {
    sidecar["closed_form"] = {{"note", oracle.note}};
    outcome.notes.push_back(oracle.note);
  }
  coverage_warnings(g, outcome);
  sidecar["g"]["extrapolations"] = g.extrapolations();
  sidecar["config"] = to_json(config);
  write_json(out / "lagrangian.json", sidecar);

  outcome.summary["p_base"] = lag.info().p_base;
  outcome.summary["p_star"] = lag.info().p_star;
  finish(outcome);
  return outcome;
}

RunOutcome run_simulate(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  RunOutcome outcome;
  const ProblemSpec spec = instantiate(config.model);
  const Grid1D grid(config.n_cells);
  const SimulationResult sim = run_solver(config, spec, grid, out, true);
  outcome.summary["termination"] = sim.termination;
  outcome.summary["steps"] = sim.steps;
  outcome.summary["frames"] = sim.frames.size();
  finish(outcome);
  return outcome;
}

RunOutcome run_verify(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  RunOutcome outcome;
  const ProblemSpec spec = instantiate(config.model);
  const Grid1D grid(config.n_cells);
  const SimulationResult sim = run_solver(config, spec, grid, out, true);

  const GProvider g = make_g_provider(config, spec);
  const Lagrangian lag = Lagrangian::build(spec, g, config.lagrangian);
  const ModelOracle oracle = oracle_for(config.model.model);
  const EnergyTrace trace = build_energy_trace(lag, oracle, grid, sim.frames, config.workers);
  const DecayReport report = verify_decay(trace, config.verify);
  write_file(out / "energy.csv", [&](std::ostream& os) { write_energy_csv(os, trace); });

  json verification = to_json(report);
  verification["lagrangian"] = lag.describe();
  verification["g"] = g_summary(g);
  double worst_mask = 0.0;
  for (double m : trace.mask_fraction) worst_mask = std::max(worst_mask, m);
  verification["summary"]["max_mask_fraction"] = worst_mask;
  bool monotone = report.monotone;
  bool clean = report.ok();

  std::optional<StandardTrace> standard;
  if (spec.flux_potential) {
    const auto a = spec.flux_potential;
    const bool lift = !spec.bc_left.is_robin() && !spec.bc_right.is_robin();
    if (spec.pme_exponent > 0.0) {
      const double m = spec.pme_exponent;
      standard = build_standard_trace("porous_medium_standard", sim.frames,
                                      [&](const StateFrame& f) { return standard_pme_energy(grid, f, m, lift); });
    } else {
      standard = build_standard_trace("filtration_standard", sim.frames,
                                      [&](const StateFrame& f) { return filtration_energy(grid, f, a, lift); });
    }
    const DecayReport sreport = verify_decay(*standard, config.verify);
    write_file(out / "standard_energy.csv", [&](std::ostream& os) { write_standard_csv(os, *standard); });
    verification["standard"] = to_json(sreport);
    verification["standard"]["name"] = standard->name;
    monotone = monotone && sreport.monotone;
    clean = clean && sreport.ok();
  }

  coverage_warnings(g, outcome);
  verification["config"] = to_json(config);
  write_json(out / "verification.json", verification);

  if (!monotone) {
    outcome.exit_code = 1;
    outcome.warnings.push_back("energy: monotonicity violated");
  } else if (!clean) {
    outcome.warnings.push_back("energy: decay identity or sign checks reported violations");
  }
  outcome.summary["monotone"] = monotone;
  outcome.summary["violations"] = report.violations.size();
  outcome.summary["max_relative_consistency_error"] = report.max_relative_consistency_error;
  finish(outcome);
  return outcome;
}

RunOutcome run_compare_closed_form(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  RunOutcome outcome;
  const ModelOracle oracle = oracle_for(config.model.model);
  json report{{"model", model_name(config.model.model)}, {"config", to_json(config)}};
  if (!oracle.lagrangian) {
    const std::string note = oracle.note.empty() ? "oracle disabled: no closed form for this model" : oracle.note;
    report["note"] = note;
    outcome.notes.push_back(note);
    write_json(out / "comparison.json", report);
    finish(outcome);
    return outcome;
  }
  const ProblemSpec spec = instantiate(config.model);
  const GProvider g = make_g_provider(config, spec);
  if (config.normalization) outcome.notes.push_back("closed forms assume the normalization constant is dropped");
  const Lagrangian lag = Lagrangian::build(spec, g, config.lagrangian);
  const ClosedFormComparison cmp = compare_closed_form(lag, oracle, config.compare);
  write_file(out / "closed_form_comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, cmp); });

  report["formula"] = cmp.formula;
  report["max_residual_after_affine_fit"] = cmp.max_residual;
  report["lagrangian"] = lag.describe();
  if (!oracle.note.empty()) report["note"] = oracle.note;
  if (cmp.discrepancy_checked) {
    report["discrepancy"] = {{"term", cmp.discrepancy_term},
                             {"printed_coefficient", cmp.printed_coefficient},
                             {"fitted_coefficient", cmp.fitted_coefficient},
                             {"expected_coefficient", cmp.expected_coefficient},
                             {"detected", cmp.discrepancy_detected},
                             {"fit_residual", cmp.discrepancy_fit_residual}};
    if (cmp.discrepancy_detected) {
      std::ostringstream msg;
      msg << "lagrangian: printed closed form has coefficient " << cmp.printed_coefficient << " on "
          << cmp.discrepancy_term << ", the construction gives " << cmp.fitted_coefficient;
      outcome.warnings.push_back(msg.str());
    }
  } else if (cmp.max_residual > 1e-6) {
    std::ostringstream msg;
    msg << "lagrangian: residual after affine fit " << cmp.max_residual << " exceeds 1e-6";
    outcome.warnings.push_back(msg.str());
  }
  write_json(out / "comparison.json", report);
  outcome.summary["max_residual"] = cmp.max_residual;
  if (cmp.discrepancy_checked) outcome.summary["fitted_coefficient"] = cmp.fitted_coefficient;
  finish(outcome);
  return outcome;
}

}  // namespace lyapkit
