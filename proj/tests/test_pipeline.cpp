#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lyapkit/pipeline.hpp"

using namespace lyapkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lyapkit_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

json heat_config() {
  return {{"model", {{"model", "quasilinear_gradient"}}},
          {"grid", {{"n_cells", 32}}},
          {"time", {{"t_end", 0.01}, {"output_stride", 10}}},
          {"initial_condition", {{"profile", "sine"}}}};
}

}  // namespace

TEST(Pipeline, DefaultsAndRoundTrip) {
  const RunConfig c = parse_run_config(heat_config());
  EXPECT_EQ(c.g_mode, "analytic");
  EXPECT_EQ(c.n_cells, 32);
  EXPECT_EQ(c.seeds.u0.size(), 9u);
  const RunConfig again = parse_run_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Pipeline, NonnegativeModelsGetPositiveRanges) {
  const RunConfig c = parse_run_config({{"model", {{"model", "porous_medium"}, {"m", 2}}}});
  EXPECT_DOUBLE_EQ(c.dump_u.lo, 0.1);
  EXPECT_DOUBLE_EQ(c.compare.u_lo, 0.1);
  EXPECT_DOUBLE_EQ(c.tabulation.box.u_lo, 0.1);
}

TEST(Pipeline, RejectsBadConfigs) {
  json j = heat_config();
  j["colour"] = 1;
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = heat_config();
  j["grid"]["n_cells"] = 2;
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = heat_config();
  j["g_mode"] = "guess";
  EXPECT_THROW(parse_run_config(j), ConfigError);
  j = heat_config();
  j["initial_condition"] = {{"csv", "missing.csv"}};
  EXPECT_THROW(parse_run_config(j), ConfigError);
  EXPECT_THROW(parse_run_config({{"model", {{"model", "nope"}}}}), ModelError);
}

TEST(Pipeline, InitialConditionFromCsv) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  const Grid1D g(8);
  {
    std::ofstream os(dir / "u0.csv");
    os << "x,u\n";
    for (std::size_t i = 0; i < g.nodes(); ++i) os << g.x(i) << ',' << g.x(i) * (1 - g.x(i)) << '\n';
  }
  json j = heat_config();
  j["initial_condition"] = {{"csv", "u0.csv"}};
  const RunConfig c = parse_run_config(j, dir);
  const auto u = c.initial_condition->sample(g);
  ASSERT_EQ(u.size(), g.nodes());
  EXPECT_DOUBLE_EQ(u[4], 0.25);
  EXPECT_THROW(c.initial_condition->sample(Grid1D(16)), ConfigError);
}

TEST(Pipeline, SimulateWritesManifest) {
  const fs::path out = scratch("simulate");
  const RunOutcome r = run_simulate(parse_run_config(heat_config()), out);
  EXPECT_EQ(r.exit_code, 0);
  const json m = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m.at("termination"), "t_end_reached");
  EXPECT_EQ(m.at("config"), to_json(parse_run_config(heat_config())));
  EXPECT_TRUE(fs::exists(out / "trajectory.csv"));
}

TEST(Pipeline, RunsAreByteIdentical) {
  const RunConfig c = parse_run_config(heat_config());
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_verify(c, a);
  RunConfig c2 = c;
  c2.workers = 3;
  run_verify(c2, b);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "energy.csv"), slurp(b / "energy.csv"));
}

TEST(Pipeline, VerifyHeat) {
  const fs::path out = scratch("verify");
  const RunOutcome r = run_verify(parse_run_config(heat_config()), out);
  EXPECT_EQ(r.exit_code, 0);
  const json v = json::parse(slurp(out / "verification.json"));
  EXPECT_TRUE(v.at("violations").empty());
  EXPECT_TRUE(v.at("summary").at("monotone").get<bool>());
}

TEST(Pipeline, VerifyPorousMediumHasBothEnergies) {
  json j = {{"model",
             {{"model", "porous_medium"},
              {"m", 2},
              {"bc", {{{"kind", "dirichlet"}, {"value", 0.2}}, {{"kind", "dirichlet"}, {"value", 0.8}}}}}},
            {"grid", {{"n_cells", 64}}},
            {"time", {{"t_end", 0.005}, {"output_stride", 10}}},
            {"initial_condition",
             {{"profile", "polynomial_plus_sine"}, {"coeffs", {0.04, 0.6}}, {"sine_amplitude", 0.1}, {"sqrt", true}}}};
  const fs::path out = scratch("verify_pme");
  const RunOutcome r = run_verify(parse_run_config(j), out);
  EXPECT_EQ(r.exit_code, 0) << r.summary.dump();
  const json v = json::parse(slurp(out / "verification.json"));
  EXPECT_TRUE(v.at("summary").at("monotone").get<bool>());
  EXPECT_TRUE(v.at("standard").at("summary").at("monotone").get<bool>());
  EXPECT_TRUE(fs::exists(out / "standard_energy.csv"));
}

TEST(Pipeline, ConstructEnergySidecar) {
  const fs::path out = scratch("construct");
  const RunConfig c = parse_run_config({{"model", {{"model", "porous_medium"}, {"m", 2}}}});
  const RunOutcome r = run_construct_energy(c, out);
  EXPECT_EQ(r.exit_code, 0);
  const json side = json::parse(slurp(out / "lagrangian.json"));
  EXPECT_EQ(side.at("p_base"), 1.0);
  EXPECT_TRUE(side.contains("normalization"));
  const std::string csv = slurp(out / "lagrangian_grid.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,u,p,L,L_p,L_pp");
}

TEST(Pipeline, TabulatedConstructWritesSnapshot) {
  const fs::path out = scratch("tabulated");
  json j = {{"model", {{"model", "rho_laplacian_poly"}, {"rho", 2}, {"n", 1}}},
            {"g_mode", "tabulated"},
            {"dump", {{"x", {0.0, 1.0, 2}}, {"u", {0.0, 0.5, 2}}, {"p", {0.5, 1.0, 2}}}},
            {"seed_grid", {{"u0", {0.0, 0.5}}, {"p0", {0.5, 1.0, 2.0}}}}};
  const RunOutcome r = run_construct_energy(parse_run_config(j), out);
  EXPECT_EQ(r.exit_code, 2);  // six seeds do not cover the default box
  EXPECT_TRUE(fs::exists(out / "g_snapshot.json"));
  EXPECT_TRUE(fs::exists(out / "trajectories" / "seed_0005.csv"));
}

TEST(Pipeline, CompareWithoutOracle) {
  const fs::path out = scratch("no_oracle");
  const RunOutcome r =
      run_compare_closed_form(parse_run_config({{"model", {{"model", "rho_laplacian_poly"}, {"rho", 3}, {"n", 2}}}}), out);
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_FALSE(r.notes.empty());
  EXPECT_NE(r.notes.front().find("oracle disabled"), std::string::npos);
}
