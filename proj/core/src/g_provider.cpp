#include "lyapkit/g_provider.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace lyapkit {

namespace {

constexpr int kProbes = 32;

double std_dev(const std::vector<std::array<double, 4>>& s, int axis) {
  double mean = 0.0;
  for (const auto& r : s) mean += r[axis];
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (const auto& r : s) var += (r[axis] - mean) * (r[axis] - mean);
  return std::sqrt(var / static_cast<double>(s.size()));
}

nlohmann::json box_to_json(const QueryBox& b) {
  return {{"x", {b.x_lo, b.x_hi}}, {"u", {b.u_lo, b.u_hi}}, {"p", {b.p_lo, b.p_hi}},
          {"probes_per_axis", b.probes_per_axis}};
}

QueryBox box_from_json(const nlohmann::json& j) {
  QueryBox b;
  b.x_lo = j.at("x").at(0);
  b.x_hi = j.at("x").at(1);
  b.u_lo = j.at("u").at(0);
  b.u_hi = j.at("u").at(1);
  b.p_lo = j.at("p").at(0);
  b.p_hi = j.at("p").at(1);
  b.probes_per_axis = j.value("probes_per_axis", 8);
  return b;
}

}  // namespace

std::string to_string(GProvider::Kind kind) {
  switch (kind) {
    case GProvider::Kind::analytic:
      return "analytic";
    case GProvider::Kind::reduced_ode:
      return "reduced";
    case GProvider::Kind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

double reduced_g(const ProblemSpec& spec, double x, double u, double p, const GNormalization& norm,
                 const QuadratureOptions& opts) {
  if (!spec.flags.shared_factor_reducible)
    throw CharacteristicsError("reduced_g: spec '" + spec.name + "' is not flagged shared_factor_reducible");
  if (p == norm.p0) return norm.g0;

  auto source = [&](double s) {
    return -spec.reaction_dp(x, u, s) - spec.diffusion_dx(x, u, s) - s * spec.diffusion_du(x, u, s);
  };
  bool source_zero = true, transport_free = true;
  const double f_start = spec.reaction(x, u, norm.p0);
  for (int k = 0; k <= kProbes; ++k) {
    const double s = norm.p0 + (p - norm.p0) * k / kProbes;
    const double f0 = spec.reaction(x, u, s);
    if (source(s) != 0.0) source_zero = false;
    if (spec.diffusion_dx(x, u, s) != 0.0 || spec.diffusion_du(x, u, s) != 0.0) transport_free = false;
    if (!source_zero && (f0 == 0.0 || !std::isfinite(f0) || (f0 > 0.0) != (f_start > 0.0))) {
      std::ostringstream msg;
      msg << "reduced_g: F0 vanishes or changes sign between p0 = " << norm.p0 << " and p = " << p;
      throw CharacteristicsError(msg.str());
    }
  }
  // g' = 0 along the whole interval: g stays at its initial value.
  if (source_zero) return norm.g0;
  if (transport_free) return norm.g0 + std::log(std::abs(f_start / spec.reaction(x, u, p)));
  return norm.g0 + integrate([&](double s) { return source(s) / spec.reaction(x, u, s); }, norm.p0, p, opts);
}

GProvider GProvider::analytic(CoeffFn closed_form, bool depends_only_on_p, std::optional<GNormalization> norm) {
  if (!closed_form) throw CharacteristicsError("analytic g provider needs a closed form");
  return GProvider(std::make_shared<const Variant>(Analytic{std::move(closed_form), depends_only_on_p, norm}));
}

GProvider GProvider::from_oracle(const BuiltinModel& model, std::optional<GNormalization> norm) {
  ModelOracle o = oracle_for(model);
  if (!o.g) throw CharacteristicsError("model '" + model_name(model) + "' has no closed-form g");
  return analytic(std::move(o.g), o.g_depends_only_on_p, norm);
}

GProvider GProvider::reduced(ProblemSpec spec, GNormalization norm, QuadratureOptions opts) {
  if (!spec.flags.shared_factor_reducible)
    throw CharacteristicsError("reduced_g: spec '" + spec.name + "' is not flagged shared_factor_reducible");
  return GProvider(std::make_shared<const Variant>(Reduced{std::move(spec), norm, opts}));
}

GProvider GProvider::from_samples(std::vector<std::array<double, 4>> samples, const TabulationControls& controls) {
  if (samples.empty()) throw CharacteristicsError("tabulation produced no samples");
  Tabulated t;
  Point3 scale{};
  for (int a = 0; a < 3; ++a) {
    const double sd = std_dev(samples, a);
    scale[a] = sd > 1e-300 ? 1.0 / sd : 1.0;
  }
  std::vector<Point3> pts;
  std::vector<double> vals;
  pts.reserve(samples.size());
  vals.reserve(samples.size());
  for (const auto& s : samples) {
    pts.push_back({s[0], s[1], s[2]});
    vals.push_back(s[3]);
  }
  t.interpolator = IdwInterpolator3(std::move(pts), std::move(vals), scale, controls.neighbors, controls.power);
  t.samples = std::move(samples);
  t.coverage_min = controls.coverage_min;
  t.coverage_radius = controls.coverage_radius;
  t.box = controls.box;

  const QueryBox& b = controls.box;
  const int n = std::max(2, b.probes_per_axis);
  std::size_t covered = 0, total = 0;
  auto lerp = [n](double lo, double hi, int i) { return lo + (hi - lo) * i / (n - 1); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Point3 q{lerp(b.x_lo, b.x_hi, i), lerp(b.u_lo, b.u_hi, j), lerp(b.p_lo, b.p_hi, k)};
        ++total;
        if (t.interpolator.query(q).nearest_distance <= t.coverage_radius) ++covered;
      }
  t.coverage = static_cast<double>(covered) / static_cast<double>(total);
  return GProvider(std::make_shared<const Variant>(std::move(t)));
}

GProvider GProvider::tabulate(const ProblemSpec& spec, const SeedGrid& seeds, const TabulationControls& controls,
                              std::vector<CharTrajectory>* trajectories) {
  if (seeds.u0.empty() || seeds.p0.empty()) throw CharacteristicsError("seed grid is empty");
  const std::size_t n_seeds = seeds.u0.size() * seeds.p0.size();
  std::vector<CharTrajectory> results(n_seeds);

  detail::parallel_for(n_seeds, controls.workers, [&](std::size_t k) {
    const double u0 = seeds.u0[k / seeds.p0.size()];
    const double p0 = seeds.p0[k % seeds.p0.size()];
    try {
      results[k] = integrate_characteristics(spec, {u0, p0, 0.0, 0.0}, controls.characteristics);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "characteristic from (u0, p0) = (" << u0 << ", " << p0 << "): " << e.what();
      throw CharacteristicsError(msg.str());
    }
  });

  std::vector<std::array<double, 4>> samples;
  for (const auto& traj : results)
    for (const auto& s : traj.states)
      if (s.x >= 0.0 && s.x <= 1.0) samples.push_back({s.x, s.u, s.p, s.g});
  if (trajectories) *trajectories = std::move(results);
  return from_samples(std::move(samples), controls);
}

GProvider GProvider::from_snapshot(const nlohmann::json& snapshot) {
  if (snapshot.value("kind", std::string()) != "tabulated")
    throw CharacteristicsError("only tabulated g providers can be restored from a snapshot");
  TabulationControls controls;
  controls.neighbors = snapshot.at("neighbors").get<std::size_t>();
  controls.power = snapshot.at("power").get<double>();
  controls.coverage_min = snapshot.at("coverage_min").get<double>();
  controls.coverage_radius = snapshot.at("coverage_radius").get<double>();
  controls.box = box_from_json(snapshot.at("box"));
  auto samples = snapshot.at("samples").get<std::vector<std::array<double, 4>>>();
  return from_samples(std::move(samples), controls);
}

double GProvider::operator()(double x, double u, double p) const {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Analytic>) {
          const double g = v.closed_form(x, u, p);
          if (!v.norm) return g;
          return v.norm->g0 + g - v.closed_form(x, u, v.norm->p0);
        } else if constexpr (std::is_same_v<T, Reduced>) {
          return reduced_g(v.spec, x, u, p, v.norm, v.opts);
        } else {
          const auto q = v.interpolator.query({x, u, p});
          if (q.nearest_distance > v.coverage_radius) {
            ++*v.extrapolations;
            return q.nearest_value;
          }
          return q.value;
        }
      },
      *impl_);
}

GProvider::Kind GProvider::kind() const { return static_cast<Kind>(impl_->index()); }

bool GProvider::depends_only_on_p() const {
  if (const auto* a = std::get_if<Analytic>(impl_.get())) return a->p_only;
  return false;
}

double GProvider::coverage() const {
  if (const auto* t = std::get_if<Tabulated>(impl_.get())) return t->coverage;
  return 1.0;
}

bool GProvider::low_coverage() const {
  if (const auto* t = std::get_if<Tabulated>(impl_.get())) return t->coverage < t->coverage_min;
  return false;
}

std::size_t GProvider::extrapolations() const {
  if (const auto* t = std::get_if<Tabulated>(impl_.get())) return t->extrapolations->load();
  return 0;
}

std::size_t GProvider::sample_count() const {
  if (const auto* t = std::get_if<Tabulated>(impl_.get())) return t->samples.size();
  return 0;
}

std::optional<GNormalization> GProvider::normalization() const {
  if (const auto* a = std::get_if<Analytic>(impl_.get())) return a->norm;
  if (const auto* r = std::get_if<Reduced>(impl_.get())) return r->norm;
  return std::nullopt;
}

nlohmann::json GProvider::snapshot() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  if (const auto* t = std::get_if<Tabulated>(impl_.get())) {
    const Point3& s = t->interpolator.scale();
    j["scale"] = {s[0], s[1], s[2]};
    j["neighbors"] = t->interpolator.neighbors();
    j["power"] = t->interpolator.power();
    j["coverage"] = t->coverage;
    j["coverage_min"] = t->coverage_min;
    j["coverage_radius"] = t->coverage_radius;
    j["low_coverage"] = low_coverage();
    j["box"] = box_to_json(t->box);
    j["samples"] = t->samples;
    return j;
  }
  const auto norm = normalization();
  if (norm)
    j["normalization"] = {{"p0", norm->p0}, {"g0", norm->g0}};
  else
    j["normalization"] = nullptr;
  j["depends_only_on_p"] = depends_only_on_p();
  return j;
}

}  // namespace lyapkit
