#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>
#include <optional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapkit/characteristics.hpp"
#include "lyapkit/idw.hpp"
#include "lyapkit/models.hpp"
#include "lyapkit/quadrature.hpp"

namespace lyapkit {

/// g(x0, u0, p0) = g0 on the characteristic through p0.
struct GNormalization {
  double p0 = 1.0;
  double g0 = 0.0;
};

/// g along a characteristic as a function of p alone, from dg/dp = g' / p'
/// with p' = F^0. Uses g0 + log|F^0(p0)/F^0(p)| when f_qx = f_qu = 0 on the
/// interval and integrates (-F^0_p - f_qx - p f_qu) / F^0 otherwise.
/// Throws CharacteristicsError when F^0 vanishes between p0 and p.
double reduced_g(const ProblemSpec& spec, double x, double u, double p, const GNormalization& norm,
                 const QuadratureOptions& opts = {});

struct SeedGrid {
  std::vector<double> u0;
  std::vector<double> p0;
};

/// Region whose coverage by characteristic samples is measured.
struct QueryBox {
  double x_lo = 0.0, x_hi = 1.0;
  double u_lo = -1.0, u_hi = 1.0;
  double p_lo = -1.0, p_hi = 1.0;
  int probes_per_axis = 8;
};

struct TabulationControls {
  CharControls characteristics;
  QueryBox box;
  double coverage_min = 0.9;
  /// A point counts as covered when a sample lies within this distance in
  /// standardized coordinates.
  double coverage_radius = 0.25;
  std::size_t neighbors = 8;
  double power = 2.0;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// A queryable g(x, u, p): closed form, reduced ODE, or tabulated from
/// characteristics. Immutable after construction and safe to share; the
/// extrapolation counter is atomic.
class GProvider {
 public:
  enum class Kind { analytic, reduced_ode, tabulated };

  /// Closed form G; with a normalization g = g0 + G(p) - G(p0), otherwise
  /// g = G and the constant factor in exp(g) is dropped.
  static GProvider analytic(CoeffFn closed_form, bool depends_only_on_p,
                            std::optional<GNormalization> norm = std::nullopt);
  static GProvider from_oracle(const BuiltinModel& model, std::optional<GNormalization> norm = std::nullopt);
  static GProvider reduced(ProblemSpec spec, GNormalization norm, QuadratureOptions opts = {});
  /// Integrates one characteristic per (u0, p0) seed from x = 0 with g = 0
  /// and interpolates the collected samples. Trajectories are returned in
  /// seed order (u0 outer, p0 inner) when `trajectories` is non-null.
  static GProvider tabulate(const ProblemSpec& spec, const SeedGrid& seeds, const TabulationControls& controls,
                            std::vector<CharTrajectory>* trajectories = nullptr);
  static GProvider from_snapshot(const nlohmann::json& snapshot);

  double operator()(double x, double u, double p) const;

  Kind kind() const;
  bool depends_only_on_p() const;

  // Tabulated diagnostics; trivial values for the other variants.
  double coverage() const;
  bool low_coverage() const;
  std::size_t extrapolations() const;
  std::size_t sample_count() const;

  std::optional<GNormalization> normalization() const;
  /// JSON description; tabulated providers include all samples and the
  /// scaling metadata and can be restored with from_snapshot.
  nlohmann::json snapshot() const;

 private:
  struct Analytic {
    CoeffFn closed_form;
    bool p_only = false;
    std::optional<GNormalization> norm;
  };
  struct Reduced {
    ProblemSpec spec;
    GNormalization norm;
    QuadratureOptions opts;
  };
  struct Tabulated {
    std::vector<std::array<double, 4>> samples;  // x, u, p, g
    IdwInterpolator3 interpolator;
    double coverage = 1.0;
    double coverage_min = 0.9;
    double coverage_radius = 0.25;
    QueryBox box;
    std::unique_ptr<std::atomic<std::size_t>> extrapolations = std::make_unique<std::atomic<std::size_t>>(0);
  };
  using Variant = std::variant<Analytic, Reduced, Tabulated>;

  explicit GProvider(std::shared_ptr<const Variant> impl) : impl_(std::move(impl)) {}
  static GProvider from_samples(std::vector<std::array<double, 4>> samples, const TabulationControls& controls);

  std::shared_ptr<const Variant> impl_;
};

inline double eval_g(const GProvider& provider, double x, double u, double p) { return provider(x, u, p); }

std::string to_string(GProvider::Kind kind);

}  // namespace lyapkit
