#include "lyapkit/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "lyapkit/quadrature.hpp"
#include "parallel.hpp"

namespace lyapkit {

namespace {

// One-sided second order at both ends; the standard energies carry no
// boundary information.
std::vector<double> plain_gradient(const std::vector<double>& v, double dx) {
  const std::size_t n = v.size() - 1;
  std::vector<double> d(v.size());
  for (std::size_t i = 1; i < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
  d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dx);
  return d;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

template <class Integrand>
DecayEstimate masked_decay(const ProblemSpec& spec, const Grid1D& grid, const StateFrame& frame,
                           double unreliable_above, Integrand&& integrand) {
  const auto p = node_gradients(spec, grid, frame.u);
  const auto q = node_second_derivatives(spec, grid, frame.u);
  const bool singular = spec.decay_singularity_order > 0.0;
  const double grad_eps = 1e-6 * max_abs(p);
  std::vector<double> vals(frame.u.size(), 0.0);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (singular && std::abs(p[i]) < grad_eps) {
      ++masked;
      continue;
    }
    if (frame.ut[i] == 0.0) continue;
    vals[i] = integrand(grid.x(i), frame.u[i], p[i], q[i], frame.ut[i]);
  }
  if (singular && grad_eps == 0.0) masked = vals.size();
  DecayEstimate est;
  est.value = -composite_simpson(vals, grid.dx);
  est.mask_fraction = static_cast<double>(masked) / static_cast<double>(vals.size());
  est.reliable = est.mask_fraction <= unreliable_above;
  return est;
}

StandardEnergy filtration_energy(const Grid1D& grid, const StateFrame& frame, const std::function<double(double)>& a,
                                 bool lift, const std::function<double(double)>& primitive) {
  const std::size_t n = frame.u.size() - 1;
  std::vector<double> e(n + 1), flux(n + 1);
  for (std::size_t i = 0; i <= n; ++i) flux[i] = a(frame.u[i]);
  const double alpha = lift ? flux[0] : 0.0, beta = lift ? flux[n] : 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double phi = alpha + (beta - alpha) * grid.x(i);
    e[i] = primitive(frame.u[i]) - phi * frame.u[i];
    flux[i] -= phi;
  }
  auto d = plain_gradient(flux, grid.dx);
  for (auto& v : d) v = v * v;
  return {composite_simpson(e, grid.dx), -composite_simpson(d, grid.dx)};
}

}  // namespace

double energy_of_frame(const Lagrangian& lag, const Grid1D& grid, const StateFrame& frame) {
  const auto p = node_gradients(lag.spec(), grid, frame.u);
  std::vector<double> vals(frame.u.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    try {
      vals[i] = lag.L(grid.x(i), frame.u[i], p[i]);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "energy: L failed at node " << i << ": " << e.what();
      throw EnergyError(msg.str());
    }
    if (!std::isfinite(vals[i])) {
      std::ostringstream msg;
      msg << "energy: L is not finite at node " << i << " (x = " << grid.x(i) << ", u = " << frame.u[i]
          << ", u_x = " << p[i] << ")";
      throw EnergyError(msg.str());
    }
  }
  return composite_simpson(vals, grid.dx);
}

DecayEstimate decay_formula(const ProblemSpec& spec, const GProvider& g, const Grid1D& grid, const StateFrame& frame,
                            double unreliable_above) {
  return masked_decay(spec, grid, frame, unreliable_above, [&](double x, double u, double p, double q, double ut) {
    return std::exp(g(x, u, p)) * spec.f1_weight(x, u, p, q, ut) * ut;
  });
}

DecayEstimate decay_model(const ProblemSpec& spec, const ModelOracle& oracle, const Grid1D& grid,
                          const StateFrame& frame, double unreliable_above) {
  if (!oracle.decay_integrand) throw EnergyError("model has no closed decay integrand");
  return masked_decay(spec, grid, frame, unreliable_above,
                      [&](double, double, double p, double q, double ut) { return oracle.decay_integrand(p, q, ut); });
}

StandardEnergy standard_pme_energy(const Grid1D& grid, const StateFrame& frame, double m, bool lift) {
  return filtration_energy(
      grid, frame, [m](double u) { return std::pow(std::abs(u), m); }, lift,
      [m](double u) { return std::pow(std::abs(u), m + 1.0) / (m + 1.0); });
}

StandardEnergy filtration_energy(const Grid1D& grid, const StateFrame& frame, const std::function<double(double)>& a,
                                 bool lift) {
  const QuadratureOptions opts{1e-12, 1e-10, std::size_t{1} << 20};
  return filtration_energy(grid, frame, a, lift,
                           [&](double u) { return u == 0.0 ? 0.0 : integrate(a, 0.0, u, opts); });
}

std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& e) {
  const std::size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  if (n == 2) {
    d[0] = d[1] = (e[1] - e[0]) / (t[1] - t[0]);
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
    d[k] = -h2 / (h1 * (h1 + h2)) * e[k - 1] + (h2 - h1) / (h1 * h2) * e[k] + h1 / (h2 * (h1 + h2)) * e[k + 1];
  }
  {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * e[0] + (h1 + h2) / (h1 * h2) * e[1] - h1 / (h2 * (h1 + h2)) * e[2];
  }
  {
    const double h1 = t[n - 2] - t[n - 3], h2 = t[n - 1] - t[n - 2];
    d[n - 1] = h2 / (h1 * (h1 + h2)) * e[n - 3] - (h1 + h2) / (h1 * h2) * e[n - 2] +
               (2 * h2 + h1) / (h2 * (h1 + h2)) * e[n - 1];
  }
  return d;
}

EnergyTrace build_energy_trace(const Lagrangian& lag, const std::optional<ModelOracle>& oracle, const Grid1D& grid,
                               const std::vector<StateFrame>& frames, unsigned workers) {
  EnergyTrace tr;
  const std::size_t n = frames.size();
  tr.times.resize(n);
  tr.E.resize(n);
  tr.dEdt_formula.resize(n);
  tr.mask_fraction.resize(n);
  tr.max_abs_ut.resize(n);
  const bool with_model = oracle && oracle->decay_integrand;
  if (with_model) tr.dEdt_model.emplace(n);

  detail::parallel_for(n, workers, [&](std::size_t k) {
    const StateFrame& f = frames[k];
    tr.times[k] = f.t;
    tr.E[k] = energy_of_frame(lag, grid, f);
    const DecayEstimate est = decay_formula(lag.spec(), lag.g(), grid, f);
    tr.dEdt_formula[k] = est.value;
    tr.mask_fraction[k] = est.mask_fraction;
    tr.max_abs_ut[k] = max_abs(f.ut);
    if (with_model) (*tr.dEdt_model)[k] = decay_model(lag.spec(), *oracle, grid, f).value;
  });
  tr.dEdt_measured = time_derivative(tr.times, tr.E);
  return tr;
}

StandardTrace build_standard_trace(const std::string& name, const std::vector<StateFrame>& frames,
                                   const std::function<StandardEnergy(const StateFrame&)>& energy) {
  StandardTrace tr;
  tr.name = name;
  for (const auto& f : frames) {
    const StandardEnergy e = energy(f);
    tr.times.push_back(f.t);
    tr.E.push_back(e.E);
    tr.dEdt_formula.push_back(e.dEdt);
    tr.max_abs_ut.push_back(max_abs(f.ut));
  }
  tr.dEdt_measured = time_derivative(tr.times, tr.E);
  return tr;
}

namespace {

DecayReport verify_series(const std::vector<double>& t, const std::vector<double>& e,
                          const std::vector<double>& measured, const std::vector<double>& formula,
                          const std::vector<double>* mask, const std::vector<double>& max_ut,
                          const DecayTolerances& tol) {
  DecayReport r;
  const std::size_t n = t.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double bound = e[k] + tol.monotonicity * (1.0 + std::abs(e[k]));
    if (!(e[k + 1] <= bound)) {
      r.monotone = false;
      r.violations.push_back({"monotonicity", k + 1, t[k + 1], e[k + 1], e[k]});
    }
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (mask && (*mask)[k] >= tol.mask_threshold) continue;
    ++r.consistency_points;
    const double diff = std::abs(measured[k] - formula[k]);
    if (formula[k] != 0.0) r.max_relative_consistency_error = std::max(r.max_relative_consistency_error, diff / std::abs(formula[k]));
    if (!(diff <= tol.consistency * (1.0 + std::abs(formula[k])))) {
      r.consistent = false;
      r.violations.push_back({"consistency", k, t[k], measured[k], formula[k]});
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (mask && (*mask)[k] > 0.2) continue;
    if (max_ut[k] > tol.equilibrium_ut && !(formula[k] < 0.0)) {
      r.formula_negative = false;
      r.violations.push_back({"formula_sign", k, t[k], formula[k], 0.0});
    }
  }
  return r;
}

}  // namespace

DecayReport verify_decay(const EnergyTrace& tr, const DecayTolerances& tol) {
  return verify_series(tr.times, tr.E, tr.dEdt_measured, tr.dEdt_formula, &tr.mask_fraction, tr.max_abs_ut, tol);
}

DecayReport verify_decay(const StandardTrace& tr, const DecayTolerances& tol) {
  return verify_series(tr.times, tr.E, tr.dEdt_measured, tr.dEdt_formula, nullptr, tr.max_abs_ut, tol);
}

void write_energy_csv(std::ostream& os, const EnergyTrace& tr) {
  os << "t,E,dEdt_measured,dEdt_formula,dEdt_model,mask_fraction\n";
  os.precision(17);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k] << ',' << tr.E[k] << ',' << tr.dEdt_measured[k] << ',' << tr.dEdt_formula[k] << ',';
    if (tr.dEdt_model) os << (*tr.dEdt_model)[k];
    os << ',' << tr.mask_fraction[k] << '\n';
  }
}

void write_standard_csv(std::ostream& os, const StandardTrace& tr) {
  os << "t,E,dEdt_measured,dEdt_formula\n";
  os.precision(17);
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    os << tr.times[k] << ',' << tr.E[k] << ',' << tr.dEdt_measured[k] << ',' << tr.dEdt_formula[k] << '\n';
}

nlohmann::json to_json(const DecayReport& r) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : r.violations)
    v.push_back({{"kind", x.kind}, {"index", x.index}, {"t", x.t}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  return {{"violations", v},
          {"summary",
           {{"monotone", r.monotone},
            {"consistent", r.consistent},
            {"formula_negative", r.formula_negative},
            {"consistency_points", r.consistency_points},
            {"max_relative_consistency_error", r.max_relative_consistency_error}}}};
}

}  // namespace lyapkit
