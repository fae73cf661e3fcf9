#include "lyapkit/closed_form.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace lyapkit {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 0) return out;
  if (n == 1) return {0.5 * (lo + hi)};
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

// Least squares for y ~ sum c_k phi_k(p) with up to three basis functions.
template <std::size_t K>
std::array<double, K> least_squares(const std::vector<std::array<double, K>>& phi, const std::vector<double>& y) {
  std::array<std::array<double, K + 1>, K> a{};
  for (std::size_t r = 0; r < y.size(); ++r)
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) a[i][j] += phi[r][i] * phi[r][j];
      a[i][K] += phi[r][i] * y[r];
    }
  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < K; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < K; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    if (a[c][c] == 0.0) continue;
    for (std::size_t r = 0; r < K; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= K; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::array<double, K> coef{};
  for (std::size_t i = 0; i < K; ++i) coef[i] = a[i][i] == 0.0 ? 0.0 : a[i][K] / a[i][i];
  return coef;
}

}  // namespace

std::vector<double> grid_avoiding_zero(double lo, double hi, int n, double exclude) {
  const double neg_hi = std::min(hi, -exclude), pos_lo = std::max(lo, exclude);
  const double neg_len = lo <= neg_hi ? neg_hi - lo : -1.0;
  const double pos_len = pos_lo <= hi ? hi - pos_lo : -1.0;
  if (neg_len < 0.0) return linspace(pos_lo, hi, n);
  if (pos_len < 0.0) return linspace(lo, neg_hi, n);
  int n_neg = static_cast<int>(std::lround(n * neg_len / (neg_len + pos_len)));
  n_neg = std::clamp(n_neg, 1, n - 1);
  std::vector<double> out = linspace(lo, neg_hi, n_neg);
  for (double p : linspace(pos_lo, hi, n - n_neg)) out.push_back(p);
  return out;
}

ClosedFormComparison compare_closed_form(const Lagrangian& lag, const ModelOracle& oracle,
                                         const ClosedFormGrid& grid) {
  ClosedFormComparison cmp;
  cmp.model = lag.spec().name;
  cmp.note = oracle.note;
  cmp.formula = oracle.lagrangian_formula;
  if (!oracle.lagrangian) return cmp;
  cmp.oracle_available = true;

  const auto us = linspace(grid.u_lo, grid.u_hi, grid.n_u);
  const auto ps = grid_avoiding_zero(grid.p_lo, grid.p_hi, grid.n_p, grid.p_exclude);
  const double x = grid.x;

  double coef_sum = 0.0;
  int coef_rows = 0;
  for (double u : us) {
    std::vector<ClosedFormRow> row;
    for (double p : ps) row.push_back({u, p, lag.L(x, u, p), oracle.lagrangian(x, u, p), 0.0});

    for (double sign : {-1.0, 1.0}) {
      std::vector<std::array<double, 2>> phi;
      std::vector<double> y;
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < row.size(); ++k) {
        if ((row[k].p < 0.0) != (sign < 0.0)) continue;
        phi.push_back({1.0, row[k].p});
        y.push_back(row[k].L_numeric - row[k].L_closed);
        idx.push_back(k);
      }
      if (y.empty()) continue;
      const auto c = y.size() >= 2 ? least_squares<2>(phi, y) : std::array<double, 2>{y[0], 0.0};
      for (std::size_t r = 0; r < idx.size(); ++r) {
        auto& e = row[idx[r]];
        e.residual = y[r] - (c[0] + c[1] * e.p);
        cmp.max_residual = std::max(cmp.max_residual, std::abs(e.residual));
      }
    }

    if (oracle.discrepancy) {
      const auto& d = *oracle.discrepancy;
      std::vector<std::array<double, 3>> phi;
      std::vector<double> y;
      for (const auto& e : row) {
        if (e.p < 0.0) continue;
        phi.push_back({1.0, e.p, d.basis(e.p)});
        y.push_back(e.L_numeric - d.anchor(e.p));
      }
      if (y.size() >= 3) {
        const auto c = least_squares<3>(phi, y);
        coef_sum += c[2];
        ++coef_rows;
        for (std::size_t r = 0; r < y.size(); ++r) {
          const double fit = c[0] + c[1] * phi[r][1] + c[2] * phi[r][2];
          cmp.discrepancy_fit_residual = std::max(cmp.discrepancy_fit_residual, std::abs(y[r] - fit));
        }
      }
    }
    cmp.rows.insert(cmp.rows.end(), row.begin(), row.end());
  }

  if (oracle.discrepancy && coef_rows > 0) {
    const auto& d = *oracle.discrepancy;
    cmp.discrepancy_checked = true;
    cmp.discrepancy_term = d.term;
    cmp.printed_coefficient = d.printed_coefficient;
    cmp.expected_coefficient = d.constructed_coefficient;
    cmp.fitted_coefficient = coef_sum / coef_rows;
    cmp.discrepancy_detected = std::abs(cmp.fitted_coefficient - d.printed_coefficient) > 1e-3;
  }
  return cmp;
}

void write_comparison_csv(std::ostream& os, const ClosedFormComparison& cmp) {
  os << "u,p,L_numeric,L_closed,residual_after_affine_fit\n";
  os.precision(17);
  for (const auto& r : cmp.rows)
    os << r.u << ',' << r.p << ',' << r.L_numeric << ',' << r.L_closed << ',' << r.residual << '\n';
}

}  // namespace lyapkit
