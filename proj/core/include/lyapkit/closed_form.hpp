#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lyapkit/lagrangian.hpp"
#include "lyapkit/models.hpp"

namespace lyapkit {

struct ClosedFormGrid {
  double x = 0.5;
  double u_lo = -1.0, u_hi = 1.0;
  double p_lo = -2.0, p_hi = 2.0;
  int n_u = 40;
  int n_p = 40;
  /// p-points with |p| below this are skipped.
  double p_exclude = 0.05;
};

/// n points over [lo, hi] with the band |p| < exclude removed; the points are
/// shared between the two sides in proportion to their length.
std::vector<double> grid_avoiding_zero(double lo, double hi, int n, double exclude);

struct ClosedFormRow {
  double u = 0, p = 0;
  double L_numeric = 0, L_closed = 0;
  double residual = 0;  // after the affine fit of its row and sign branch
};

struct ClosedFormComparison {
  std::string model;
  std::string formula;
  std::string note;
  bool oracle_available = false;
  std::vector<ClosedFormRow> rows;
  double max_residual = 0.0;

  bool discrepancy_checked = false;
  bool discrepancy_detected = false;
  std::string discrepancy_term;
  double printed_coefficient = 0.0;
  /// Least-squares coefficient of the term in L_numeric - anchor over
  /// {1, p, term}, averaged over rows.
  double fitted_coefficient = 0.0;
  double expected_coefficient = 0.0;
  double discrepancy_fit_residual = 0.0;
};

/// Compares numeric L against the oracle's closed form on a (u, p) grid.
/// L_numeric - L_closed is fitted by c0 + c1 p separately for each u-row and
/// each sign of p (dropped constants, sign-aware base points); the residual
/// of that fit is reported.
ClosedFormComparison compare_closed_form(const Lagrangian& lag, const ModelOracle& oracle,
                                         const ClosedFormGrid& grid = {});

/// Columns u,p,L_numeric,L_closed,residual_after_affine_fit.
void write_comparison_csv(std::ostream& os, const ClosedFormComparison& cmp);

}  // namespace lyapkit
