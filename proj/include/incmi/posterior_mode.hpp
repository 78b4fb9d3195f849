#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "incmi/contingency.hpp"
#include "incmi/errors.hpp"

namespace incmi {

enum class ModePath { closed_form_rows, closed_form_cols, em_iterative };

struct ModeResult {
  ChanceMatrix pi_hat;
  int iterations = 0;
  double residual = 0;  // max-norm defect of the fixed-point equation
  ModePath path = ModePath::em_iterative;
};

// One fixed-point sweep: pi' = (n_ij + n_i? pi_ij/pi_i+ + n_?j pi_ij/pi_+j)/N.
inline ChanceMatrix em_step(const EffectiveCounts& counts, const ChanceMatrix& pi) {
  const int r = counts.rows(), s = counts.cols();
  const double N = counts.total();
  Matrix next(r, s);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < s; ++j) {
      double v = counts.joint(i, j);
      if (counts.row_missing(i) > 0) {
        if (pi.row_sum(i) <= 0) {
          std::ostringstream msg;
          msg << "em_step: row " << i << " has missing mass but zero marginal";
          throw numeric_error(msg.str());
        }
        v += counts.row_missing(i) * pi.cell(i, j) / pi.row_sum(i);
      }
      if (counts.col_missing(j) > 0) {
        if (pi.col_sum(j) <= 0) {
          std::ostringstream msg;
          msg << "em_step: column " << j << " has missing mass but zero marginal";
          throw numeric_error(msg.str());
        }
        v += counts.col_missing(j) * pi.cell(i, j) / pi.col_sum(j);
      }
      next(i, j) = v / N;
    }
  }
  next /= next.sum();  // pin round-off; the exact update already sums to 1
  return ChanceMatrix(std::move(next));
}

// Log of the unnormalized posterior, 0*log 0 = 0; positive count against a
// zero chance yields -infinity.
inline double log_posterior_unnormalized(const EffectiveCounts& counts, const ChanceMatrix& pi) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double L = 0;
  auto add = [&](double count, double chance) {
    if (count == 0) return;
    if (chance <= 0) { L = neg_inf; return; }
    if (L != neg_inf) L += count * std::log(chance);
  };
  for (int i = 0; i < counts.rows(); ++i)
    for (int j = 0; j < counts.cols(); ++j) add(counts.joint(i, j), pi.cell(i, j));
  for (int i = 0; i < counts.rows(); ++i) add(counts.row_missing(i), pi.row_sum(i));
  for (int j = 0; j < counts.cols(); ++j) add(counts.col_missing(j), pi.col_sum(j));
  return L;
}

namespace detail {

inline double fixed_point_defect(const EffectiveCounts& counts, const ChanceMatrix& pi) {
  return (em_step(counts, pi).cell - pi.cell).cwiseAbs().maxCoeff();
}

}  // namespace detail

// Missing features only (col_missing == 0): pi_ij = (N_i+/N)(n_ij/n_i+)
// with N_i+ = n_i+ + n_i?. Zero-mass rows get pi = 0 on the whole row.
inline ModeResult closed_form_mode_mfo(const EffectiveCounts& counts) {
  if (counts.has_col_missing())
    throw numeric_error("closed_form_mode_mfo: column-missing counts present");
  const int r = counts.rows(), s = counts.cols();
  const double N = counts.total();
  if (N <= 0) throw numeric_error("closed_form_mode_mfo: empty table");
  const Vector row = counts.joint.rowwise().sum();
  Matrix pi(r, s);
  for (int i = 0; i < r; ++i) {
    const double big = row(i) + counts.row_missing(i);
    if (big == 0) {
      pi.row(i).setZero();
      continue;
    }
    if (row(i) == 0) {
      std::ostringstream msg;
      msg << "closed_form_mode_mfo: row " << i
          << " observed only with missing feature; mass cannot be apportioned";
      throw numeric_error(msg.str());
    }
    pi.row(i) = (big / N) * (counts.joint.row(i) / row(i));
  }
  ModeResult result{ChanceMatrix(std::move(pi)), 1, 0, ModePath::closed_form_rows};
  result.residual = detail::fixed_point_defect(counts, result.pi_hat);
  return result;
}

// Posterior mode via the fixed-point iteration, with closed-form dispatch
// when only one side carries missing counts. The optional start overrides
// the default interior initialization pi0 ~ n_ij + 1/(rs).
inline ModeResult fit_mode(const EffectiveCounts& counts, double tol = 1e-10,
                           int max_iter = 10000,
                           const std::optional<ChanceMatrix>& start = std::nullopt) {
  if (tol <= 0) throw input_error("fit_mode: tol must be positive");
  if (max_iter < 1) throw input_error("fit_mode: max_iter must be >= 1");
  const double N = counts.total();
  if (N <= 0) throw numeric_error("fit_mode: empty table");

  if (!start) {
    if (!counts.has_col_missing()) return closed_form_mode_mfo(counts);
    if (!counts.has_row_missing()) {
      ModeResult t = closed_form_mode_mfo(transpose(counts));
      t.pi_hat = t.pi_hat.transposed();
      t.path = ModePath::closed_form_cols;
      return t;
    }
  }

  const int r = counts.rows(), s = counts.cols();
  Matrix init;
  if (start) {
    init = start->cell;
  } else {
    init = counts.joint.array() + 1.0 / (static_cast<double>(r) * s);
    init /= init.sum();
  }
  ChanceMatrix pi(std::move(init));
  for (int iter = 1; iter <= max_iter; ++iter) {
    ChanceMatrix next = em_step(counts, pi);
    const double delta = (next.cell - pi.cell).cwiseAbs().maxCoeff();
    pi = std::move(next);
    if (delta <= tol) {
      ModeResult result{std::move(pi), iter, 0, ModePath::em_iterative};
      result.residual = detail::fixed_point_defect(counts, result.pi_hat);
      return result;
    }
  }
  std::ostringstream msg;
  msg << "fit_mode: no convergence after " << max_iter
      << " iterations, defect " << detail::fixed_point_defect(counts, pi);
  throw numeric_error(msg.str());
}

}  // namespace incmi
