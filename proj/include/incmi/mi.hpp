#pragma once

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "incmi/contingency.hpp"
#include "incmi/covariance.hpp"
#include "incmi/errors.hpp"
#include "incmi/posterior_mode.hpp"

namespace incmi {

enum class MiPath { complete, mfo, general };

// Leading-order posterior of the mutual information, in nats. The mean is
// the plug-in value at the mode and carries an O(1/N) bias.
struct MiSummary {
  double mean = 0;
  double variance = 0;
  double i_max = 0;              // min(log r, log s)
  MiPath path = MiPath::complete;
  double mean_bias_order = 0;    // 1/N, scale of the neglected bias
  bool degenerate = false;       // leading order vanished (l == 0)

  double sd() const { return std::sqrt(variance); }
};

inline double mi_upper_bound(int r, int s) {
  return std::min(std::log(static_cast<double>(r)), std::log(static_cast<double>(s)));
}

// log(pi_ij / (pi_i+ pi_+j)) cell-wise; zero cells map to 0.
inline Matrix log_ratio_field(const ChanceMatrix& pi) {
  const int r = pi.rows(), s = pi.cols();
  Matrix l = Matrix::Zero(r, s);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j)
      if (pi.cell(i, j) > 0)
        l(i, j) = std::log(pi.cell(i, j) / (pi.row_sum(i) * pi.col_sum(j)));
  return l;
}

inline double plugin_mi(const ChanceMatrix& pi) {
  double value = 0;
  const Matrix l = log_ratio_field(pi);
  for (int i = 0; i < pi.rows(); ++i)
    for (int j = 0; j < pi.cols(); ++j)
      value += pi.cell(i, j) * l(i, j);
  return std::clamp(value, 0.0, mi_upper_bound(pi.rows(), pi.cols()));
}

inline double mi_mean(const ModeResult& mode) { return plugin_mi(mode.pi_hat); }

// The single-pass terms of the missing-features-only variance formula.
struct MiVarianceTerms {
  double K = 0;         // sum rho_ij l_ij^2
  double J = 0;         // sum_i J_row[i] q_row[i]
  double P = 0;         // sum_i J_row[i]^2 q_row[i] w_i?
  double Q = 0;         // sum_i rho_i+ q_row[i]
  Vector J_row;         // sum_j rho_ij l_ij
  Vector q_row;         // rho_i? / (rho_i? + rho_i+)
  Matrix log_ratio;
};

namespace detail {

inline double clamp_variance(double var, bool* degenerate) {
  if (var < 0) {
    *degenerate = true;  // round-off at or below leading order
    return 0;
  }
  return var;
}

}  // namespace detail

// Var[I] = (K - J^2/Q - P)/N in one pass over cells and one over rows.
inline std::pair<MiVarianceTerms, double> mi_variance_mfo(const PrecisionField& field,
                                                          const ModeResult& mode) {
  if (field.has_col_missing())
    throw numeric_error("mi_variance_mfo: column-missing counts present");
  const int r = field.rows(), s = field.cols();
  MiVarianceTerms t;
  t.log_ratio = log_ratio_field(mode.pi_hat);
  t.J_row.resize(r);
  t.q_row.resize(r);
  for (int i = 0; i < r; ++i) {
    double j_row = 0, rho_row = 0;
    for (int j = 0; j < s; ++j) {
      const double rho = field.w_joint(i, j) > 0 ? 1.0 / field.w_joint(i, j) : 0.0;
      const double l = t.log_ratio(i, j);
      t.K += rho * l * l;
      j_row += rho * l;
      rho_row += rho;
    }
    const double q = 1.0 / (1.0 + rho_row * field.w_row(i));
    t.J_row(i) = j_row;
    t.q_row(i) = q;
    t.J += j_row * q;
    t.P += j_row * j_row * q * field.w_row(i);
    t.Q += rho_row * q;
  }
  if (t.Q <= 0) throw numeric_error("mi_variance_mfo: nonpositive Q term");
  bool degenerate = false;
  const double var = detail::clamp_variance((t.K - t.J * t.J / t.Q - t.P) / field.N, &degenerate);
  return {std::move(t), var};
}

// Var[I] = l^T A^{-1} l - (l^T A^{-1} e)^2 / (e^T A^{-1} e), factored form.
inline double mi_variance_general(const PrecisionField& field, const ModeResult& mode) {
  const WoodburyFactors fac = kernel_inverse_general(field);
  const Matrix l = log_ratio_field(mode.pi_hat);
  const Matrix e = Matrix::Ones(field.rows(), field.cols());
  const double ll = fac.quadratic_form(l, l);
  const double le = fac.quadratic_form(l, e);
  const double ee = fac.quadratic_form(e, e);
  bool degenerate = false;
  return detail::clamp_variance(ll - le * le / ee, &degenerate);
}

// Full pipeline: clamp exponents, fit the mode, pick the cheapest valid
// variance path. Column-heavy general tables are transposed first so the
// coupling matrix is built over the smaller missing side.
inline MiSummary mi_summary_of(const EffectiveCounts& raw) {
  EffectiveCounts counts = raw.clamped_for_covariance();
  MiSummary out;
  out.i_max = mi_upper_bound(counts.rows(), counts.cols());
  out.mean_bias_order = 1.0 / counts.total();

  if (counts.has_col_missing() && counts.has_row_missing()) {
    int active_rows = 0, active_cols = 0;
    for (int i = 0; i < counts.rows(); ++i) active_rows += counts.row_missing(i) > 0;
    for (int j = 0; j < counts.cols(); ++j) active_cols += counts.col_missing(j) > 0;
    if (active_rows < active_cols) counts = transpose(counts);
  } else if (counts.has_col_missing()) {
    counts = transpose(counts);  // missing classes only: reuse the row fast path
  }

  const ModeResult mode = fit_mode(counts);
  out.mean = mi_mean(mode);
  const PrecisionField field = precision_field(counts, mode.pi_hat);
  if (!counts.has_col_missing()) {
    auto [terms, var] = mi_variance_mfo(field, mode);
    out.variance = var;
    out.path = counts.has_row_missing() ? MiPath::mfo : MiPath::complete;
  } else {
    out.variance = mi_variance_general(field, mode);
    out.path = MiPath::general;
  }
  if (out.variance == 0) out.degenerate = true;
  return out;
}

// p(I > eps | data) under the untruncated Gaussian; a point mass when the
// leading-order variance is zero.
inline double tail_probability(const MiSummary& summary, double epsilon) {
  if (epsilon < 0) throw input_error("tail_probability: epsilon must be >= 0");
  if (summary.variance <= 0) return summary.mean > epsilon ? 1.0 : 0.0;
  boost::math::normal_distribution<double> gauss;
  return 1.0 - boost::math::cdf(gauss, (epsilon - summary.mean) / summary.sd());
}

// Central Gaussian interval, clipped to [0, i_max].
inline std::pair<double, double> credible_interval(const MiSummary& summary, double level) {
  if (level <= 0 || level >= 1) throw input_error("credible_interval: level must be in (0,1)");
  if (summary.variance <= 0) return {summary.mean, summary.mean};
  boost::math::normal_distribution<double> gauss;
  const double z = boost::math::quantile(gauss, 0.5 + level / 2.0);
  const double half = z * summary.sd();
  return {std::clamp(summary.mean - half, 0.0, summary.i_max),
          std::clamp(summary.mean + half, 0.0, summary.i_max)};
}

}  // namespace incmi
