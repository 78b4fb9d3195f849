#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "incmi/contingency.hpp"
#include "incmi/errors.hpp"
#include "incmi/posterior_mode.hpp"

namespace incmi {

// The rho quantities of the precision kernel, stored as inverse weights so
// margins without missingness (rho = infinity) stay finite:
//   w_ij = n_ij / (N pi_ij^2),  w_i? = n_i? / (N pi_i+^2),  w_?j = n_?j / (N pi_+j^2).
struct PrecisionField {
  double N = 0;
  Matrix w_joint;    // r x s
  Vector w_row;      // length r, zero means no missing features in row i
  Vector w_col;      // length s, zero means no missing classes in column j

  int rows() const { return static_cast<int>(w_joint.rows()); }
  int cols() const { return static_cast<int>(w_joint.cols()); }

  double rho(int i, int j) const {
    const double w = w_joint(i, j);
    return w > 0 ? 1.0 / w : std::numeric_limits<double>::infinity();
  }

  // rho_i+ = sum_j rho_ij; infinite when any cell weight vanishes
  double rho_row_sum(int i) const {
    double sum = 0;
    for (int j = 0; j < cols(); ++j) sum += rho(i, j);
    return sum;
  }

  // Q~_i? = rho_i? / (rho_i? + rho_i+), finite-safe as 1/(1 + rho_i+ w_i?)
  double q_row(int i) const { return 1.0 / (1.0 + rho_row_sum(i) * w_row(i)); }

  bool has_col_missing() const { return w_col.maxCoeff() > 0; }
};

inline PrecisionField precision_field(const EffectiveCounts& counts, const ChanceMatrix& pi_hat) {
  const int r = counts.rows(), s = counts.cols();
  PrecisionField field;
  field.N = counts.total();
  field.w_joint.resize(r, s);
  field.w_row.resize(r);
  field.w_col.resize(s);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < s; ++j) {
      const double n = counts.joint(i, j);
      const double p = pi_hat.cell(i, j);
      if (n > 0 && p <= 0) {
        std::ostringstream msg;
        msg << "precision_field: cell (" << i << "," << j
            << ") has positive count but zero chance; not a fitted mode";
        throw numeric_error(msg.str());
      }
      field.w_joint(i, j) = (n > 0) ? n / (field.N * p * p) : 0.0;
    }
    const double p = pi_hat.row_sum(i);
    field.w_row(i) = (counts.row_missing(i) > 0) ? counts.row_missing(i) / (field.N * p * p) : 0.0;
  }
  for (int j = 0; j < s; ++j) {
    const double p = pi_hat.col_sum(j);
    field.w_col(j) = (counts.col_missing(j) > 0) ? counts.col_missing(j) / (field.N * p * p) : 0.0;
  }
  return field;
}

namespace detail {

inline void require_invertible_cells(const PrecisionField& field, const char* where) {
  if (field.w_joint.minCoeff() <= 0) {
    std::ostringstream msg;
    msg << where << ": zero joint weight; use clamped_for_covariance() "
        << "(all joint exponents must be positive)";
    throw numeric_error(msg.str());
  }
}

}  // namespace detail

// Per-row Woodbury factorization of the precision kernel inverse. F[i] is
// the s x s inverse of the row block; the rank-s' update from column-missing
// counts is carried by G over the columns that actually have missingness.
struct WoodburyFactors {
  double N = 0;
  std::vector<Matrix> F;           // r blocks, each s x s, symmetric
  std::vector<int> update_cols;    // columns j with w_?j > 0
  Matrix G;                        // s' x s'
  Matrix G_inverse;

  int rows() const { return static_cast<int>(F.size()); }
  int cols() const { return F.empty() ? 0 : static_cast<int>(F[0].rows()); }

  // Restriction of sum_i F[i] * v.row(i) to the update columns.
  Vector coupling(const Matrix& v) const {
    Vector a = Vector::Zero(static_cast<int>(update_cols.size()));
    for (int i = 0; i < rows(); ++i) {
      const Vector fv = F[i] * v.row(i).transpose();
      for (std::size_t m = 0; m < update_cols.size(); ++m) a(static_cast<int>(m)) += fv(update_cols[m]);
    }
    return a;
  }

  // u^T A^{-1} v with u, v given cell-wise as r x s matrices; O(r s^2).
  double quadratic_form(const Matrix& u, const Matrix& v) const {
    double diag = 0;
    for (int i = 0; i < rows(); ++i)
      diag += u.row(i) * (F[i] * v.row(i).transpose());
    double corr = 0;
    if (!update_cols.empty())
      corr = coupling(u).dot(G_inverse * coupling(v));
    return (diag - corr) / N;
  }

  // A^{-1} v reshaped back to r x s.
  Matrix apply(const Matrix& v) const {
    Matrix out(rows(), cols());
    Vector b;
    if (!update_cols.empty()) b = G_inverse * coupling(v);
    for (int i = 0; i < rows(); ++i) {
      Vector y = F[i] * v.row(i).transpose();
      if (!update_cols.empty()) {
        Vector be = Vector::Zero(cols());
        for (std::size_t m = 0; m < update_cols.size(); ++m) be(update_cols[m]) = b(static_cast<int>(m));
        y -= F[i] * be;
      }
      out.row(i) = y.transpose() / N;
    }
    return out;
  }

  // Dense (rs) x (rs) inverse, row-major cell index i*s + j. Test/report use.
  Matrix dense_inverse() const {
    const int r = rows(), s = cols(), rs = r * s;
    Matrix inv = Matrix::Zero(rs, rs);
    for (int i = 0; i < r; ++i)
      inv.block(i * s, i * s, s, s) = F[i] / N;
    if (!update_cols.empty()) {
      const int sp = static_cast<int>(update_cols.size());
      Matrix FU(rs, sp);  // columns of F restricted to the update set
      for (int i = 0; i < r; ++i)
        for (int m = 0; m < sp; ++m)
          FU.block(i * s, m, s, 1) = F[i].col(update_cols[m]);
      inv -= FU * G_inverse * FU.transpose() / N;
    }
    return inv;
  }
};

inline WoodburyFactors kernel_inverse_general(const PrecisionField& field) {
  detail::require_invertible_cells(field, "kernel_inverse_general");
  const int r = field.rows(), s = field.cols();
  WoodburyFactors fac;
  fac.N = field.N;
  fac.F.reserve(r);
  for (int i = 0; i < r; ++i) {
    Vector rho(s);
    for (int j = 0; j < s; ++j) rho(j) = field.rho(i, j);
    const double c = field.w_row(i) / (1.0 + field.w_row(i) * rho.sum());
    Matrix Fi = rho.asDiagonal();
    if (c > 0) Fi -= c * (rho * rho.transpose());
    fac.F.push_back(std::move(Fi));
  }
  for (int j = 0; j < s; ++j)
    if (field.w_col(j) > 0) fac.update_cols.push_back(j);
  if (!fac.update_cols.empty()) {
    const int sp = static_cast<int>(fac.update_cols.size());
    fac.G = Matrix::Zero(sp, sp);
    for (int m = 0; m < sp; ++m)
      fac.G(m, m) = 1.0 / field.w_col(fac.update_cols[m]);
    for (int i = 0; i < r; ++i)
      for (int m = 0; m < sp; ++m)
        for (int n = 0; n < sp; ++n)
          fac.G(m, n) += fac.F[i](fac.update_cols[m], fac.update_cols[n]);
    Eigen::PartialPivLU<Matrix> lu(fac.G);
    if (lu.rcond() < 1e-12)
      throw numeric_error("kernel_inverse_general: coupling matrix numerically "
                          "singular; use a stronger prior");
    fac.G_inverse = lu.inverse();
  }
  return fac;
}

// Simplex-projected covariance: Cov = A^{-1} - (A^{-1}e)(A^{-1}e)^T / (e^T A^{-1} e).
inline Matrix covariance_general(const PrecisionField& field) {
  const WoodburyFactors fac = kernel_inverse_general(field);
  const Matrix ones = Matrix::Ones(field.rows(), field.cols());
  const Matrix t = fac.apply(ones);
  const double denom = t.sum();
  Matrix cov = fac.dense_inverse();
  // dense_inverse uses row-major cell index; remap t accordingly
  const int r = field.rows(), s = field.cols();
  Vector tflat(r * s);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) tflat(i * s + j) = t(i, j);
  cov -= (tflat * tflat.transpose()) / denom;
  return cov;
}

// Closed form for missing features only: no s' x s' inversion needed.
inline Matrix covariance_mfo(const PrecisionField& field) {
  if (field.has_col_missing())
    throw numeric_error("covariance_mfo: column-missing counts present");
  detail::require_invertible_cells(field, "covariance_mfo");
  const int r = field.rows(), s = field.cols(), rs = r * s;
  Vector rho_flat(rs), q(r), rho_row(r), c(r);
  for (int i = 0; i < r; ++i) {
    rho_row(i) = field.rho_row_sum(i);
    q(i) = field.q_row(i);
    c(i) = field.w_row(i) * q(i);  // = 1/(rho_i+ + rho_i?)
    for (int j = 0; j < s; ++j) rho_flat(i * s + j) = field.rho(i, j);
  }
  const double q_total = rho_row.dot(q);
  Matrix cov = Matrix::Zero(rs, rs);
  for (int i = 0; i < r; ++i) {
    auto block = cov.block(i * s, i * s, s, s);
    const auto rho_i = rho_flat.segment(i * s, s);
    block = rho_i.asDiagonal();
    block -= c(i) * (rho_i * rho_i.transpose());
  }
  Vector proj(rs);
  for (int i = 0; i < r; ++i)
    proj.segment(i * s, s) = q(i) * rho_flat.segment(i * s, s);
  cov -= (proj * proj.transpose()) / q_total;
  cov /= field.N;
  return cov;
}

}  // namespace incmi
