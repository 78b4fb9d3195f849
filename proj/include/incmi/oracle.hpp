#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "incmi/contingency.hpp"
#include "incmi/covariance.hpp"
#include "incmi/errors.hpp"
#include "incmi/mi.hpp"

namespace incmi {

// Brute-force posterior moments used to validate the leading-order formulas.
// Correctness over speed throughout.
struct OracleMoments {
  Matrix mean_pi;    // r x s
  Matrix cov;        // (rs) x (rs), row-major cell index
  double mean_I = 0;
  double var_I = 0;
  double se_mean_I = 0;   // Monte-Carlo only
  double se_var_I = 0;    // Monte-Carlo only
  double ess = 0;         // importance sampling only
  bool reliable = true;
};

namespace oracle_detail {

inline double mi_of(const Matrix& pi) { return plugin_mi(ChanceMatrix(pi)); }

struct Accumulator {
  int r, s;
  double wsum = 0, wsq = 0;
  Matrix mean_pi;
  Matrix second;   // E[vec vec^T]
  double sum_I = 0, sum_I2 = 0;

  Accumulator(int r_, int s_)
      : r(r_), s(s_), mean_pi(Matrix::Zero(r_, s_)), second(Matrix::Zero(r_ * s_, r_ * s_)) {}

  void add(const Matrix& pi, double w) {
    wsum += w;
    wsq += w * w;
    mean_pi += w * pi;
    Vector flat(r * s);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < s; ++j) flat(i * s + j) = pi(i, j);
    second += w * (flat * flat.transpose());
    const double I = mi_of(pi);
    sum_I += w * I;
    sum_I2 += w * I * I;
  }

  OracleMoments finish() const {
    if (wsum <= 0) throw numeric_error("oracle: zero total weight");
    OracleMoments out;
    out.mean_pi = mean_pi / wsum;
    Vector flat(r * s);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < s; ++j) flat(i * s + j) = out.mean_pi(i, j);
    out.cov = second / wsum - flat * flat.transpose();
    out.mean_I = sum_I / wsum;
    out.var_I = sum_I2 / wsum - out.mean_I * out.mean_I;
    out.ess = wsum * wsum / wsq;
    return out;
  }
};

}  // namespace oracle_detail

// Exact Dirichlet posterior for complete data, via normalized gamma draws.
// Standard errors come from 100 equal batches.
inline OracleMoments dirichlet_moments_mc(const EffectiveCounts& counts, long draws,
                                          std::uint64_t seed = 1) {
  if (counts.has_row_missing() || counts.has_col_missing())
    throw input_error("dirichlet_moments_mc: table must be complete");
  if (draws < 10000) throw input_error("dirichlet_moments_mc: need at least 1e4 draws");
  const int r = counts.rows(), s = counts.cols();
  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j)
      gammas.emplace_back(counts.joint(i, j) + 1.0, 1.0);

  oracle_detail::Accumulator acc(r, s);
  const int batches = 100;
  const long per_batch = draws / batches;
  std::vector<double> batch_mean(batches, 0), batch_sq(batches, 0);
  Matrix pi(r, s);
  for (int b = 0; b < batches; ++b) {
    for (long d = 0; d < per_batch; ++d) {
      double total = 0;
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < s; ++j) {
          pi(i, j) = gammas[i * s + j](rng);
          total += pi(i, j);
        }
      pi /= total;
      acc.add(pi, 1.0);
      const double I = oracle_detail::mi_of(pi);
      batch_mean[b] += I;
      batch_sq[b] += I * I;
    }
  }
  OracleMoments out = acc.finish();
  double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
  std::vector<double> bvar(batches);
  for (int b = 0; b < batches; ++b) {
    batch_mean[b] /= per_batch;
    bvar[b] = batch_sq[b] / per_batch - batch_mean[b] * batch_mean[b];
    m1 += batch_mean[b];
    v1 += bvar[b];
  }
  m1 /= batches;
  v1 /= batches;
  for (int b = 0; b < batches; ++b) {
    m2 += (batch_mean[b] - m1) * (batch_mean[b] - m1);
    v2 += (bvar[b] - v1) * (bvar[b] - v1);
  }
  out.se_mean_I = std::sqrt(m2 / (batches - 1.0) / batches);
  out.se_var_I = std::sqrt(v2 / (batches - 1.0) / batches);
  return out;
}

enum class OracleMethod { grid, importance };

// Moments of the exact incomplete-data posterior by numeric integration.
// Grid: midpoint lattice over the simplex, feasible for rs <= 6.
// Importance sampling: Dirichlet proposal on the joint exponents, weights
// are the missing-margin likelihood factors.
inline OracleMoments incomplete_posterior_moments(const EffectiveCounts& counts,
                                                  OracleMethod method, long resolution_or_draws,
                                                  std::uint64_t seed = 1,
                                                  double ess_threshold = 1000) {
  const int r = counts.rows(), s = counts.cols();
  const int rs = r * s;

  auto log_weight_margins = [&](const Matrix& pi) {
    double lw = 0;
    for (int i = 0; i < r; ++i)
      if (counts.row_missing(i) > 0) {
        const double p = pi.row(i).sum();
        if (p <= 0) return -std::numeric_limits<double>::infinity();
        lw += counts.row_missing(i) * std::log(p);
      }
    for (int j = 0; j < s; ++j)
      if (counts.col_missing(j) > 0) {
        const double p = pi.col(j).sum();
        if (p <= 0) return -std::numeric_limits<double>::infinity();
        lw += counts.col_missing(j) * std::log(p);
      }
    return lw;
  };

  if (method == OracleMethod::grid) {
    if (rs > 6) throw input_error("grid oracle: rs must be <= 6");
    const long R = resolution_or_draws;
    if (R < 4) throw input_error("grid oracle: resolution too small");
    const double h = 1.0 / static_cast<double>(R);
    const int dim = rs - 1;

    auto log_density = [&](const Matrix& pi) {
      double L = log_weight_margins(pi);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < s; ++j) {
          if (counts.joint(i, j) == 0) continue;
          if (pi(i, j) <= 0) return -std::numeric_limits<double>::infinity();
          L += counts.joint(i, j) * std::log(pi(i, j));
        }
      return L;
    };

    // two passes: locate the max log-density, then accumulate shifted weights
    Matrix pi(r, s);
    std::vector<long> idx(dim, 0);
    auto fill = [&](bool* ok) {
      double sum = 0;
      for (int d = 0; d < dim; ++d) {
        const double v = (idx[d] + 0.5) * h;
        pi(d / s, d % s) = v;
        sum += v;
      }
      *ok = sum < 1.0;
      if (*ok) pi((rs - 1) / s, (rs - 1) % s) = 1.0 - sum;
    };
    auto for_each_point = [&](auto&& visit) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        bool ok;
        fill(&ok);
        if (ok) visit(pi);
        int d = 0;
        while (d < dim) {
          if (++idx[d] < R) break;
          idx[d] = 0;
          ++d;
        }
        if (d == dim) break;
      }
    };

    double max_log = -std::numeric_limits<double>::infinity();
    for_each_point([&](const Matrix& p) { max_log = std::max(max_log, log_density(p)); });
    if (!std::isfinite(max_log)) throw numeric_error("grid oracle: density vanishes everywhere");
    oracle_detail::Accumulator acc(r, s);
    for_each_point([&](const Matrix& p) {
      const double lw = log_density(p) - max_log;
      if (lw > -745) acc.add(p, std::exp(lw));
    });
    OracleMoments out = acc.finish();
    out.ess = 0;
    return out;
  }

  // importance sampling
  const long draws = resolution_or_draws;
  if (draws < 10000) throw input_error("importance oracle: need at least 1e4 draws");
  std::mt19937_64 rng(seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j)
      gammas.emplace_back(counts.joint(i, j) + 1.0, 1.0);
  // draw first to center the log-weights, then accumulate
  std::vector<Matrix> samples;
  samples.reserve(draws);
  std::vector<double> logw(draws);
  double max_lw = -std::numeric_limits<double>::infinity();
  Matrix pi(r, s);
  for (long d = 0; d < draws; ++d) {
    double total = 0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < s; ++j) {
        pi(i, j) = gammas[i * s + j](rng);
        total += pi(i, j);
      }
    pi /= total;
    samples.push_back(pi);
    logw[d] = log_weight_margins(pi);
    max_lw = std::max(max_lw, logw[d]);
  }
  oracle_detail::Accumulator acc(r, s);
  for (long d = 0; d < draws; ++d) acc.add(samples[d], std::exp(logw[d] - max_lw));
  OracleMoments out = acc.finish();
  out.reliable = out.ess >= ess_threshold;
  return out;
}

// Direct dense inverse of the assembled precision kernel; adjudicates the
// factored Woodbury assembly on small instances.
inline Matrix dense_kernel_inverse(const PrecisionField& field) {
  const int r = field.rows(), s = field.cols(), rs = r * s;
  if (rs > 200) throw input_error("dense_kernel_inverse: rs must be <= 200");
  Matrix A = Matrix::Zero(rs, rs);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) {
      const int a = i * s + j;
      A(a, a) += field.N * field.w_joint(i, j);
      for (int l = 0; l < s; ++l) A(a, i * s + l) += field.N * field.w_row(i);
      for (int k = 0; k < r; ++k) A(a, k * s + j) += field.N * field.w_col(j);
    }
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw numeric_error("dense_kernel_inverse: singular kernel");
  return lu.inverse();
}

}  // namespace incmi
