#pragma once

#include <random>
#include <sstream>

#include "incmi/contingency.hpp"
#include "incmi/dataio.hpp"

namespace test_helpers {

using incmi::ContingencyTable;
using incmi::Matrix;

inline bool exact_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline bool exact_equal(const incmi::Vector& a, const incmi::Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

struct TableOptions {
  int max_dim = 5;
  double max_total = 500;
  bool row_missing = true;
  bool col_missing = true;
  bool strictly_positive_joint = false;
};

// Random integer-count table with optional margin missingness.
inline ContingencyTable random_table(std::mt19937_64& rng, const TableOptions& opts = {}) {
  std::uniform_int_distribution<int> dim(2, opts.max_dim);
  const int r = dim(rng), s = dim(rng);
  ContingencyTable table(r, s);
  std::uniform_int_distribution<int> cell(opts.strictly_positive_joint ? 1 : 0,
                                          static_cast<int>(opts.max_total) / (r * s));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) table.joint(i, j) = cell(rng);
  if (table.joint.sum() == 0) table.joint(0, 0) = 1;
  std::uniform_int_distribution<int> miss(0, 5);
  if (opts.row_missing)
    for (int i = 0; i < r; ++i) table.row_missing(i) = miss(rng);
  if (opts.col_missing)
    for (int j = 0; j < s; ++j) table.col_missing(j) = miss(rng);
  return table;
}

// Random interior simplex point of the table's shape.
inline incmi::ChanceMatrix random_interior_point(std::mt19937_64& rng, int r, int s) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Matrix pi(r, s);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) pi(i, j) = unif(rng);
  pi /= pi.sum();
  return incmi::ChanceMatrix(std::move(pi));
}

// Synthetic categorical dataset in memory: one informative feature tied to
// the class, the rest independent noise, with missing values sprinkled in.
inline incmi::Dataset synthetic_dataset(std::mt19937_64& rng, long rows, int noise_features,
                                        double missing_rate, double majority = 0.7,
                                        double informative_strength = 0.85) {
  std::ostringstream text;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> noise(0, 2);
  for (long k = 0; k < rows; ++k) {
    const int cls = unif(rng) < majority ? 0 : 1;
    // informative feature follows the class most of the time
    const int info = unif(rng) < informative_strength ? cls : 1 - cls;
    if (unif(rng) < missing_rate) text << '?';
    else text << "v" << info;
    for (int f = 0; f < noise_features; ++f) {
      text << ',';
      if (unif(rng) < missing_rate) text << '?';
      else text << "w" << noise(rng);
    }
    text << ",c" << cls << '\n';
  }
  std::istringstream in(text.str());
  return incmi::parse_table(in, {});
}

}  // namespace test_helpers
