#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "incmi/errors.hpp"

namespace incmi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Joint counts n_ij over an r x s table, extended with the margin-only
// counts for instances where one component is unobserved: row_missing[i]
// counts (i, ?) instances, col_missing[j] counts (?, j) instances.
// Counts are reals so fractional pseudo-counts share the same code path.
struct ContingencyTable {
  Matrix joint;        // r x s
  Vector row_missing;  // length r, class observed / feature missing
  Vector col_missing;  // length s, feature observed / class missing
  double dropped = 0;  // instances with both components missing (diagnostic)

  ContingencyTable(int r, int s)
      : joint(Matrix::Zero(r, s)),
        row_missing(Vector::Zero(r)),
        col_missing(Vector::Zero(s)) {
    if (r < 1 || s < 1) throw input_error("table dimensions must be positive");
  }

  int rows() const { return static_cast<int>(joint.rows()); }
  int cols() const { return static_cast<int>(joint.cols()); }

  // n: total of fully observed pairs
  double n() const { return joint.sum(); }
  // N: all instances with at least one observed component
  double total() const { return joint.sum() + row_missing.sum() + col_missing.sum(); }

  Vector row_sums() const { return joint.rowwise().sum(); }
  Vector col_sums() const { return joint.colwise().sum().transpose(); }

  bool has_row_missing() const { return row_missing.maxCoeff() > 0; }
  bool has_col_missing() const { return col_missing.maxCoeff() > 0; }
};

enum class PriorKind { uniform, jeffreys, haldane, perks, custom };

struct PriorSpec {
  PriorKind kind = PriorKind::uniform;
  double pseudo_count = 1.0;  // per-cell n'' for custom

  // per-cell prior weight n''
  double cell_weight(int r, int s) const {
    switch (kind) {
      case PriorKind::uniform: return 1.0;
      case PriorKind::jeffreys: return 0.5;
      case PriorKind::haldane: return 0.0;
      case PriorKind::perks: return 1.0 / (static_cast<double>(r) * s);
      case PriorKind::custom: return pseudo_count;
    }
    return 1.0;
  }
};

// Posterior exponents: joint cells carry n' + n'' - 1, margin-missing
// counts pass through unchanged. Joint exponents may be negative here;
// covariance paths clamp them first (see clamped_for_covariance).
struct EffectiveCounts {
  Matrix joint;
  Vector row_missing;
  Vector col_missing;

  static constexpr double exponent_floor = 1e-6;

  int rows() const { return static_cast<int>(joint.rows()); }
  int cols() const { return static_cast<int>(joint.cols()); }
  double total() const { return joint.sum() + row_missing.sum() + col_missing.sum(); }
  bool has_row_missing() const { return row_missing.maxCoeff() > 0; }
  bool has_col_missing() const { return col_missing.maxCoeff() > 0; }

  // The precision kernel needs every joint exponent strictly positive;
  // raise tiny or negative cells to the floor. Mode fitting tolerates
  // zeros and does not use this.
  EffectiveCounts clamped_for_covariance() const {
    EffectiveCounts out = *this;
    out.joint = out.joint.cwiseMax(exponent_floor);
    return out;
  }
};

// A point on the rs-simplex with cached marginals.
struct ChanceMatrix {
  Matrix cell;       // pi_ij
  Vector row_sum;    // pi_i+
  Vector col_sum;    // pi_+j

  explicit ChanceMatrix(Matrix pi)
      : cell(std::move(pi)),
        row_sum(cell.rowwise().sum()),
        col_sum(cell.colwise().sum().transpose()) {}

  int rows() const { return static_cast<int>(cell.rows()); }
  int cols() const { return static_cast<int>(cell.cols()); }

  ChanceMatrix transposed() const { return ChanceMatrix(cell.transpose()); }
};

// One observation; nullopt marks a missing component. Categories are 0-based.
struct Observation {
  std::optional<int> cls;
  std::optional<int> feature;
};

inline ContingencyTable tabulate(const std::vector<Observation>& instances, int r, int s) {
  ContingencyTable table(r, s);
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& obs = instances[k];
    auto check = [&](int v, int bound, const char* what) {
      if (v < 0 || v >= bound) {
        std::ostringstream msg;
        msg << "instance " << k << ": " << what << " index " << v
            << " outside [0, " << bound << ")";
        throw input_error(msg.str());
      }
    };
    if (obs.cls && obs.feature) {
      check(*obs.cls, r, "class");
      check(*obs.feature, s, "feature");
      table.joint(*obs.cls, *obs.feature) += 1;
    } else if (obs.cls) {
      check(*obs.cls, r, "class");
      table.row_missing(*obs.cls) += 1;
    } else if (obs.feature) {
      check(*obs.feature, s, "feature");
      table.col_missing(*obs.feature) += 1;
    } else {
      table.dropped += 1;
    }
  }
  return table;
}

inline EffectiveCounts apply_prior(const ContingencyTable& table, const PriorSpec& prior = {}) {
  EffectiveCounts out;
  const double w = prior.cell_weight(table.rows(), table.cols());
  out.joint = table.joint.array() + (w - 1.0);
  out.row_missing = table.row_missing;
  out.col_missing = table.col_missing;
  return out;
}

inline ContingencyTable transpose(const ContingencyTable& table) {
  ContingencyTable out(table.cols(), table.rows());
  out.joint = table.joint.transpose();
  out.row_missing = table.col_missing;
  out.col_missing = table.row_missing;
  out.dropped = table.dropped;
  return out;
}

inline EffectiveCounts transpose(const EffectiveCounts& counts) {
  EffectiveCounts out;
  out.joint = counts.joint.transpose();
  out.row_missing = counts.col_missing;
  out.col_missing = counts.row_missing;
  return out;
}

}  // namespace incmi
