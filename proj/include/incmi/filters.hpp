#pragma once

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <numeric>
#include <vector>

#include "incmi/errors.hpp"
#include "incmi/mi.hpp"

namespace incmi {

enum class FilterKind { F, FF, BF };

struct FilterConfig {
  FilterKind kind = FilterKind::FF;
  double epsilon = 0.003;  // nats
  double p_bar = 0.95;

  void validate() const {
    if (epsilon < 0) throw input_error("filter: epsilon must be >= 0");
    if (p_bar <= 0.5 || p_bar >= 1) throw input_error("filter: p_bar must be in (0.5, 1)");
  }
};

struct FilterDecision {
  bool include = false;
  double mi_mean = 0;
  double mi_sd = 0;
  double tail_prob = 0;  // p(I > epsilon | data)
};

inline double gaussian_quantile(double p) {
  boost::math::normal_distribution<double> gauss;
  return boost::math::quantile(gauss, p);
}

// F includes at mean >= eps. FF/BF are evaluated in threshold form, which is
// algebraically identical to comparing the Gaussian tail against p_bar:
//   p(I > eps) >= p_bar  <=>  mean >= eps + z sd      (FF)
//   p(I <= eps) >= p_bar <=>  mean <= eps - z sd      (BF discards)
inline FilterDecision decide(const FilterConfig& config, const MiSummary& summary) {
  config.validate();
  FilterDecision d;
  d.mi_mean = summary.mean;
  d.mi_sd = summary.sd();
  d.tail_prob = tail_probability(summary, config.epsilon);
  if (summary.variance <= 0) {
    // point mass: the three rules degenerate to comparing mean with eps
    switch (config.kind) {
      case FilterKind::F: d.include = summary.mean >= config.epsilon; break;
      case FilterKind::FF: d.include = summary.mean > config.epsilon; break;
      case FilterKind::BF: d.include = summary.mean > config.epsilon; break;
    }
    return d;
  }
  const double z = gaussian_quantile(config.p_bar);
  switch (config.kind) {
    case FilterKind::F: d.include = summary.mean >= config.epsilon; break;
    case FilterKind::FF: d.include = summary.mean >= config.epsilon + z * d.mi_sd; break;
    case FilterKind::BF: d.include = summary.mean > config.epsilon - z * d.mi_sd; break;
  }
  return d;
}

struct FeatureRanking {
  std::vector<FilterDecision> decisions;  // aligned with the input order
  std::vector<int> included;              // feature indices, mean descending, stable
};

inline FeatureRanking rank_features(const std::vector<MiSummary>& summaries,
                                    const FilterConfig& config) {
  FeatureRanking out;
  out.decisions.reserve(summaries.size());
  for (const auto& s : summaries) out.decisions.push_back(decide(config, s));
  std::vector<int> order(summaries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return summaries[a].mean > summaries[b].mean;
  });
  for (int idx : order)
    if (out.decisions[idx].include) out.included.push_back(idx);
  return out;
}

}  // namespace incmi
