#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "incmi/contingency.hpp"
#include "incmi/errors.hpp"

namespace incmi {

// Incremental naive Bayes over categorical features. Missing feature values
// contribute no likelihood factor; Laplace smoothing keeps unseen values
// defined.
class NaiveBayesModel {
public:
  NaiveBayesModel(int num_classes, const std::vector<int>& feature_cardinalities,
                  double smoothing = 1.0)
      : class_counts_(num_classes, 0.0), smoothing_(smoothing) {
    if (num_classes < 1) throw input_error("naive bayes: need at least one class");
    if (smoothing < 0) throw input_error("naive bayes: smoothing must be >= 0");
    cond_counts_.reserve(feature_cardinalities.size());
    for (int card : feature_cardinalities) {
      if (card < 1) throw input_error("naive bayes: feature cardinality must be >= 1");
      cond_counts_.emplace_back(num_classes, std::vector<double>(card, 0.0));
    }
  }

  int num_classes() const { return static_cast<int>(class_counts_.size()); }
  int num_features() const { return static_cast<int>(cond_counts_.size()); }
  double training_instances() const {
    double sum = 0;
    for (double c : class_counts_) sum += c;
    return sum;
  }

  void update(const std::vector<std::optional<int>>& instance, int class_label) {
    check_class(class_label);
    if (instance.size() != cond_counts_.size())
      throw input_error("naive bayes: instance width mismatch");
    for (std::size_t f = 0; f < instance.size(); ++f)
      if (instance[f]) check_value(static_cast<int>(f), *instance[f]);
    class_counts_[class_label] += 1;
    for (std::size_t f = 0; f < instance.size(); ++f)
      if (instance[f]) cond_counts_[f][class_label][*instance[f]] += 1;
  }

  // Posterior over classes using only the selected, observed features.
  // Ties break toward the lower class index.
  struct Prediction {
    std::vector<double> posterior;
    int label = 0;
  };

  Prediction predict(const std::vector<std::optional<int>>& instance,
                     const std::vector<int>& selected_features) const {
    if (training_instances() == 0 && smoothing_ == 0)
      throw numeric_error("naive bayes: empty model with zero smoothing");
    const int r = num_classes();
    const double total = training_instances();
    std::vector<double> log_post(r);
    for (int c = 0; c < r; ++c)
      log_post[c] = std::log((class_counts_[c] + smoothing_) / (total + smoothing_ * r));
    for (int f : selected_features) {
      if (f < 0 || f >= num_features())
        throw input_error("naive bayes: selected feature out of range");
      if (!instance[f]) continue;
      check_value(f, *instance[f]);
      const int card = static_cast<int>(cond_counts_[f][0].size());
      for (int c = 0; c < r; ++c) {
        double in_class = 0;
        for (double v : cond_counts_[f][c]) in_class += v;
        log_post[c] += std::log((cond_counts_[f][c][*instance[f]] + smoothing_) /
                                (in_class + smoothing_ * card));
      }
    }
    double max_log = log_post[0];
    for (double v : log_post) max_log = std::max(max_log, v);
    Prediction out;
    out.posterior.resize(r);
    double norm = 0;
    for (int c = 0; c < r; ++c) {
      out.posterior[c] = std::exp(log_post[c] - max_log);
      norm += out.posterior[c];
    }
    for (int c = 0; c < r; ++c) out.posterior[c] /= norm;
    out.label = 0;
    for (int c = 1; c < r; ++c)
      if (out.posterior[c] > out.posterior[out.label]) out.label = c;
    return out;
  }

private:
  void check_class(int c) const {
    if (c < 0 || c >= num_classes()) {
      std::ostringstream msg;
      msg << "naive bayes: class label " << c << " outside [0, " << num_classes() << ")";
      throw input_error(msg.str());
    }
  }
  void check_value(int f, int v) const {
    const int card = static_cast<int>(cond_counts_[f][0].size());
    if (v < 0 || v >= card) {
      std::ostringstream msg;
      msg << "naive bayes: feature " << f << " value " << v << " outside [0, " << card << ")";
      throw input_error(msg.str());
    }
  }

  std::vector<double> class_counts_;
  std::vector<std::vector<std::vector<double>>> cond_counts_;  // [feature][class][value]
  double smoothing_;
};

}  // namespace incmi
