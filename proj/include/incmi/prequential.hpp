#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "incmi/contingency.hpp"
#include "incmi/dataio.hpp"
#include "incmi/errors.hpp"
#include "incmi/filters.hpp"
#include "incmi/mi.hpp"
#include "incmi/naive_bayes.hpp"

#include <nlohmann/json.hpp>

namespace incmi {

struct PrequentialConfig {
  FilterConfig filter;
  PriorSpec prior;
  double smoothing = 1.0;
  std::uint64_t seed = 0;
  // Default keeps the class-missing tallies out of the MI statistics so the
  // fast missing-features-only path applies; the general path consumes them.
  bool use_general_path = false;
};

struct ExperimentRecord {
  std::string filter_name;
  PrequentialConfig config;
  std::uint64_t dataset_digest = 0;
  long total_instances = 0;

  // per scored (class-labeled) instance
  std::vector<int> predicted;
  std::vector<int> actual;
  std::vector<int> correct;            // 0/1
  std::vector<double> running_accuracy;
  std::vector<int> selected_count;

  bool single_class_warning = false;
  long class_missing_instances = 0;

  double final_accuracy() const {
    return running_accuracy.empty() ? 0.0 : running_accuracy.back();
  }
  double average_selected() const {
    if (selected_count.empty()) return 0;
    double sum = 0;
    for (int v : selected_count) sum += v;
    return sum / static_cast<double>(selected_count.size());
  }
};

inline std::string filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::F: return "F";
    case FilterKind::FF: return "FF";
    case FilterKind::BF: return "BF";
  }
  return "?";
}

namespace detail {

inline MiSummary feature_summary(const ContingencyTable& counts, const PriorSpec& prior,
                                 bool use_general_path) {
  ContingencyTable table = counts;
  if (!use_general_path) table.col_missing.setZero();  // labeled data only
  if (table.total() <= 0) return MiSummary{};
  return mi_summary_of(apply_prior(table, prior));
}

}  // namespace detail

// Test-then-train loop: each instance is classified from the statistics of
// the preceding ones, then folded into the per-feature counts and the
// classifier. Class-missing instances only feed the counts.
inline ExperimentRecord run_prequential(const Dataset& dataset, const PrequentialConfig& config) {
  for (const auto& col : dataset.columns)
    if (col.kind != ColumnKind::categorical)
      throw input_error("run_prequential: discretize numeric columns first");
  config.filter.validate();

  const int class_col = dataset.class_column;
  const int r = std::max<int>(1, static_cast<int>(dataset.columns[class_col].categories.size()));
  const std::vector<int> features = dataset.feature_columns();
  std::vector<int> cardinality;
  for (int f : features)
    cardinality.push_back(std::max<int>(1, static_cast<int>(dataset.columns[f].categories.size())));

  ExperimentRecord record;
  record.filter_name = filter_name(config.filter.kind);
  record.config = config;
  record.dataset_digest = incmi::dataset_digest(dataset);
  record.total_instances = dataset.num_rows();
  record.single_class_warning = r < 2;

  std::vector<ContingencyTable> counts;
  counts.reserve(features.size());
  for (std::size_t k = 0; k < features.size(); ++k)
    counts.emplace_back(r, cardinality[k]);
  NaiveBayesModel model(r, cardinality, config.smoothing);

  long correct_total = 0;
  for (const auto& row : dataset.rows) {
    const Cell& cls = row[class_col];

    if (!cls.missing) {
      std::vector<int> selected;
      for (std::size_t k = 0; k < features.size(); ++k) {
        const MiSummary summary =
            detail::feature_summary(counts[k], config.prior, config.use_general_path);
        if (decide(config.filter, summary).include) selected.push_back(static_cast<int>(k));
      }
      std::vector<std::optional<int>> instance(features.size());
      for (std::size_t k = 0; k < features.size(); ++k) {
        const Cell& cell = row[features[k]];
        if (!cell.missing) instance[k] = cell.cat;
      }
      const auto pred = model.predict(instance, selected);
      record.predicted.push_back(pred.label);
      record.actual.push_back(cls.cat);
      const int ok = pred.label == cls.cat ? 1 : 0;
      record.correct.push_back(ok);
      correct_total += ok;
      record.running_accuracy.push_back(static_cast<double>(correct_total) /
                                        static_cast<double>(record.correct.size()));
      record.selected_count.push_back(static_cast<int>(selected.size()));
      model.update(instance, cls.cat);
    } else {
      ++record.class_missing_instances;
    }

    for (std::size_t k = 0; k < features.size(); ++k) {
      const Cell& cell = row[features[k]];
      if (!cls.missing && !cell.missing) counts[k].joint(cls.cat, cell.cat) += 1;
      else if (!cls.missing) counts[k].row_missing(cls.cat) += 1;
      else if (!cell.missing) counts[k].col_missing(cell.cat) += 1;
      else counts[k].dropped += 1;
    }
  }
  return record;
}

struct PrefixTTest {
  long k = 0;
  double t = 0;
  double p_value = 1;
  bool defined = false;      // k >= 2
  bool significant = false;
};

// Two-tailed paired t test on per-instance 0/1 correctness, one verdict per
// prefix length. Zero-variance differences: all-zero is never significant,
// constant nonzero is (infinite-t convention).
inline std::vector<PrefixTTest> paired_t_test(const std::vector<int>& correct_a,
                                              const std::vector<int>& correct_b,
                                              double level = 0.05) {
  if (correct_a.size() != correct_b.size())
    throw input_error("paired_t_test: sequences must have equal length");
  std::vector<PrefixTTest> out(correct_a.size());
  double sum = 0, sumsq = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    const double d = static_cast<double>(correct_a[i] - correct_b[i]);
    sum += d;
    sumsq += d * d;
    const long k = static_cast<long>(i) + 1;
    out[i].k = k;
    if (k < 2) continue;
    out[i].defined = true;
    const double mean = sum / k;
    const double var = std::max(0.0, (sumsq - k * mean * mean) / (k - 1));
    if (var == 0) {
      if (mean != 0) {
        out[i].t = mean > 0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
        out[i].p_value = 0;
        out[i].significant = true;
      }
      continue;
    }
    out[i].t = mean / std::sqrt(var / k);
    boost::math::students_t_distribution<double> dist(static_cast<double>(k - 1));
    out[i].p_value = 2 * boost::math::cdf(dist, -std::abs(out[i].t));
    out[i].significant = out[i].p_value < level;
  }
  return out;
}

namespace detail {

inline std::vector<std::pair<long, long>> significant_ranges(const std::vector<PrefixTTest>& tests) {
  std::vector<std::pair<long, long>> ranges;
  for (const auto& t : tests) {
    if (!t.significant) continue;
    if (!ranges.empty() && ranges.back().second == t.k - 1) ranges.back().second = t.k;
    else ranges.emplace_back(t.k, t.k);
  }
  return ranges;
}

}  // namespace detail

// Writes accuracy curves, the features-selected summary, pairwise
// significance ranges, and a machine-readable summary.json.
inline void emit_report(const std::vector<ExperimentRecord>& records,
                        const std::filesystem::path& out_dir, double level = 0.05) {
  if (records.empty()) throw input_error("emit_report: need at least one record");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  auto open = [&](const std::string& name) {
    std::ofstream out(out_dir / name);
    if (!out) throw input_error("emit_report: cannot write " + (out_dir / name).string());
    out.precision(12);
    return out;
  };

  nlohmann::json summary_json;
  {
    auto out = open("summary.csv");
    out << "filter,epsilon,p_bar,seed,dataset_digest,instances,scored,final_accuracy,avg_selected\n";
    for (const auto& rec : records) {
      out << rec.filter_name << ',' << rec.config.filter.epsilon << ',' << rec.config.filter.p_bar
          << ',' << rec.config.seed << ',' << rec.dataset_digest << ',' << rec.total_instances
          << ',' << rec.correct.size() << ',' << rec.final_accuracy() << ','
          << rec.average_selected() << '\n';
      summary_json["runs"].push_back({{"filter", rec.filter_name},
                                      {"epsilon", rec.config.filter.epsilon},
                                      {"p_bar", rec.config.filter.p_bar},
                                      {"seed", rec.config.seed},
                                      {"dataset_digest", rec.dataset_digest},
                                      {"instances", rec.total_instances},
                                      {"scored", rec.correct.size()},
                                      {"class_missing", rec.class_missing_instances},
                                      {"final_accuracy", rec.final_accuracy()},
                                      {"avg_selected", rec.average_selected()}});
    }
  }
  for (const auto& rec : records) {
    auto out = open(rec.filter_name + "_curve.csv");
    out << "instance,predicted,actual,correct,running_accuracy,selected_features\n";
    for (std::size_t i = 0; i < rec.correct.size(); ++i)
      out << (i + 1) << ',' << rec.predicted[i] << ',' << rec.actual[i] << ',' << rec.correct[i]
          << ',' << rec.running_accuracy[i] << ',' << rec.selected_count[i] << '\n';
  }
  {
    auto out = open("significance.csv");
    out << "filter_a,filter_b,k_start,k_end\n";
    for (std::size_t a = 0; a < records.size(); ++a) {
      for (std::size_t b = a + 1; b < records.size(); ++b) {
        if (records[a].correct.size() != records[b].correct.size()) continue;
        const auto tests = paired_t_test(records[a].correct, records[b].correct, level);
        for (auto [lo, hi] : detail::significant_ranges(tests)) {
          out << records[a].filter_name << ',' << records[b].filter_name << ',' << lo << ',' << hi
              << '\n';
          summary_json["significance"].push_back({{"filter_a", records[a].filter_name},
                                                  {"filter_b", records[b].filter_name},
                                                  {"k_start", lo},
                                                  {"k_end", hi}});
        }
      }
    }
  }
  open("summary.json") << summary_json.dump(2) << '\n';
}

}  // namespace incmi
