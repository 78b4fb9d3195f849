// Command line front end: posterior estimation, mutual-information summaries,
// feature-filter ranking, the prequential benchmark loop, and the brute-force
// oracle checks.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "incmi/incmi.hpp"

namespace {

using namespace incmi;

PriorSpec parse_prior(const std::string& text) {
  PriorSpec prior;
  if (text == "uniform") prior.kind = PriorKind::uniform;
  else if (text == "jeffreys") prior.kind = PriorKind::jeffreys;
  else if (text == "haldane") prior.kind = PriorKind::haldane;
  else if (text == "perks") prior.kind = PriorKind::perks;
  else if (text.rfind("custom:", 0) == 0) {
    prior.kind = PriorKind::custom;
    prior.pseudo_count = std::stod(text.substr(7));
    if (prior.pseudo_count < 0) throw input_error("custom prior pseudo-count must be >= 0");
  } else {
    throw input_error("unknown prior '" + text + "' (uniform|jeffreys|haldane|perks|custom:<x>)");
  }
  return prior;
}

FilterKind parse_filter(const std::string& text) {
  if (text == "F") return FilterKind::F;
  if (text == "FF") return FilterKind::FF;
  if (text == "BF") return FilterKind::BF;
  throw input_error("unknown filter '" + text + "' (F|FF|BF)");
}

// Table file: "r s", then r rows of s joint counts, then optional lines
// "rowmiss v1..vr" and "colmiss v1..vs". '#' starts a comment.
ContingencyTable read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line.substr(0, line.find('#')));
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next_number = [&](const char* what) {
    if (pos >= tokens.size()) throw input_error(path + ": unexpected end of file reading " + what);
    try {
      return std::stod(tokens[pos++]);
    } catch (const std::exception&) {
      throw input_error(path + ": bad " + std::string(what) + " '" + tokens[pos - 1] + "'");
    }
  };
  const int r = static_cast<int>(next_number("row count"));
  const int s = static_cast<int>(next_number("column count"));
  if (r < 1 || s < 1) throw input_error(path + ": dimensions must be positive");
  ContingencyTable table(r, s);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) table.joint(i, j) = next_number("joint count");
  while (pos < tokens.size()) {
    const std::string key = tokens[pos++];
    if (key == "rowmiss")
      for (int i = 0; i < r; ++i) table.row_missing(i) = next_number("rowmiss count");
    else if (key == "colmiss")
      for (int j = 0; j < s; ++j) table.col_missing(j) = next_number("colmiss count");
    else
      throw input_error(path + ": unexpected token '" + key + "'");
  }
  if (table.joint.minCoeff() < 0 || table.row_missing.minCoeff() < 0 ||
      table.col_missing.minCoeff() < 0)
    throw input_error(path + ": counts must be nonnegative");
  return table;
}

struct DataOptions {
  std::string path;
  std::string missing_token = "?";
  std::string delimiter = ",";
  int class_column = -1;
  int bins = 5;
};

void add_data_options(CLI::App* cmd, DataOptions* opts) {
  cmd->add_option("data", opts->path, "delimited dataset file")->required();
  cmd->add_option("--missing-token", opts->missing_token, "missing-value marker (default ?)");
  cmd->add_option("--delimiter", opts->delimiter, "field delimiter (default ,)");
  cmd->add_option("--class-column", opts->class_column,
                  "class column index; negative counts from the end (default -1 = last)");
  cmd->add_option("--bins", opts->bins, "equal-frequency bins for numeric columns (default 5)");
}

Dataset load_dataset(const DataOptions& opts) {
  ParseOptions parse;
  parse.missing_token = opts.missing_token;
  parse.class_column = opts.class_column;
  if (opts.delimiter.size() != 1) throw input_error("delimiter must be a single character");
  parse.delimiter = opts.delimiter[0];
  return discretize(parse_table_file(opts.path, parse), opts.bins);
}

void print_matrix(std::ostream& out, const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

int cmd_estimate(const std::string& table_path, const std::string& prior_text, bool with_cov) {
  const ContingencyTable table = read_table_file(table_path);
  const EffectiveCounts counts = apply_prior(table, parse_prior(prior_text));
  const ModeResult mode = fit_mode(counts);
  std::cout << std::setprecision(12);
  std::cout << "path: "
            << (mode.path == ModePath::em_iterative
                    ? "em-iterative"
                    : mode.path == ModePath::closed_form_rows ? "closed-form-rows"
                                                              : "closed-form-cols")
            << "\niterations: " << mode.iterations << "\nresidual: " << mode.residual
            << "\nmode:\n";
  print_matrix(std::cout, mode.pi_hat.cell);
  if (with_cov) {
    const EffectiveCounts clamped = counts.clamped_for_covariance();
    const ModeResult cmode = fit_mode(clamped);
    const PrecisionField field = precision_field(clamped, cmode.pi_hat);
    const Matrix cov = counts.has_col_missing() ? covariance_general(field) : covariance_mfo(field);
    std::cout << "covariance:\n";
    print_matrix(std::cout, cov);
  }
  return 0;
}

int cmd_mi(const std::string& table_path, const std::string& prior_text, double epsilon,
           double level) {
  const ContingencyTable table = read_table_file(table_path);
  const MiSummary summary = mi_summary_of(apply_prior(table, parse_prior(prior_text)));
  const auto [lo, hi] = credible_interval(summary, level);
  std::cout << std::setprecision(12);
  std::cout << "mean: " << summary.mean << "\nvariance: " << summary.variance
            << "\nsd: " << summary.sd() << "\ni_max: " << summary.i_max << "\npath: "
            << (summary.path == MiPath::complete ? "complete"
                                                 : summary.path == MiPath::mfo ? "mfo" : "general")
            << "\ncredible_interval_" << level << ": [" << lo << ", " << hi << "]"
            << "\ntail_prob_above_" << epsilon << ": " << tail_probability(summary, epsilon)
            << '\n';
  if (summary.degenerate) std::cout << "note: leading-order variance degenerate\n";
  return 0;
}

std::vector<MiSummary> dataset_feature_summaries(const Dataset& ds, const PriorSpec& prior,
                                                 bool general) {
  const int class_col = ds.class_column;
  const int r = std::max<int>(1, static_cast<int>(ds.columns[class_col].categories.size()));
  std::vector<MiSummary> summaries;
  for (int f : ds.feature_columns()) {
    const int s = std::max<int>(1, static_cast<int>(ds.columns[f].categories.size()));
    ContingencyTable table(r, s);
    for (const auto& row : ds.rows) {
      const Cell& c = row[class_col];
      const Cell& v = row[f];
      if (!c.missing && !v.missing) table.joint(c.cat, v.cat) += 1;
      else if (!c.missing) table.row_missing(c.cat) += 1;
      else if (!v.missing) table.col_missing(v.cat) += 1;
      else table.dropped += 1;
    }
    if (!general) table.col_missing.setZero();
    summaries.push_back(table.total() > 0 ? mi_summary_of(apply_prior(table, prior)) : MiSummary{});
  }
  return summaries;
}

int cmd_filter_rank(const DataOptions& data_opts, const FilterConfig& filter,
                    const std::string& prior_text, bool general) {
  const Dataset ds = load_dataset(data_opts);
  const auto summaries = dataset_feature_summaries(ds, parse_prior(prior_text), general);
  const FeatureRanking ranking = rank_features(summaries, filter);
  const auto features = ds.feature_columns();
  std::cout << std::setprecision(8);
  std::cout << "feature,mi_mean,mi_sd,tail_prob,include\n";
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& d = ranking.decisions[k];
    std::cout << ds.columns[features[k]].name << ',' << d.mi_mean << ',' << d.mi_sd << ','
              << d.tail_prob << ',' << (d.include ? 1 : 0) << '\n';
  }
  std::cout << "included_by_rank:";
  for (int idx : ranking.included) std::cout << ' ' << ds.columns[features[idx]].name;
  std::cout << '\n';
  return 0;
}

int cmd_prequential(const DataOptions& data_opts, std::vector<std::string> filter_names,
                    double epsilon, double p_bar, const std::string& prior_text,
                    std::uint64_t seed, bool general, const std::string& out_dir) {
  Dataset ds = shuffle_seeded(load_dataset(data_opts), seed);
  if (filter_names.empty()) filter_names = {"FF", "F", "BF"};
  std::vector<ExperimentRecord> records;
  for (const auto& name : filter_names) {
    PrequentialConfig config;
    config.filter.kind = parse_filter(name);
    config.filter.epsilon = epsilon;
    config.filter.p_bar = p_bar;
    config.prior = parse_prior(prior_text);
    config.seed = seed;
    config.use_general_path = general;
    records.push_back(run_prequential(ds, config));
    const auto& rec = records.back();
    std::cout << name << ": accuracy " << rec.final_accuracy() << ", avg features "
              << rec.average_selected() << " (" << rec.correct.size() << " scored of "
              << rec.total_instances << ")\n";
  }
  emit_report(records, out_dir);
  std::cout << "report written to " << out_dir << '\n';
  return 0;
}

struct CheckPrinter {
  int failures = 0;
  void check(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    if (!ok) ++failures;
  }
};

int cmd_oracle_check(long draws, std::uint64_t seed) {
  CheckPrinter out;
  std::cout << std::setprecision(6);

  {  // complete data vs Dirichlet sampling
    ContingencyTable table(2, 2);
    table.joint << 40, 10, 10, 40;
    const EffectiveCounts counts = apply_prior(table);
    const MiSummary summary = mi_summary_of(counts);
    const OracleMoments mc = dirichlet_moments_mc(counts, draws, seed);
    const double mean_gap = std::abs(summary.mean - mc.mean_I);
    const double var_rel = std::abs(summary.variance - mc.var_I) / mc.var_I;
    std::ostringstream detail;
    detail << "mean gap " << mean_gap << " (O(1/N) bound " << 3.0 / counts.total()
           << "), var rel err " << var_rel;
    out.check("dirichlet-mc complete 2x2", mean_gap < 3.0 / counts.total() && var_rel < 0.25,
              detail.str());
  }
  {  // missing features only vs grid integration
    ContingencyTable table(2, 2);
    table.joint << 30, 10, 15, 25;
    table.row_missing << 10, 10;
    const EffectiveCounts counts = apply_prior(table);
    const MiSummary summary = mi_summary_of(counts);
    const OracleMoments grid = incomplete_posterior_moments(counts, OracleMethod::grid, 160);
    const double mean_gap = std::abs(summary.mean - grid.mean_I);
    const double var_rel = std::abs(summary.variance - grid.var_I) / grid.var_I;
    std::ostringstream detail;
    detail << "mean gap " << mean_gap << ", var rel err " << var_rel;
    out.check("grid oracle mfo 2x2", mean_gap < 3.0 / counts.total() && var_rel < 0.3,
              detail.str());
  }
  {  // general missingness vs importance sampling
    ContingencyTable table(2, 2);
    table.joint << 30, 10, 15, 25;
    table.row_missing << 10, 5;
    table.col_missing << 5, 10;
    const EffectiveCounts counts = apply_prior(table);
    const MiSummary summary = mi_summary_of(counts);
    const OracleMoments is = incomplete_posterior_moments(counts, OracleMethod::importance, draws, seed);
    const double mean_gap = std::abs(summary.mean - is.mean_I);
    const double var_rel = std::abs(summary.variance - is.var_I) / is.var_I;
    std::ostringstream detail;
    detail << "mean gap " << mean_gap << ", var rel err " << var_rel << ", ESS " << is.ess;
    out.check("importance oracle general 2x2",
              is.reliable && mean_gap < 3.0 / counts.total() && var_rel < 0.3, detail.str());
  }
  {  // Woodbury assembly vs dense elimination
    ContingencyTable table(3, 4);
    table.joint << 5, 3, 2, 7, 4, 6, 1, 2, 3, 3, 5, 4;
    table.row_missing << 2, 1, 3;
    table.col_missing << 1, 2, 1, 1;
    const EffectiveCounts counts = apply_prior(table).clamped_for_covariance();
    const ModeResult mode = fit_mode(counts);
    const PrecisionField field = precision_field(counts, mode.pi_hat);
    const Matrix dense = dense_kernel_inverse(field);
    const Matrix assembled = kernel_inverse_general(field).dense_inverse();
    const double gap = (dense - assembled).cwiseAbs().maxCoeff();
    std::ostringstream detail;
    detail << "max |dense - woodbury| = " << gap;
    out.check("woodbury vs dense inverse 3x4", gap < 1e-8, detail.str());
  }

  if (out.failures) {
    std::cout << out.failures << " check(s) failed\n";
    return 2;
  }
  std::cout << "all oracle checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mutual-information estimation from incomplete categorical data"};
  app.require_subcommand(1);

  std::string table_path, prior_text = "uniform", out_dir = "report";
  double epsilon = 0.003, p_bar = 0.95, level = 0.95;
  bool with_cov = false, general = false;
  std::uint64_t seed = 0;
  long draws = 1000000;
  std::vector<std::string> filter_names;
  std::string filter_single = "FF";
  DataOptions data_opts;

  auto* estimate = app.add_subcommand("estimate", "posterior mode (and covariance) of a table");
  estimate->add_option("table", table_path, "count table file")->required();
  estimate->add_option("--prior", prior_text, "uniform|jeffreys|haldane|perks|custom:<x>");
  estimate->add_flag("--covariance", with_cov, "also print the dense covariance matrix");

  auto* mi = app.add_subcommand("mi", "mutual-information mean/variance/interval of a table");
  mi->add_option("table", table_path, "count table file")->required();
  mi->add_option("--prior", prior_text, "prior specification");
  mi->add_option("--epsilon", epsilon, "tail threshold in nats (default 0.003)");
  mi->add_option("--level", level, "credible-interval level (default 0.95)");

  auto* rank = app.add_subcommand("filter-rank", "per-feature filter decisions for a dataset");
  add_data_options(rank, &data_opts);
  rank->add_option("--filter", filter_single, "F|FF|BF (default FF)");
  rank->add_option("--epsilon", epsilon, "threshold in nats (default 0.003)");
  rank->add_option("--pbar", p_bar, "posterior level (default 0.95)");
  rank->add_option("--prior", prior_text, "prior specification");
  rank->add_flag("--general", general, "use class-missing counts via the general path");

  auto* preq = app.add_subcommand("prequential", "incremental filter + naive Bayes benchmark");
  add_data_options(preq, &data_opts);
  preq->add_option("--filter", filter_names, "filters to run (default FF F BF)");
  preq->add_option("--epsilon", epsilon, "threshold in nats (default 0.003)");
  preq->add_option("--pbar", p_bar, "posterior level (default 0.95)");
  preq->add_option("--prior", prior_text, "prior specification");
  preq->add_option("--seed", seed, "shuffle seed (default 0)");
  preq->add_option("--out-dir", out_dir, "report directory (default report)");
  preq->add_flag("--general", general, "use class-missing counts via the general path");

  auto* oracle = app.add_subcommand("oracle-check", "validate the formulas against brute force");
  oracle->add_option("--draws", draws, "Monte-Carlo draws (default 1e6)");
  oracle->add_option("--seed", seed, "oracle RNG seed");

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return cmd_estimate(table_path, prior_text, with_cov);
    if (mi->parsed()) return cmd_mi(table_path, prior_text, epsilon, level);
    if (rank->parsed()) {
      FilterConfig filter{parse_filter(filter_single), epsilon, p_bar};
      return cmd_filter_rank(data_opts, filter, prior_text, general);
    }
    if (preq->parsed())
      return cmd_prequential(data_opts, filter_names, epsilon, p_bar, prior_text, seed, general,
                             out_dir);
    if (oracle->parsed()) return cmd_oracle_check(draws, seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const incmi::input_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const incmi::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
