#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "incmi/errors.hpp"

namespace incmi {

enum class ColumnKind { categorical, numeric };

struct Cell {
  bool missing = true;
  int cat = -1;
  double num = 0;

  static Cell make_missing() { return {}; }
  static Cell category(int idx) { return {false, idx, 0}; }
  static Cell number(double v) { return {false, -1, v}; }
};

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::string> categories;  // first-appearance order
  std::vector<double> bin_edges;        // set by discretize, right-closed
  long missing_count = 0;
  bool constant_numeric = false;        // discretization diagnostic
};

struct Dataset {
  std::vector<ColumnSchema> columns;
  std::vector<std::vector<Cell>> rows;
  int class_column = 0;
  std::string missing_token = "?";
  char delimiter = ',';

  int num_columns() const { return static_cast<int>(columns.size()); }
  long num_rows() const { return static_cast<long>(rows.size()); }
  long total_missing() const {
    long sum = 0;
    for (const auto& c : columns) sum += c.missing_count;
    return sum;
  }
  std::vector<int> feature_columns() const {
    std::vector<int> out;
    for (int c = 0; c < num_columns(); ++c)
      if (c != class_column) out.push_back(c);
    return out;
  }
};

struct ParseOptions {
  char delimiter = ',';
  std::string missing_token = "?";
  int class_column = -1;  // negative counts from the end (-1 = last)
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, delim)) out.push_back(trim(tok));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

inline std::optional<double> parse_number(const std::string& tok) {
  if (tok.empty()) return std::nullopt;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  double value = 0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

inline std::string format_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace detail

inline Dataset parse_table(std::istream& in, const ParseOptions& options = {}) {
  std::vector<std::vector<std::string>> raw;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto tokens = detail::split(line, options.delimiter);
    if (!raw.empty() && tokens.size() != raw.front().size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": " << tokens.size() << " fields, expected "
          << raw.front().size();
      throw input_error(msg.str());
    }
    raw.push_back(std::move(tokens));
  }
  if (raw.empty()) throw input_error("empty input: no data rows");

  const int width = static_cast<int>(raw.front().size());
  Dataset ds;
  ds.delimiter = options.delimiter;
  ds.missing_token = options.missing_token;
  ds.class_column = options.class_column >= 0 ? options.class_column
                                              : width + options.class_column;
  if (ds.class_column < 0 || ds.class_column >= width) {
    std::ostringstream msg;
    msg << "class column " << options.class_column << " outside table of width " << width;
    throw input_error(msg.str());
  }

  ds.columns.resize(width);
  for (int c = 0; c < width; ++c) {
    ds.columns[c].name = "col" + std::to_string(c);
    bool numeric = true, any = false;
    for (const auto& row : raw) {
      if (row[c] == options.missing_token) continue;
      any = true;
      if (!detail::parse_number(row[c])) { numeric = false; break; }
    }
    ds.columns[c].kind = (any && numeric) ? ColumnKind::numeric : ColumnKind::categorical;
  }

  ds.rows.reserve(raw.size());
  for (const auto& tokens : raw) {
    std::vector<Cell> row(width);
    for (int c = 0; c < width; ++c) {
      if (tokens[c] == options.missing_token) {
        row[c] = Cell::make_missing();
        ++ds.columns[c].missing_count;
      } else if (ds.columns[c].kind == ColumnKind::numeric) {
        row[c] = Cell::number(*detail::parse_number(tokens[c]));
      } else {
        auto& cats = ds.columns[c].categories;
        auto it = std::find(cats.begin(), cats.end(), tokens[c]);
        int idx;
        if (it == cats.end()) {
          idx = static_cast<int>(cats.size());
          cats.push_back(tokens[c]);
        } else {
          idx = static_cast<int>(it - cats.begin());
        }
        row[c] = Cell::category(idx);
      }
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

inline Dataset parse_table_file(const std::string& path, const ParseOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  try {
    return parse_table(in, options);
  } catch (const input_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

inline void serialize_dataset(const Dataset& ds, std::ostream& data_out, std::ostream& schema_out) {
  for (const auto& row : ds.rows) {
    for (int c = 0; c < ds.num_columns(); ++c) {
      if (c) data_out << ds.delimiter;
      const Cell& cell = row[c];
      if (cell.missing) data_out << ds.missing_token;
      else if (ds.columns[c].kind == ColumnKind::numeric) data_out << detail::format_number(cell.num);
      else data_out << ds.columns[c].categories[cell.cat];
    }
    data_out << '\n';
  }
  schema_out << "columns: " << ds.num_columns() << '\n';
  schema_out << "class_column: " << ds.class_column << '\n';
  schema_out << "missing_token: " << ds.missing_token << '\n';
  for (int c = 0; c < ds.num_columns(); ++c) {
    const auto& col = ds.columns[c];
    const std::string key = "column." + std::to_string(c) + ".";
    schema_out << key << "name: " << col.name << '\n';
    schema_out << key << "kind: " << (col.kind == ColumnKind::numeric ? "numeric" : "categorical") << '\n';
    schema_out << key << "missing: " << col.missing_count << '\n';
    if (!col.categories.empty()) {
      schema_out << key << "categories:";
      for (const auto& cat : col.categories) schema_out << ' ' << cat;
      schema_out << '\n';
    }
    if (!col.bin_edges.empty()) {
      schema_out << key << "bin_edges:";
      for (double e : col.bin_edges) schema_out << ' ' << detail::format_number(e);
      schema_out << '\n';
    }
  }
}

// Equal-frequency binning of numeric columns; missing cells stay missing.
// Bins are right-closed; edge placement depends only on the sorted multiset
// of non-missing values.
inline Dataset discretize(const Dataset& input, int bins = 5) {
  if (bins < 1) throw input_error("discretize: bins must be >= 1");
  Dataset ds = input;
  for (int c = 0; c < ds.num_columns(); ++c) {
    auto& col = ds.columns[c];
    if (col.kind != ColumnKind::numeric) continue;
    std::vector<double> values;
    for (const auto& row : ds.rows)
      if (!row[c].missing) values.push_back(row[c].num);
    if (values.empty()) continue;  // all-missing numeric column: untouched
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    const long n = static_cast<long>(values.size());
    for (int b = 1; b < bins; ++b) {
      const long idx = std::max<long>(0, b * n / bins - 1);
      const double e = values[static_cast<std::size_t>(idx)];
      if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    while (!edges.empty() && edges.back() >= values.back()) edges.pop_back();
    col.constant_numeric = edges.empty();
    col.bin_edges = edges;
    col.kind = ColumnKind::categorical;
    col.categories.clear();
    for (std::size_t b = 0; b <= edges.size(); ++b)
      col.categories.push_back("bin" + std::to_string(b));
    for (auto& row : ds.rows) {
      if (row[c].missing) continue;
      int b = 0;
      while (b < static_cast<int>(edges.size()) && row[c].num > edges[b]) ++b;
      row[c] = Cell::category(b);
    }
  }
  return ds;
}

// Deterministic Fisher-Yates permutation of the rows.
inline Dataset shuffle_seeded(const Dataset& input, std::uint64_t seed) {
  Dataset ds = input;
  std::mt19937_64 rng(seed);
  for (std::size_t i = ds.rows.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(ds.rows[i - 1], ds.rows[j]);
  }
  return ds;
}

// FNV-1a over the canonical serialization; identifies a dataset in reports.
inline std::uint64_t dataset_digest(const Dataset& ds) {
  std::ostringstream data, schema;
  serialize_dataset(ds, data, schema);
  std::uint64_t h = 1469598103934665603ull;
  for (std::string blob : {data.str(), schema.str()})
    for (unsigned char ch : blob) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  return h;
}

}  // namespace incmi
