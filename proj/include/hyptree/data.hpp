/*
 * Copyright 2026 The hyptree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Tabular data: CSV ingestion with one-hot encoding, quantile binning of
// feature columns, and k-fold index plans.

#ifndef HYPTREE_DATA_HPP_
#define HYPTREE_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hyptree/error.hpp"
#include "hyptree/rng.hpp"

namespace hyptree {

enum class ColumnKind { numeric, one_hot };

inline const char* to_string(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "one_hot";
}

/// Column-major feature matrix plus target. Immutable once built.
class Dataset {
 public:
  Dataset() = default;

  /// Takes ownership of `features` laid out column by column (n * j values).
  Dataset(std::vector<double> features, std::vector<double> target,
          std::vector<std::string> column_names, std::vector<ColumnKind> column_kinds)
      : features_(std::move(features)),
        target_(std::move(target)),
        names_(std::move(column_names)),
        kinds_(std::move(column_kinds)) {
    const std::size_t n = target_.size();
    const std::size_t j = names_.size();
    if (n == 0) throw Error("dataset has no rows");
    if (j == 0) throw Error("dataset has no feature columns");
    if (kinds_.size() != j) throw Error("column kinds do not match column names");
    if (features_.size() != n * j) throw Error("feature matrix size does not match n * j");
    for (double v : features_)
      if (!std::isfinite(v)) throw Error("dataset contains a non-finite feature value");
    for (double v : target_)
      if (!std::isfinite(v)) throw Error("dataset contains a non-finite target value");
  }

  /// Convenience constructor from separate numeric columns.
  static Dataset from_columns(const std::vector<std::vector<double>>& columns,
                              std::vector<double> target,
                              std::vector<std::string> names = {}) {
    std::vector<double> flat;
    for (const auto& col : columns) {
      if (col.size() != target.size()) throw Error("column length does not match target length");
      flat.insert(flat.end(), col.begin(), col.end());
    }
    if (names.empty())
      for (std::size_t c = 0; c < columns.size(); ++c) names.push_back("x" + std::to_string(c));
    std::vector<ColumnKind> kinds(columns.size(), ColumnKind::numeric);
    return Dataset(std::move(flat), std::move(target), std::move(names), std::move(kinds));
  }

  std::size_t rows() const { return target_.size(); }
  std::size_t cols() const { return names_.size(); }

  std::span<const double> column(std::size_t c) const {
    return {features_.data() + c * rows(), rows()};
  }
  double value(std::size_t row, std::size_t col) const { return features_[col * rows() + row]; }
  std::span<const double> target() const { return target_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<ColumnKind>& column_kinds() const { return kinds_; }

  /// Row-major copy of one row, for tree prediction.
  std::vector<double> row(std::size_t r) const {
    std::vector<double> out(cols());
    for (std::size_t c = 0; c < cols(); ++c) out[c] = value(r, c);
    return out;
  }

  /// New dataset holding the given rows, in the given order.
  Dataset subset(std::span<const std::size_t> row_ids) const {
    const std::size_t m = row_ids.size();
    std::vector<double> feats(m * cols());
    std::vector<double> tgt(m);
    for (std::size_t c = 0; c < cols(); ++c) {
      auto src = column(c);
      for (std::size_t i = 0; i < m; ++i) feats[c * m + i] = src[row_ids[i]];
    }
    for (std::size_t i = 0; i < m; ++i) tgt[i] = target_[row_ids[i]];
    return Dataset(std::move(feats), std::move(tgt), names_, kinds_);
  }

 private:
  std::vector<double> features_;
  std::vector<double> target_;
  std::vector<std::string> names_;
  std::vector<ColumnKind> kinds_;
};

// ---------------------------------------------------------------------------
// CSV

/// Header plus string cells. Every row has header.size() cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line endings, quoted fields may span lines.
inline CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  bool have_header = false;

  auto end_record = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    if (record.size() == 1 && record[0].empty()) {  // blank line
      record.clear();
      return;
    }
    if (!have_header) {
      table.header = std::move(record);
      have_header = true;
    } else {
      if (record.size() != table.header.size())
        throw ParseError("csv line " + std::to_string(line) + ": expected " +
                         std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(record.size()));
      table.rows.push_back(std::move(record));
    }
    record.clear();
  };

  char ch;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty())
          throw ParseError("csv line " + std::to_string(line) + ": stray quote inside field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (!have_header) throw ParseError("csv: missing header row");
  return table;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool is_missing_marker(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "N/A" || s == "na" || s == "NaN" || s == "nan" ||
         s == "null" || s == "NULL" || s == "?";
}

/// Parses a number, accepting a leading '+'. Returns nullopt for anything else.
inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

struct OneHotColumn {
  std::string name;  // "<source>=<level>"
  std::string level;
  std::vector<double> values;
};

/// One 0/1 column per distinct level, levels ordered by first appearance.
/// Empty strings form their own level.
inline std::vector<OneHotColumn> one_hot_encode(std::span<const std::string> values,
                                                const std::string& name) {
  std::vector<OneHotColumn> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto [it, inserted] = index.try_emplace(values[i], out.size());
    if (inserted)
      out.push_back({name + "=" + values[i], values[i], std::vector<double>(values.size(), 0.0)});
    out[it->second].values[i] = 1.0;
  }
  return out;
}

struct CsvOptions {
  std::size_t max_categories = 32;
  std::vector<std::string> drop_columns;
};

struct DroppedColumn {
  std::string name;
  std::string reason;
};

/// What ingestion did to the raw file.
struct IngestSummary {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<DroppedColumn> dropped_columns;
  std::map<std::string, std::vector<std::string>> one_hot_levels;
};

struct LoadedCsv {
  Dataset dataset;
  IngestSummary summary;
};

namespace detail {

struct RawColumn {
  std::string name;
  bool numeric = true;
  std::vector<std::string> cells;
  std::vector<double> numbers;  // NaN marks missing / non-finite
};

inline std::vector<RawColumn> classify_columns(const CsvTable& table) {
  std::vector<RawColumn> cols(table.header.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    RawColumn& col = cols[c];
    col.name = std::string(trim(table.header[c]));
    col.cells.reserve(table.rows.size());
    col.numbers.reserve(table.rows.size());
    bool any_number = false;
    for (const auto& row : table.rows) {
      const std::string& cell = row[c];
      col.cells.push_back(cell);
      if (is_missing_marker(cell)) {
        col.numbers.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      auto v = parse_number(cell);
      if (!v) {
        col.numeric = false;
        col.numbers.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      any_number = true;
      col.numbers.push_back(std::isfinite(*v) ? *v : std::numeric_limits<double>::quiet_NaN());
    }
    if (!any_number) col.numeric = false;
  }
  return cols;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open csv file: " + path);
  return parse_csv(in);
}

inline Dataset assemble(const std::vector<std::vector<double>>& columns,
                        const std::vector<std::string>& names,
                        const std::vector<ColumnKind>& kinds, const std::vector<double>& target,
                        const std::vector<char>& keep, IngestSummary& summary) {
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < keep.size(); ++r)
    if (keep[r]) kept_rows.push_back(r);
  summary.rows_dropped = keep.size() - kept_rows.size();
  if (kept_rows.empty()) throw Error("no usable rows remain after dropping rows with missing values");
  const std::size_t m = kept_rows.size();
  std::vector<double> flat(m * columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (std::size_t i = 0; i < m; ++i) flat[c * m + i] = columns[c][kept_rows[i]];
  std::vector<double> tgt(m);
  for (std::size_t i = 0; i < m; ++i) tgt[i] = target[kept_rows[i]];
  return Dataset(std::move(flat), std::move(tgt), names, kinds);
}

}  // namespace detail

/// Builds a Dataset from a parsed table. Numeric columns are used as-is;
/// other columns are one-hot encoded when they have at most
/// options.max_categories levels and dropped otherwise. Rows with a missing
/// or non-finite value in the target or any used numeric column are dropped.
inline LoadedCsv dataset_from_table(const CsvTable& table, const std::string& target_column,
                                    const CsvOptions& options = {}) {
  auto raw = detail::classify_columns(table);
  IngestSummary summary;
  summary.rows_read = table.rows.size();

  auto target_it = std::find_if(raw.begin(), raw.end(),
                                [&](const auto& c) { return c.name == target_column; });
  if (target_it == raw.end()) throw Error("target column not found: " + target_column);
  if (!target_it->numeric) throw Error("target column is not numeric: " + target_column);

  std::vector<char> keep(table.rows.size(), 1);
  for (std::size_t r = 0; r < keep.size(); ++r)
    if (std::isnan(target_it->numbers[r])) keep[r] = 0;

  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  for (const auto& col : raw) {
    if (col.name == target_column) continue;
    if (std::find(options.drop_columns.begin(), options.drop_columns.end(), col.name) !=
        options.drop_columns.end()) {
      summary.dropped_columns.push_back({col.name, "requested"});
      continue;
    }
    if (col.numeric) {
      for (std::size_t r = 0; r < keep.size(); ++r)
        if (std::isnan(col.numbers[r])) keep[r] = 0;
      columns.push_back(col.numbers);
      names.push_back(col.name);
      kinds.push_back(ColumnKind::numeric);
      continue;
    }
    auto encoded = one_hot_encode(col.cells, col.name);
    if (encoded.size() > options.max_categories) {
      summary.dropped_columns.push_back(
          {col.name, "non-numeric with " + std::to_string(encoded.size()) + " levels"});
      continue;
    }
    auto& levels = summary.one_hot_levels[col.name];
    for (auto& e : encoded) {
      levels.push_back(e.level);
      columns.push_back(std::move(e.values));
      names.push_back(std::move(e.name));
      kinds.push_back(ColumnKind::one_hot);
    }
  }
  if (columns.empty()) throw Error("no usable feature columns");
  Dataset ds = detail::assemble(columns, names, kinds, target_it->numbers, keep, summary);
  return {std::move(ds), std::move(summary)};
}

inline LoadedCsv load_csv(const std::string& path, const std::string& target_column,
                          const CsvOptions& options = {}) {
  return dataset_from_table(detail::read_csv_file(path), target_column, options);
}

/// Loads a CSV and lays out exactly the given feature columns, in order.
/// A name "<col>=<level>" not present as a raw column is rebuilt as the
/// indicator of <col> == level. With an empty target_column the target is
/// filled with zeros.
inline LoadedCsv dataset_from_table_with_schema(const CsvTable& table,
                                                const std::string& target_column,
                                                const std::vector<std::string>& feature_names) {
  auto raw = detail::classify_columns(table);
  IngestSummary summary;
  summary.rows_read = table.rows.size();
  auto find = [&](std::string_view name) -> const detail::RawColumn* {
    for (const auto& c : raw)
      if (c.name == name) return &c;
    return nullptr;
  };

  std::vector<char> keep(table.rows.size(), 1);
  std::vector<double> target(table.rows.size(), 0.0);
  if (!target_column.empty()) {
    const auto* t = find(target_column);
    if (!t) throw Error("target column not found: " + target_column);
    if (!t->numeric) throw Error("target column is not numeric: " + target_column);
    target = t->numbers;
    for (std::size_t r = 0; r < keep.size(); ++r)
      if (std::isnan(target[r])) keep[r] = 0;
  }

  std::vector<std::vector<double>> columns;
  std::vector<ColumnKind> kinds;
  for (const auto& name : feature_names) {
    if (const auto* col = find(name); col && col->numeric) {
      for (std::size_t r = 0; r < keep.size(); ++r)
        if (std::isnan(col->numbers[r])) keep[r] = 0;
      columns.push_back(col->numbers);
      kinds.push_back(ColumnKind::numeric);
      continue;
    }
    auto eq = name.find('=');
    const detail::RawColumn* src = eq == std::string::npos ? nullptr : find(name.substr(0, eq));
    if (!src) throw Error("feature column missing from data: " + name);
    const std::string level = name.substr(eq + 1);
    std::vector<double> indicator(table.rows.size());
    for (std::size_t r = 0; r < indicator.size(); ++r) indicator[r] = src->cells[r] == level;
    columns.push_back(std::move(indicator));
    kinds.push_back(ColumnKind::one_hot);
  }
  if (columns.empty()) throw Error("no feature columns requested");
  Dataset ds = detail::assemble(columns, feature_names, kinds, target, keep, summary);
  return {std::move(ds), std::move(summary)};
}

inline LoadedCsv load_csv_with_schema(const std::string& path, const std::string& target_column,
                                      const std::vector<std::string>& feature_names) {
  return dataset_from_table_with_schema(detail::read_csv_file(path), target_column,
                                        feature_names);
}

// ---------------------------------------------------------------------------
// Binning

using BinCode = std::uint16_t;
inline constexpr std::size_t kMaxBinsLimit = 65535;

/// Quantile-binned view of one feature column. Bin b holds values in
/// [edges[b-1], edges[b]) with open outer intervals.
struct BinnedColumn {
  std::vector<double> edges;
  std::vector<BinCode> codes;

  std::size_t num_bins() const { return edges.size() + 1; }
};

/// Bin index of `value` under `edges`: the number of edges <= value.
inline std::size_t bin_of(std::span<const double> edges, double value) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) -
                                  edges.begin());
}

namespace detail {

/// Cut point strictly above `lo` and not above `hi` (lo < hi).
inline double cut_between(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

}  // namespace detail

/// Equal-frequency cut points over the column. When the column has at most
/// max_bins distinct values every distinct value gets its own bin and the
/// cut points are the midpoints between neighbours.
inline std::vector<double> quantile_edges(std::span<const double> values, std::size_t max_bins) {
  if (values.empty()) throw std::invalid_argument("build_bins: empty column");
  if (max_bins < 2 || max_bins > kMaxBinsLimit)
    throw std::invalid_argument("build_bins: max_bins must be in [2, 65535]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> edges;
  if (distinct.size() <= max_bins) {
    for (std::size_t i = 1; i < distinct.size(); ++i)
      edges.push_back(detail::cut_between(distinct[i - 1], distinct[i]));
    return edges;
  }
  const std::size_t n = sorted.size();
  for (std::size_t b = 1; b < max_bins; ++b) {
    const std::size_t pos = b * n / max_bins;
    const double v = sorted[pos];
    auto below = std::lower_bound(distinct.begin(), distinct.end(), v);
    if (below == distinct.begin()) continue;
    const double cut = detail::cut_between(*(below - 1), v);
    if (edges.empty() || cut > edges.back()) edges.push_back(cut);
  }
  return edges;
}

inline BinnedColumn build_bins(std::span<const double> values, std::size_t max_bins) {
  BinnedColumn out;
  out.edges = quantile_edges(values, max_bins);
  out.codes.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.codes[i] = static_cast<BinCode>(bin_of(out.edges, values[i]));
  return out;
}

inline std::vector<BinnedColumn> bin_dataset(const Dataset& ds, std::size_t max_bins) {
  std::vector<BinnedColumn> out;
  out.reserve(ds.cols());
  for (std::size_t c = 0; c < ds.cols(); ++c) out.push_back(build_bins(ds.column(c), max_bins));
  return out;
}

// ---------------------------------------------------------------------------
// Folds

struct FoldPlan {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> folds;  // each sorted ascending

  /// Rows not in fold f, ascending.
  std::vector<std::size_t> complement(std::size_t f) const {
    std::vector<char> in_fold(n, 0);
    for (std::size_t r : folds.at(f)) in_fold[r] = 1;
    std::vector<std::size_t> out;
    out.reserve(n - folds[f].size());
    for (std::size_t r = 0; r < n; ++r)
      if (!in_fold[r]) out.push_back(r);
    return out;
  }
};

/// Shuffled k-way partition of 0..n-1; fold sizes differ by at most one.
inline FoldPlan kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_indices: k must be at least 2");
  if (k > n) throw std::invalid_argument("kfold_indices: k exceeds the number of rows");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, {0x666f6c64});
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPlan plan{n, std::vector<std::vector<std::size_t>>(k)};
  for (std::size_t p = 0; p < n; ++p) plan.folds[p % k].push_back(perm[p]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

}  // namespace hyptree

#endif  // HYPTREE_DATA_HPP_
