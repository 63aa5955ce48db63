// Copyright 2026 The DNAMite Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dnamite/binning.hpp"
#include "dnamite/common.hpp"

namespace dnamite {

// One feature column. Exactly one of `numeric` / `text` is populated,
// according to `kind`; missing cells are nullopt.
struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<std::optional<double>> numeric;
  std::vector<std::optional<std::string>> text;

  std::size_t size() const {
    return kind == FeatureKind::kContinuous ? numeric.size() : text.size();
  }
  bool is_missing(std::size_t i) const {
    return kind == FeatureKind::kContinuous ? !numeric[i].has_value()
                                            : !text[i].has_value();
  }
};

// The (X, Z, delta) triplet: features, observed times and event flags.
struct SurvivalDataset {
  std::vector<FeatureColumn> features;
  std::vector<double> time;
  std::vector<std::uint8_t> event;  // 1 = event observed, 0 = censored

  std::size_t n() const { return time.size(); }
  std::size_t p() const { return features.size(); }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (const auto& f : features) names.push_back(f.name);
    return names;
  }

  int feature_index(const std::string& name) const {
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].name == name) return static_cast<int>(j);
    }
    return -1;
  }

  void Validate() const {
    if (event.size() != time.size()) {
      throw DataError("dataset: time and event columns differ in length");
    }
    for (const auto& f : features) {
      if (f.size() != time.size()) {
        throw DataError("dataset: feature '" + f.name + "' has wrong length");
      }
    }
    for (double t : time) {
      if (!std::isfinite(t) || t < 0) {
        throw DataError("dataset: observed times must be finite and >= 0");
      }
    }
    if (std::none_of(event.begin(), event.end(), [](auto e) { return e != 0; })) {
      throw DataError("dataset: at least one event is required");
    }
  }

  SurvivalDataset Subset(std::span<const std::size_t> rows) const {
    SurvivalDataset out;
    for (const auto& f : features) {
      FeatureColumn c;
      c.name = f.name;
      c.kind = f.kind;
      for (auto i : rows) {
        if (f.kind == FeatureKind::kContinuous) {
          c.numeric.push_back(f.numeric[i]);
        } else {
          c.text.push_back(f.text[i]);
        }
      }
      out.features.push_back(std::move(c));
    }
    for (auto i : rows) {
      out.time.push_back(time[i]);
      out.event.push_back(event[i]);
    }
    return out;
  }
};

// Column roles for CSV ingestion. Columns not named here (other than the
// time and event columns) are features; their kind is inferred unless they
// appear in `categorical`.
struct CsvSchema {
  std::string time_col = "time";
  std::string event_col = "event";
  std::vector<std::string> categorical;
};

namespace internal {

// Splits one CSV record, honouring double-quoted fields.
inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

inline bool IsMissingCell(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

inline std::string QuoteIfNeeded(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace internal

// Raw CSV contents: trimmed header names and trimmed cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv: no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable ReadCsvTable(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header row");
  for (auto& h : internal::SplitCsvLine(line)) table.header.emplace_back(Trim(h));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = internal::SplitCsvLine(line);
    if (fields.size() != table.header.size()) {
      throw DataError("csv: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    for (auto& f : fields) f = std::string(Trim(f));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

namespace internal {

// Reads the time and event columns into `ds`.
inline void ReadOutcomes(const CsvTable& table, const std::string& time_name,
                         const std::string& event_name, SurvivalDataset& ds) {
  const std::size_t time_col = table.column(time_name);
  const std::size_t event_col = table.column(event_name);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    const std::string where = "csv: line " + std::to_string(table.line_numbers[r]);
    const auto t = ParseDouble(fields[time_col]);
    if (!t.has_value() || !std::isfinite(*t) || *t < 0) {
      throw DataError(where + ": time must be a nonnegative number, got '" +
                      fields[time_col] + "'");
    }
    const std::string_view e = fields[event_col];
    std::uint8_t event = 0;
    if (e == "1" || e == "true" || e == "True" || e == "TRUE") {
      event = 1;
    } else if (e == "0" || e == "false" || e == "False" || e == "FALSE") {
      event = 0;
    } else {
      throw DataError(where + ": event must be one of {0,1,true,false}, got '" +
                      std::string(e) + "'");
    }
    ds.time.push_back(*t);
    ds.event.push_back(event);
  }
}

// Builds one feature column. With no `kind`, the column is continuous when
// every non-missing cell parses as a finite number.
inline FeatureColumn ReadFeature(const CsvTable& table, std::size_t c,
                                 std::optional<FeatureKind> kind) {
  FeatureColumn col;
  col.name = table.header[c];
  bool numeric = kind.value_or(FeatureKind::kContinuous) == FeatureKind::kContinuous;
  std::vector<std::optional<double>> parsed;
  if (numeric) {
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& cell = table.rows[r][c];
      if (IsMissingCell(cell)) {
        parsed.push_back(std::nullopt);
        continue;
      }
      const auto v = ParseDouble(cell);
      if (!v.has_value() || !std::isfinite(*v)) {
        if (kind.has_value()) {
          throw DataError("csv: line " + std::to_string(table.line_numbers[r]) +
                          ": feature '" + col.name + "' expects a number, got '" +
                          cell + "'");
        }
        numeric = false;
        break;
      }
      parsed.push_back(*v);
    }
  }
  if (numeric) {
    col.kind = FeatureKind::kContinuous;
    col.numeric = std::move(parsed);
    return col;
  }
  col.kind = FeatureKind::kCategorical;
  for (const auto& row : table.rows) {
    const auto& cell = row[c];
    if (IsMissingCell(cell)) {
      col.text.push_back(std::nullopt);
    } else {
      col.text.push_back(cell);
    }
  }
  return col;
}

}  // namespace internal

inline SurvivalDataset ParseCsv(std::istream& in, const CsvSchema& schema) {
  const CsvTable table = ReadCsvTable(in);
  const std::size_t time_col = table.column(schema.time_col);
  const std::size_t event_col = table.column(schema.event_col);
  for (const auto& c : schema.categorical) table.column(c);

  SurvivalDataset ds;
  internal::ReadOutcomes(table, schema.time_col, schema.event_col, ds);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == time_col || c == event_col) continue;
    const bool categorical =
        std::find(schema.categorical.begin(), schema.categorical.end(),
                  table.header[c]) != schema.categorical.end();
    ds.features.push_back(internal::ReadFeature(
        table, c,
        categorical ? std::optional<FeatureKind>(FeatureKind::kCategorical)
                    : std::nullopt));
  }
  if (ds.features.empty()) throw DataError("csv: no feature columns");
  ds.Validate();
  return ds;
}

inline SurvivalDataset LoadCsv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  return ParseCsv(in, schema);
}

// Reads the named feature columns with fixed kinds (e.g. those a trained
// model expects). Outcome columns are read when both names are given;
// otherwise times and events are zero-filled and the result is only fit for
// prediction.
inline SurvivalDataset LoadFeatureCsv(const std::string& path,
                                      const std::vector<std::string>& names,
                                      const std::vector<FeatureKind>& kinds,
                                      const std::string& time_col = "",
                                      const std::string& event_col = "") {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  const CsvTable table = ReadCsvTable(in);
  SurvivalDataset ds;
  for (std::size_t j = 0; j < names.size(); ++j) {
    ds.features.push_back(internal::ReadFeature(table, table.column(names[j]), kinds[j]));
  }
  if (!time_col.empty() && !event_col.empty()) {
    internal::ReadOutcomes(table, time_col, event_col, ds);
  } else {
    ds.time.assign(table.rows.size(), 0.0);
    ds.event.assign(table.rows.size(), 0);
  }
  return ds;
}

// Features first, then the time and event columns.
inline void WriteCsv(const SurvivalDataset& ds, std::ostream& out,
                     const std::string& time_col = "time",
                     const std::string& event_col = "event") {
  for (const auto& f : ds.features) out << internal::QuoteIfNeeded(f.name) << ',';
  out << time_col << ',' << event_col << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (const auto& f : ds.features) {
      if (f.kind == FeatureKind::kContinuous) {
        if (f.numeric[i].has_value()) out << FormatDouble(*f.numeric[i]);
      } else if (f.text[i].has_value()) {
        out << internal::QuoteIfNeeded(*f.text[i]);
      }
      out << ',';
    }
    out << FormatDouble(ds.time[i]) << ',' << static_cast<int>(ds.event[i])
        << '\n';
  }
}

inline void SaveCsv(const SurvivalDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  WriteCsv(ds, out);
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

inline constexpr double kDefaultValFraction = 0.2;

// Seeded random partition; floor(n * val_fraction) rows go to validation.
// Both index lists are returned in ascending order.
inline SplitIndices Split(const SurvivalDataset& ds, double val_fraction,
                          std::uint64_t seed) {
  Require(val_fraction > 0 && val_fraction < 1,
          "split: val_fraction must lie in (0, 1)");
  const std::size_t n = ds.n();
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * val_fraction));
  Require(n_val >= 1, "split: validation partition would be empty");
  Require(n_val < n, "split: training partition would be empty");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  SplitIndices out;
  out.validation.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.train.begin(), out.train.end());
  if (std::none_of(out.train.begin(), out.train.end(),
                   [&](std::size_t i) { return ds.event[i] != 0; })) {
    throw DataError("split: training partition contains no events");
  }
  return out;
}

}  // namespace dnamite
