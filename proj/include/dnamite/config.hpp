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

// Flat `key = value` training configuration files. Blank lines and lines
// starting with '#' are ignored. Every key is written on save, so a saved
// file documents the full configuration.

#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dnamite/common.hpp"
#include "dnamite/train.hpp"

namespace dnamite {

// "j:l,j:l" with 0-based feature indices.
inline std::vector<std::pair<int, int>> ParsePairList(std::string_view text) {
  std::vector<std::pair<int, int>> pairs;
  text = Trim(text);
  if (text.empty()) return pairs;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string_view item = Trim(text.substr(start, end - start));
    const std::size_t colon = item.find(':');
    int a = 0;
    int b = 0;
    bool ok = colon != std::string_view::npos;
    if (ok) {
      const auto first = Trim(item.substr(0, colon));
      const auto second = Trim(item.substr(colon + 1));
      ok = std::from_chars(first.data(), first.data() + first.size(), a).ptr ==
               first.data() + first.size() &&
           std::from_chars(second.data(), second.data() + second.size(), b).ptr ==
               second.data() + second.size() &&
           !first.empty() && !second.empty();
    }
    if (!ok) throw InvalidArgument("pair list: bad entry '" + std::string(item) + "'");
    pairs.emplace_back(a, b);
    start = end + 1;
  }
  return pairs;
}

inline std::string FormatPairList(const std::vector<std::pair<int, int>>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    if (!out.empty()) out += ',';
    out += std::to_string(a) + ':' + std::to_string(b);
  }
  return out;
}

inline std::vector<int> ParseIntList(std::string_view text, const std::string& key) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const auto item = Trim(text.substr(start, end - start));
    int v = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ptr != item.data() + item.size()) {
      throw InvalidArgument("config: bad integer list for '" + key + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

inline std::string WriteConfig(const TrainConfig& c) {
  std::ostringstream out;
  std::string hidden;
  for (int h : c.model.hidden) {
    if (!hidden.empty()) hidden += ',';
    hidden += std::to_string(h);
  }
  out << "batch_size = " << c.batch_size << '\n'
      << "censor_floor = " << FormatDouble(c.model.censor_floor) << '\n'
      << "embedding_dim = " << c.model.embedding_dim << '\n'
      << "ensemble_size = " << c.ensemble_size << '\n'
      << "gamma = " << FormatDouble(c.model.gamma) << '\n'
      << "hidden = " << hidden << '\n'
      << "kernel_width = " << c.model.kernel_width << '\n'
      << "learning_rate = " << FormatDouble(c.learning_rate) << '\n'
      << "max_bins = " << c.model.max_bins << '\n'
      << "max_epochs = " << c.max_epochs << '\n'
      << "n_pairs = " << c.n_pairs << '\n'
      << "n_times = " << c.model.n_times << '\n'
      << "nam_mode = " << (c.model.nam_mode ? "true" : "false") << '\n'
      << "pair_list = " << FormatPairList(c.pair_list) << '\n'
      << "patience = " << c.patience << '\n'
      << "seed = " << c.seed << '\n'
      << "threads = " << c.threads << '\n'
      << "val_fraction = " << FormatDouble(c.val_fraction) << '\n';
  return out.str();
}

namespace internal {

template <typename T>
T ParseInteger(std::string_view value, const std::string& key) {
  T out{};
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || r.ec != std::errc() || r.ptr != value.data() + value.size()) {
    throw InvalidArgument("config: '" + key + "' expects an integer, got '" +
                          std::string(value) + "'");
  }
  return out;
}

inline double ParseReal(std::string_view value, const std::string& key) {
  const auto v = ParseDouble(value);
  if (!v) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" +
                          std::string(value) + "'");
  }
  return *v;
}

inline bool ParseBool(std::string_view value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true or false");
}

}  // namespace internal

// Applies one key; unknown keys are errors.
inline void SetConfigValue(TrainConfig& c, const std::string& key, std::string_view value) {
  using internal::ParseInteger;
  using internal::ParseReal;
  if (key == "batch_size") {
    c.batch_size = ParseInteger<int>(value, key);
  } else if (key == "censor_floor") {
    c.model.censor_floor = ParseReal(value, key);
  } else if (key == "embedding_dim") {
    c.model.embedding_dim = ParseInteger<int>(value, key);
  } else if (key == "ensemble_size") {
    c.ensemble_size = ParseInteger<int>(value, key);
  } else if (key == "gamma") {
    c.model.gamma = ParseReal(value, key);
  } else if (key == "hidden") {
    c.model.hidden = ParseIntList(value, key);
  } else if (key == "kernel_width") {
    c.model.kernel_width = ParseInteger<int>(value, key);
  } else if (key == "learning_rate") {
    c.learning_rate = ParseReal(value, key);
  } else if (key == "max_bins") {
    c.model.max_bins = ParseInteger<int>(value, key);
  } else if (key == "max_epochs") {
    c.max_epochs = ParseInteger<int>(value, key);
  } else if (key == "n_pairs") {
    c.n_pairs = ParseInteger<int>(value, key);
  } else if (key == "n_times") {
    c.model.n_times = ParseInteger<int>(value, key);
  } else if (key == "nam_mode") {
    c.model.nam_mode = internal::ParseBool(value, key);
  } else if (key == "pair_list") {
    c.pair_list = ParsePairList(value);
  } else if (key == "patience") {
    c.patience = ParseInteger<int>(value, key);
  } else if (key == "seed") {
    c.seed = ParseInteger<std::uint64_t>(value, key);
  } else if (key == "threads") {
    c.threads = ParseInteger<int>(value, key);
  } else if (key == "val_fraction") {
    c.val_fraction = ParseReal(value, key);
  } else {
    throw InvalidArgument("config: unknown key '" + key + "'");
  }
}

inline TrainConfig ParseConfig(std::istream& in) {
  TrainConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = Trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config: line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    SetConfigValue(c, std::string(Trim(text.substr(0, eq))), Trim(text.substr(eq + 1)));
  }
  c.Validate();
  return c;
}

inline TrainConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  return ParseConfig(in);
}

inline void SaveConfig(const TrainConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("config: cannot write '" + path + "'");
  out << WriteConfig(c);
}

}  // namespace dnamite
