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

// Discretization of features into bin indices. Index 0 is always the
// missing bin; observed values map to 1..n_bins.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnamite/common.hpp"

namespace dnamite {

enum class FeatureKind { kContinuous, kCategorical };

inline constexpr int kMissingBin = 0;
inline constexpr int kDefaultMaxBins = 32;

struct BinSpec {
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<double> cut_points;   // continuous only, strictly increasing
  std::vector<std::string> levels;  // categorical only, unique
  int n_bins = 1;                   // excludes the missing bin

  bool operator==(const BinSpec&) const = default;

  // Throws InvalidArgument naming the broken invariant.
  void Validate() const {
    Require(n_bins >= 1, "bin spec: n_bins must be >= 1");
    if (kind == FeatureKind::kContinuous) {
      Require(static_cast<int>(cut_points.size()) == n_bins - 1,
              "bin spec: cut point count must equal n_bins - 1");
      for (std::size_t i = 0; i < cut_points.size(); ++i) {
        Require(std::isfinite(cut_points[i]), "bin spec: cut points must be finite");
        if (i > 0) {
          Require(cut_points[i - 1] < cut_points[i],
                  "bin spec: cut points must be strictly increasing");
        }
      }
    } else {
      Require(static_cast<int>(levels.size()) == n_bins,
              "bin spec: level count must equal n_bins");
      std::vector<std::string> sorted = levels;
      std::sort(sorted.begin(), sorted.end());
      Require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
              "bin spec: categorical levels must be unique");
    }
  }
};

// Quantile cut points at i/max_bins over the non-missing values, with
// duplicate cuts collapsed.
inline BinSpec FitBins(std::span<const std::optional<double>> values,
                       int max_bins = kDefaultMaxBins) {
  if (max_bins < 2) throw InvalidArgument("fit_bins: max_bins must be >= 2");
  std::vector<double> observed;
  observed.reserve(values.size());
  for (const auto& v : values) {
    if (v.has_value() && !std::isnan(*v)) observed.push_back(*v);
  }
  if (observed.empty()) throw DataError("fit_bins: all values are missing");
  std::sort(observed.begin(), observed.end());

  BinSpec spec;
  spec.kind = FeatureKind::kContinuous;
  // A cut is kept only if the bin it closes holds at least one value, so
  // ties and tiny samples never produce empty bins.
  auto values_up_to = [&](double x) {
    return std::upper_bound(observed.begin(), observed.end(), x) -
           observed.begin();
  };
  std::ptrdiff_t consumed = 0;
  for (int i = 1; i < max_bins; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(max_bins);
    const double cut = QuantileSorted(observed, q);
    if (cut >= observed.back()) break;
    const std::ptrdiff_t upto = values_up_to(cut);
    if (upto > consumed) {
      spec.cut_points.push_back(cut);
      consumed = upto;
    }
  }
  spec.n_bins = static_cast<int>(spec.cut_points.size()) + 1;
  return spec;
}

// One bin per distinct level, ordered by first appearance.
inline BinSpec FitLevels(std::span<const std::optional<std::string>> values) {
  BinSpec spec;
  spec.kind = FeatureKind::kCategorical;
  for (const auto& v : values) {
    if (!v.has_value()) continue;
    if (std::find(spec.levels.begin(), spec.levels.end(), *v) ==
        spec.levels.end()) {
      spec.levels.push_back(*v);
    }
  }
  if (spec.levels.empty()) throw DataError("fit_levels: all values are missing");
  spec.n_bins = static_cast<int>(spec.levels.size());
  return spec;
}

// A value equal to a cut point falls in the lower bin.
inline int ApplyBins(std::optional<double> value, const BinSpec& spec) {
  Require(spec.kind == FeatureKind::kContinuous,
          "apply_bins: numeric value given for a categorical feature");
  if (!value.has_value() || std::isnan(*value)) return kMissingBin;
  const auto it =
      std::lower_bound(spec.cut_points.begin(), spec.cut_points.end(), *value);
  return 1 + static_cast<int>(it - spec.cut_points.begin());
}

// Unseen levels map to the missing bin.
inline int ApplyBins(std::optional<std::string_view> value, const BinSpec& spec) {
  Require(spec.kind == FeatureKind::kCategorical,
          "apply_bins: string value given for a continuous feature");
  if (!value.has_value()) return kMissingBin;
  const auto it = std::find(spec.levels.begin(), spec.levels.end(), *value);
  if (it == spec.levels.end()) return kMissingBin;
  return 1 + static_cast<int>(it - spec.levels.begin());
}

}  // namespace dnamite
