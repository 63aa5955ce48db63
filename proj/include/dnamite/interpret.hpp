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

// Shape-function export, feature importances and across-member confidence
// intervals.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "dnamite/common.hpp"
#include "dnamite/model.hpp"

namespace dnamite {

// Averaged members sharing bins and evaluation times.
struct EnsembleModel {
  std::vector<DnamiteModel> members;

  const DnamiteModel& front() const { return members.front(); }
  std::size_t size() const { return members.size(); }
  bool operator==(const EnsembleModel&) const = default;

  void Validate() const {
    Require(!members.empty(), "ensemble: needs at least one member");
    for (const auto& m : members) {
      m.Validate();
      Require(m.bins == members.front().bins,
              "ensemble: members must share bin specs");
      Require(m.eval_times == members.front().eval_times,
              "ensemble: members must share evaluation times");
      Require(m.feature_names == members.front().feature_names,
              "ensemble: members must share feature names");
    }
  }
};

// Arithmetic mean of member CIFs.
inline Matrix PredictCif(const EnsembleModel& ensemble, const SurvivalDataset& ds) {
  Require(!ensemble.members.empty(), "ensemble: needs at least one member");
  const auto enc = Encode(ensemble.front(), ds);
  Matrix mean;
  for (const auto& member : ensemble.members) {
    const Matrix cif = member.hp.nam_mode ? PredictCif(member, Encode(member, ds))
                                          : PredictCif(member, enc);
    if (mean.data.empty()) {
      mean = cif;
    } else {
      for (std::size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += cif.data[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(ensemble.size());
  for (double& v : mean.data) v *= inv;
  return mean;
}

// Two-sided 95% half-width multiplier for the mean of `count` draws.
inline double TQuantile95(std::size_t count) {
  if (count < 2) return 0.0;
  boost::math::students_t dist(static_cast<double>(count - 1));
  return boost::math::quantile(dist, 0.975);
}

// Piecewise-constant export of one shape function at one time index.
//
// For a main effect, bin b (1..n_bins) covers (lower[b], upper[b]]; the
// missing bin is reported separately. Categorical features report level
// labels instead of edges. Pairs report the product grid in row-major
// order over (bin of first, bin of second), missing bins included.
struct ShapeCurve {
  TermRef term;
  std::size_t time_index = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> labels;
  std::vector<int> bin_first;
  std::vector<int> bin_second;
  std::vector<double> values;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  double missing_value = 0.0;
  double missing_ci_lower = 0.0;
  double missing_ci_upper = 0.0;
};

namespace internal {

// Centered value of every main bin (rows 0..n_bins) for one member.
inline Matrix MainBinValues(const DnamiteModel& model, std::size_t j) {
  const auto& spec = model.bins[j];
  const std::size_t rows_n = static_cast<std::size_t>(spec.n_bins) + 1;
  EncodedRows enc;
  enc.n = rows_n;
  enc.bins.resize(model.p());
  enc.raw.resize(model.p());
  for (std::size_t b = 0; b < rows_n; ++b) enc.bins[j].push_back(static_cast<int>(b));
  if (model.mains[j].raw_input) {
    // Raw-input terms are read at the midpoint of each bin's value range.
    const auto& term = model.mains[j];
    enc.raw[j].push_back(0.0);
    for (int b = 1; b <= spec.n_bins; ++b) {
      const double lo = b == 1 ? term.raw_lo : spec.cut_points[static_cast<std::size_t>(b - 2)];
      const double hi = b == spec.n_bins ? term.raw_hi
                                         : spec.cut_points[static_cast<std::size_t>(b - 1)];
      enc.raw[j].push_back(ScaleRaw(term, 0.5 * (lo + hi)));
    }
  }
  return TermContributions(model, {TermRef::Kind::kMain, j}, enc);
}

inline Matrix PairGridValues(const DnamiteModel& model, std::size_t q) {
  const auto& pr = model.pairs[q];
  const int na = model.bins[static_cast<std::size_t>(pr.first)].n_bins;
  const int nb = model.bins[static_cast<std::size_t>(pr.second)].n_bins;
  EncodedRows enc;
  enc.bins.resize(model.p());
  enc.raw.resize(model.p());
  for (int a = 0; a <= na; ++a) {
    for (int b = 0; b <= nb; ++b) {
      enc.bins[static_cast<std::size_t>(pr.first)].push_back(a);
      enc.bins[static_cast<std::size_t>(pr.second)].push_back(b);
    }
  }
  enc.n = enc.bins[static_cast<std::size_t>(pr.first)].size();
  return TermContributions(model, {TermRef::Kind::kPair, q}, enc);
}

// Per-entry mean and CI half-width across members.
inline void MeanAndHalfWidth(const std::vector<std::vector<double>>& draws,
                             std::vector<double>& mean, std::vector<double>& half) {
  const std::size_t B = draws.size();
  const std::size_t n = draws.front().size();
  mean.assign(n, 0.0);
  half.assign(n, 0.0);
  for (const auto& d : draws) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += d[i];
  }
  for (double& v : mean) v /= static_cast<double>(B);
  if (B < 2) return;
  const double t = TQuantile95(B);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (const auto& d : draws) ss += (d[i] - mean[i]) * (d[i] - mean[i]);
    const double sd = std::sqrt(ss / static_cast<double>(B - 1));
    half[i] = t * sd / std::sqrt(static_cast<double>(B));
  }
}

inline void CheckTimeIndex(const DnamiteModel& model, std::size_t k) {
  if (k >= model.K()) {
    throw InvalidArgument("time index " + std::to_string(k) + " out of range [0, " +
                          std::to_string(model.K()) + ")");
  }
}

}  // namespace internal

// Shape function of main effect `feature` at time index `k`, averaged over
// members with 95% t-intervals for the mean.
inline ShapeCurve ShapeFunction(const EnsembleModel& ensemble, std::size_t feature,
                                std::size_t k) {
  ensemble.Validate();
  const auto& first = ensemble.front();
  if (feature >= first.p()) {
    throw InvalidArgument("shape_function: feature index " + std::to_string(feature) +
                          " out of range");
  }
  internal::CheckTimeIndex(first, k);
  const auto& spec = first.bins[feature];
  std::vector<std::vector<double>> draws;
  for (const auto& member : ensemble.members) {
    const Matrix values = internal::MainBinValues(member, feature);
    std::vector<double> column(values.rows);
    for (std::size_t b = 0; b < values.rows; ++b) column[b] = values(b, k);
    draws.push_back(std::move(column));
  }
  std::vector<double> mean, half;
  internal::MeanAndHalfWidth(draws, mean, half);

  ShapeCurve curve;
  curve.term = {TermRef::Kind::kMain, feature};
  curve.time_index = k;
  curve.missing_value = mean[0];
  curve.missing_ci_lower = mean[0] - half[0];
  curve.missing_ci_upper = mean[0] + half[0];
  const double inf = std::numeric_limits<double>::infinity();
  for (int b = 1; b <= spec.n_bins; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    curve.bin_first.push_back(b);
    if (spec.kind == FeatureKind::kContinuous) {
      curve.lower.push_back(b == 1 ? -inf : spec.cut_points[bi - 2]);
      curve.upper.push_back(b == spec.n_bins ? inf : spec.cut_points[bi - 1]);
    } else {
      curve.labels.push_back(spec.levels[bi - 1]);
    }
    curve.values.push_back(mean[bi]);
    curve.ci_lower.push_back(mean[bi] - half[bi]);
    curve.ci_upper.push_back(mean[bi] + half[bi]);
  }
  return curve;
}

inline ShapeCurve ShapeFunction(const DnamiteModel& model, std::size_t feature,
                                std::size_t k) {
  return ShapeFunction(EnsembleModel{{model}}, feature, k);
}

// Pair surface on the product bin grid; every member must hold the pair.
inline ShapeCurve PairShapeFunction(const EnsembleModel& ensemble, int first,
                                    int second, std::size_t k) {
  ensemble.Validate();
  internal::CheckTimeIndex(ensemble.front(), k);
  std::vector<std::vector<double>> draws;
  for (const auto& member : ensemble.members) {
    std::size_t q = member.pairs.size();
    for (std::size_t i = 0; i < member.pairs.size(); ++i) {
      if (member.pairs[i].first == first && member.pairs[i].second == second) q = i;
    }
    if (q == member.pairs.size()) {
      throw InvalidArgument("pair_shape_function: model has no pair " +
                            std::to_string(first) + ":" + std::to_string(second));
    }
    const Matrix values = internal::PairGridValues(member, q);
    std::vector<double> column(values.rows);
    for (std::size_t r = 0; r < values.rows; ++r) column[r] = values(r, k);
    draws.push_back(std::move(column));
  }
  std::vector<double> mean, half;
  internal::MeanAndHalfWidth(draws, mean, half);
  ShapeCurve curve;
  curve.term = {TermRef::Kind::kPair, 0};
  curve.time_index = k;
  const auto& m = ensemble.front();
  const int nb = m.bins[static_cast<std::size_t>(second)].n_bins;
  std::size_t r = 0;
  for (int a = 0; a <= m.bins[static_cast<std::size_t>(first)].n_bins; ++a) {
    for (int b = 0; b <= nb; ++b, ++r) {
      curve.bin_first.push_back(a);
      curve.bin_second.push_back(b);
      curve.values.push_back(mean[r]);
      curve.ci_lower.push_back(mean[r] - half[r]);
      curve.ci_upper.push_back(mean[r] + half[r]);
    }
  }
  return curve;
}

// importance[term][k] = mean over rows of |centered contribution at t_k|.
struct FeatureImportance {
  Matrix mains;  // p x K
  Matrix pairs;  // |pairs| x K
  std::vector<std::pair<int, int>> pair_features;  // row labels of `pairs`

  double MainMean(std::size_t j) const {
    double s = 0.0;
    for (std::size_t k = 0; k < mains.cols; ++k) s += mains(j, k);
    return s / static_cast<double>(mains.cols);
  }
  double PairMean(std::size_t q) const {
    double s = 0.0;
    for (std::size_t k = 0; k < pairs.cols; ++k) s += pairs(q, k);
    return s / static_cast<double>(pairs.cols);
  }
};

inline FeatureImportance ComputeImportance(const DnamiteModel& model,
                                           const EncodedRows& enc) {
  Require(enc.n > 0, "feature_importance: no rows");
  FeatureImportance imp;
  imp.mains = Matrix(model.p(), model.K());
  imp.pairs = Matrix(model.pairs.size(), model.K());
  for (const auto& pr : model.pairs) imp.pair_features.emplace_back(pr.first, pr.second);
  const double inv = 1.0 / static_cast<double>(enc.n);
  for (const auto ref : internal::AllTerms(model)) {
    const Matrix c = TermContributions(model, ref, enc);
    Matrix& target = ref.kind == TermRef::Kind::kMain ? imp.mains : imp.pairs;
    for (std::size_t r = 0; r < c.rows; ++r) {
      for (std::size_t k = 0; k < model.K(); ++k) {
        target(ref.index, k) += std::abs(c(r, k));
      }
    }
    for (std::size_t k = 0; k < model.K(); ++k) target(ref.index, k) *= inv;
  }
  return imp;
}

inline FeatureImportance ComputeImportance(const DnamiteModel& model,
                                           const SurvivalDataset& ds) {
  return ComputeImportance(model, Encode(model, ds));
}

// Member-averaged importances. Pairs are matched by feature indices; a
// member without a pair contributes zero for it.
inline FeatureImportance ComputeImportance(const EnsembleModel& ensemble,
                                           const SurvivalDataset& ds) {
  Require(!ensemble.members.empty(), "feature_importance: empty ensemble");
  std::vector<FeatureImportance> parts;
  std::vector<std::pair<int, int>> keys;
  for (const auto& member : ensemble.members) {
    parts.push_back(ComputeImportance(member, ds));
    keys.insert(keys.end(), parts.back().pair_features.begin(),
                parts.back().pair_features.end());
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const std::size_t K = ensemble.front().K();
  FeatureImportance total;
  total.mains = Matrix(ensemble.front().p(), K);
  total.pairs = Matrix(keys.size(), K);
  total.pair_features = keys;
  const double inv = 1.0 / static_cast<double>(ensemble.size());
  for (const auto& imp : parts) {
    for (std::size_t i = 0; i < total.mains.data.size(); ++i) {
      total.mains.data[i] += imp.mains.data[i] * inv;
    }
    for (std::size_t q = 0; q < imp.pair_features.size(); ++q) {
      const auto row = static_cast<std::size_t>(
          std::lower_bound(keys.begin(), keys.end(), imp.pair_features[q]) - keys.begin());
      for (std::size_t k = 0; k < K; ++k) total.pairs(row, k) += imp.pairs(q, k) * inv;
    }
  }
  return total;
}

}  // namespace dnamite
