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

// Synthetic survival data with known shape functions.
//
// Features are iid Uniform(0, 1). The risk is the sum of four normalized
// feature functions, a centered 2x2 step interaction between features 1
// and 2, and Gaussian noise. With p = sigmoid(risk), the event happens
// before the horizon t with probability p: T ~ Uniform(0, t) if it does and
// T ~ Uniform(t, t_max) otherwise. A fifth feature carries no signal.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dnamite/common.hpp"
#include "dnamite/dataset.hpp"

namespace dnamite {

inline constexpr int kSignalFeatures = 4;
inline constexpr std::size_t kNormalizationGrid = 4096;

struct SyntheticSpec {
  std::size_t n = 10000;
  double threshold_first = 0.5;   // split point on feature 1
  double threshold_second = 0.5;  // split point on feature 2
  // Region weights w00, w01, w10, w11; first digit: feature 1 >= threshold.
  std::array<double, 4> weights = {0.0, 0.0, 0.0, 4.0};
  bool interaction = true;
  bool noise_feature = true;
  double noise_sd = 0.1;
  double horizon = 1.0;
  double t_max = 2.0;
  double censor_rate = 0.0;
  // Multiplies every feature function and the interaction; 0 yields risk
  // made of noise only.
  double signal_scale = 1.0;
  std::uint64_t seed = 0;

  void Validate() const {
    Require(n >= 1, "synthetic: n must be >= 1");
    Require(horizon > 0 && horizon < t_max, "synthetic: need 0 < horizon < t_max");
    Require(noise_sd >= 0, "synthetic: noise_sd must be >= 0");
    Require(censor_rate >= 0 && censor_rate < 1,
            "synthetic: censor_rate must lie in [0, 1)");
    Require(threshold_first > 0 && threshold_first < 1 && threshold_second > 0 &&
                threshold_second < 1,
            "synthetic: thresholds must lie in (0, 1)");
  }
};

// Feature functions before normalization; index is 1-based.
inline double RawFeatureFn(int index, double x) {
  constexpr double pi = std::numbers::pi;
  switch (index) {
    case 1:
      return std::sin(3.0 * pi * x);
    case 2:
      return (std::cos(5.2 * pi * x) + 0.5 * x) * (x - 0.5) * (x - 0.5);
    case 3:
      if (x < 0.1) return -1.5 * x + 1.0;
      if (x < 0.275) return 2.0 * x;
      if (x < 0.6) return std::sin(3.0 * pi * x);
      if (x < 0.75) return 2.0 * x * x - 1.0;
      return std::cos(2.3 * pi * x) + 0.5 * x;
    case 4:
      if (x < 0.6) return x;
      return -std::pow(x, 5) + x + std::pow(0.6, 5);
    default:
      throw InvalidArgument("feature function index must be in 1..4, got " +
                            std::to_string(index));
  }
}

struct Normalization {
  double mean = 0.0;
  double scale = 1.0;
};

// Grid mean and max |f - mean| over kNormalizationGrid cell midpoints.
inline const Normalization& FeatureNormalization(int index) {
  static const std::array<Normalization, kSignalFeatures> table = [] {
    std::array<Normalization, kSignalFeatures> out{};
    for (int f = 1; f <= kSignalFeatures; ++f) {
      std::vector<double> values(kNormalizationGrid);
      double sum = 0.0;
      for (std::size_t i = 0; i < kNormalizationGrid; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / kNormalizationGrid;
        values[i] = RawFeatureFn(f, x);
        sum += values[i];
      }
      const double mean = sum / kNormalizationGrid;
      double max_abs = 0.0;
      for (double v : values) max_abs = std::max(max_abs, std::abs(v - mean));
      out[static_cast<std::size_t>(f - 1)] = {mean, max_abs};
    }
    return out;
  }();
  if (index < 1 || index > kSignalFeatures) {
    throw InvalidArgument("feature function index must be in 1..4, got " +
                          std::to_string(index));
  }
  return table[static_cast<std::size_t>(index - 1)];
}

// Normalized feature function: zero grid mean, values within [-1, 1].
inline double TrueFeatureFn(int index, double x) {
  const auto& norm = FeatureNormalization(index);
  return (RawFeatureFn(index, x) - norm.mean) / norm.scale;
}

// Step interaction minus its area-weighted mean.
inline double TrueInteractionFn(double x1, double x2, const SyntheticSpec& spec) {
  const double p1 = spec.threshold_first;
  const double p2 = spec.threshold_second;
  const auto& w = spec.weights;
  const double mean = w[0] * p1 * p2 + w[1] * p1 * (1 - p2) +
                      w[2] * (1 - p1) * p2 + w[3] * (1 - p1) * (1 - p2);
  const int region = (x1 >= p1 ? 2 : 0) + (x2 >= p2 ? 1 : 0);
  return w[static_cast<std::size_t>(region)] - mean;
}

// Marginal of the interaction along one of its features: the expectation
// over the other feature.
inline double InteractionMarginal(int index, double x, const SyntheticSpec& spec) {
  if (!spec.interaction || (index != 1 && index != 2)) return 0.0;
  const auto& w = spec.weights;
  const double p1 = spec.threshold_first;
  const double p2 = spec.threshold_second;
  double raw = 0.0;
  if (index == 1) {
    raw = x >= p1 ? w[2] * p2 + w[3] * (1 - p2) : w[0] * p2 + w[1] * (1 - p2);
  } else {
    raw = x >= p2 ? w[1] * p1 + w[3] * (1 - p1) : w[0] * p1 + w[2] * (1 - p1);
  }
  const double mean = w[0] * p1 * p2 + w[1] * p1 * (1 - p2) +
                      w[2] * (1 - p1) * p2 + w[3] * (1 - p1) * (1 - p2);
  return spec.signal_scale * (raw - mean);
}

// Additive main effect of feature `index` in the generated risk: its feature
// function plus the part of the interaction that is additive in it.
inline double TrueMainEffectFn(int index, double x, const SyntheticSpec& spec) {
  return spec.signal_scale * TrueFeatureFn(index, x) + InteractionMarginal(index, x, spec);
}

struct SyntheticData {
  SurvivalDataset dataset;
  std::vector<double> risk;         // noisy risk per sample
  std::vector<double> probability;  // sigmoid(risk) = P(T <= horizon | x)
  std::vector<double> event_time;   // uncensored T
};

inline SyntheticData Generate(const SyntheticSpec& spec) {
  spec.Validate();
  const std::size_t p = kSignalFeatures + (spec.noise_feature ? 1 : 0);
  SyntheticData out;
  auto& ds = out.dataset;
  ds.features.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    ds.features[j].name = "f" + std::to_string(j + 1);
    ds.features[j].kind = FeatureKind::kContinuous;
    ds.features[j].numeric.reserve(spec.n);
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = unit(rng);
      ds.features[j].numeric.push_back(x[j]);
    }
    double signal = 0.0;
    for (int f = 1; f <= kSignalFeatures; ++f) {
      signal += TrueFeatureFn(f, x[static_cast<std::size_t>(f - 1)]);
    }
    if (spec.interaction) signal += TrueInteractionFn(x[0], x[1], spec);
    const double risk = spec.signal_scale * signal + spec.noise_sd * noise(rng);
    const double prob = Sigmoid(risk);
    const bool early = unit(rng) < prob;
    const double t = early ? spec.horizon * unit(rng)
                           : spec.horizon + (spec.t_max - spec.horizon) * unit(rng);
    const bool censor_draw = unit(rng) < spec.censor_rate;
    const double c = spec.t_max * unit(rng);
    double z = t;
    std::uint8_t event = 1;
    if (censor_draw && c < t) {
      z = c;
      event = 0;
    }
    out.risk.push_back(risk);
    out.probability.push_back(prob);
    out.event_time.push_back(t);
    ds.time.push_back(z);
    ds.event.push_back(event);
  }
  return out;
}

}  // namespace dnamite
