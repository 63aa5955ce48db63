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

// Kaplan-Meier curves, the censoring survival curve G(t) = P(C > t) and the
// IPCW squared-error loss used for training.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dnamite/common.hpp"

namespace dnamite {

// Right-continuous, nonincreasing step function that equals 1 before the
// first step time.
struct StepCurve {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // value from times[i] (inclusive) onwards

  // Value at t: the value of the last step at or before t.
  double At(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  // Left limit at t: the value of the last step strictly before t.
  double LeftLimit(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  bool operator==(const StepCurve&) const = default;

  void Validate(const std::string& where) const {
    Require(times.size() == values.size(),
            where + ": step curve times and values differ in length");
    double prev = 1.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      Require(std::isfinite(times[i]), where + ": step times must be finite");
      if (i > 0) {
        Require(times[i - 1] < times[i],
                where + ": step times must be strictly increasing");
      }
      Require(values[i] >= 0.0 && values[i] <= 1.0,
              where + ": step values must lie in [0, 1]");
      Require(values[i] <= prev, where + ": step values must be nonincreasing");
      prev = values[i];
    }
  }
};

// Product-limit estimate over the distinct event times. At a time with both
// events and censorings, censored samples are still counted at risk.
inline StepCurve KmFit(std::span<const double> time,
                       std::span<const std::uint8_t> event) {
  Require(!time.empty(), "km_fit: empty input");
  Require(time.size() == event.size(), "km_fit: time and event lengths differ");
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  StepCurve curve;
  double survival = 1.0;
  std::size_t at_risk = time.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = time[order[i]];
    std::size_t deaths = 0;
    std::size_t j = i;
    while (j < order.size() && time[order[j]] == t) {
      deaths += event[order[j]] != 0 ? 1 : 0;
      ++j;
    }
    if (deaths > 0) {
      survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.values.push_back(survival);
    }
    at_risk -= j - i;
    i = j;
  }
  return curve;
}

// G(t) = P(C > t): Kaplan-Meier with censorings treated as events.
inline StepCurve CensorCurve(std::span<const double> time,
                             std::span<const std::uint8_t> event) {
  std::vector<std::uint8_t> flipped(event.size());
  for (std::size_t i = 0; i < event.size(); ++i) flipped[i] = event[i] ? 0 : 1;
  return KmFit(time, flipped);
}

inline constexpr double kDefaultCensorFloor = 0.05;

// Inverse censoring weights for one set of samples and evaluation times.
// G is clamped below at `floor`; `clamped` counts the clamped lookups.
struct IpcwWeights {
  std::vector<double> event_weight;     // 1 / G(Z_i-) per sample
  std::vector<double> survivor_weight;  // 1 / G(t_k) per time
  std::size_t clamped = 0;
};

inline IpcwWeights ComputeIpcwWeights(std::span<const double> time,
                                      const StepCurve& censor,
                                      std::span<const double> eval_times,
                                      double floor = kDefaultCensorFloor) {
  IpcwWeights w;
  auto inverse = [&](double g) {
    if (g < floor) {
      ++w.clamped;
      g = floor;
    }
    return 1.0 / g;
  };
  w.event_weight.reserve(time.size());
  for (double z : time) w.event_weight.push_back(inverse(censor.LeftLimit(z)));
  w.survivor_weight.reserve(eval_times.size());
  for (double t : eval_times) w.survivor_weight.push_back(inverse(censor.At(t)));
  return w;
}

// Sum over times of the IPCW squared error for sample i. When `grad` is
// non-empty it receives d(term)/d(cif_k).
inline double IpcwSampleTerm(std::span<const double> cif, double z,
                             bool event, double event_weight,
                             std::span<const double> survivor_weight,
                             std::span<const double> eval_times,
                             std::span<double> grad = {}) {
  double total = 0.0;
  for (std::size_t k = 0; k < eval_times.size(); ++k) {
    const double p = cif[k];
    double g = 0.0;
    if (z > eval_times[k]) {
      total += survivor_weight[k] * p * p;
      g = 2.0 * survivor_weight[k] * p;
    } else if (event) {
      const double r = 1.0 - p;
      total += event_weight * r * r;
      g = -2.0 * event_weight * r;
    }
    if (!grad.empty()) grad[k] = g;
  }
  return total;
}

// Mean over samples of IpcwSampleTerm.
inline double IpcwLoss(const Matrix& cif, std::span<const double> time,
                       std::span<const std::uint8_t> event,
                       const IpcwWeights& weights,
                       std::span<const double> eval_times) {
  Require(cif.rows == time.size() && cif.cols == eval_times.size(),
          "ipcw_loss: prediction matrix shape mismatch");
  Require(!time.empty(), "ipcw_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    total += IpcwSampleTerm(cif.row(i), time[i], event[i] != 0,
                            weights.event_weight[i], weights.survivor_weight,
                            eval_times);
  }
  return total / static_cast<double>(time.size());
}

inline double IpcwLoss(const Matrix& cif, std::span<const double> time,
                       std::span<const std::uint8_t> event,
                       const StepCurve& censor, std::span<const double> eval_times,
                       double floor = kDefaultCensorFloor) {
  return IpcwLoss(cif, time, event,
                  ComputeIpcwWeights(time, censor, eval_times, floor), eval_times);
}

}  // namespace dnamite
