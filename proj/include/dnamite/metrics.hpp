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

// Survival evaluation metrics. Ties in risk receive half credit everywhere.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "dnamite/common.hpp"
#include "dnamite/survstats.hpp"

namespace dnamite {

struct TimeSeriesMetric {
  std::vector<double> per_time;  // NaN where the time was skipped
  double mean = 0.0;             // unweighted mean over non-skipped times
};

// Cumulative/dynamic AUC with inverse-censoring weights on the cases. At
// time t, cases are {Z_i <= t, delta_i = 1} weighted by 1/G(Z_i-), controls
// are {Z_j > t}. Column k of `risk` scores time k.
inline TimeSeriesMetric TdAuc(const Matrix& risk, std::span<const double> time,
                              std::span<const std::uint8_t> event,
                              const StepCurve& censor,
                              std::span<const double> eval_times,
                              double floor = kDefaultCensorFloor) {
  Require(risk.rows == time.size() && risk.cols == eval_times.size(),
          "td_auc: risk matrix shape mismatch");
  const auto weights = ComputeIpcwWeights(time, censor, eval_times, floor);
  TimeSeriesMetric out;
  out.per_time.assign(eval_times.size(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t valid = 0;
  std::vector<double> controls;
  for (std::size_t k = 0; k < eval_times.size(); ++k) {
    const double t = eval_times[k];
    controls.clear();
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] > t) controls.push_back(risk(i, k));
    }
    std::sort(controls.begin(), controls.end());
    double numerator = 0.0;
    double case_weight = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (!(time[i] <= t && event[i])) continue;
      const double r = risk(i, k);
      const auto lo = std::lower_bound(controls.begin(), controls.end(), r);
      const auto hi = std::upper_bound(lo, controls.end(), r);
      const double below = static_cast<double>(lo - controls.begin());
      const double ties = static_cast<double>(hi - lo);
      numerator += weights.event_weight[i] * (below + 0.5 * ties);
      case_weight += weights.event_weight[i];
    }
    if (controls.empty() || case_weight == 0.0) continue;
    out.per_time[k] = numerator / (case_weight * static_cast<double>(controls.size()));
    sum += out.per_time[k];
    ++valid;
  }
  if (valid == 0) throw DataError("td_auc: no time has both cases and controls");
  out.mean = sum / static_cast<double>(valid);
  return out;
}

// IPCW Brier score per time:
//   BS(t) = (1/n) sum_i [ 1{Z_i <= t, d_i = 1} (1 - p_i)^2 / G(Z_i-)
//                        + 1{Z_i > t} p_i^2 / G(t) ]
inline TimeSeriesMetric BrierIpcw(const Matrix& cif, std::span<const double> time,
                                  std::span<const std::uint8_t> event,
                                  const StepCurve& censor,
                                  std::span<const double> eval_times,
                                  double floor = kDefaultCensorFloor) {
  Require(cif.rows == time.size() && cif.cols == eval_times.size(),
          "brier: prediction matrix shape mismatch");
  Require(!time.empty(), "brier: empty input");
  const auto weights = ComputeIpcwWeights(time, censor, eval_times, floor);
  TimeSeriesMetric out;
  out.per_time.assign(eval_times.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(time.size());
  for (std::size_t k = 0; k < eval_times.size(); ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      const double p = cif(i, k);
      if (time[i] > eval_times[k]) {
        total += p * p * weights.survivor_weight[k];
      } else if (event[i]) {
        total += (1.0 - p) * (1.0 - p) * weights.event_weight[i];
      }
    }
    out.per_time[k] = total * inv_n;
  }
  out.mean = std::accumulate(out.per_time.begin(), out.per_time.end(), 0.0) /
             static_cast<double>(eval_times.size());
  return out;
}

namespace internal {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void Add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Count of inserted positions < i.
  long long Prefix(std::size_t i) const {
    long long s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<long long> tree_;
};

}  // namespace internal

// Harrell's C over pairs with Z_i < Z_j and delta_i = 1; higher risk should
// mean earlier events. O(n log n).
inline double CIndex(std::span<const double> risk, std::span<const double> time,
                     std::span<const std::uint8_t> event) {
  const std::size_t n = risk.size();
  Require(time.size() == n && event.size() == n, "c_index: length mismatch");
  std::vector<double> levels(risk.begin(), risk.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto rank_of = [&](double r) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), r) -
                                    levels.begin());
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

  // Walk from the latest time down; the tree holds samples with a strictly
  // later time than the current group.
  internal::Fenwick later(levels.size());
  long long inserted = 0;
  double concordant = 0.0;
  double comparable = 0.0;
  std::size_t g = 0;
  while (g < n) {
    std::size_t h = g;
    while (h < n && time[order[h]] == time[order[g]]) ++h;
    for (std::size_t s = g; s < h; ++s) {
      const std::size_t i = order[s];
      if (!event[i]) continue;
      const std::size_t r = rank_of(risk[i]);
      const long long below = later.Prefix(r);
      const long long at_or_below = later.Prefix(r + 1);
      concordant += static_cast<double>(below) +
                    0.5 * static_cast<double>(at_or_below - below);
      comparable += static_cast<double>(inserted);
    }
    for (std::size_t s = g; s < h; ++s) later.Add(rank_of(risk[order[s]]));
    inserted += static_cast<long long>(h - g);
    g = h;
  }
  if (comparable == 0.0) throw DataError("c_index: no comparable pairs");
  return concordant / comparable;
}

struct CalibrationBin {
  double mean_predicted = 0.0;
  double observed = 0.0;  // 1 - KM(t) within the bin
  std::size_t count = 0;
  bool flagged = false;   // KM undefined at t: everyone censored before t
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
  double mae = std::numeric_limits<double>::quiet_NaN();
};

// Equal-count bins over samples sorted by predicted CIF at t. The number of
// bins is capped by the number of distinct predictions.
inline CalibrationCurve Calibration(std::span<const double> predicted,
                                    std::span<const double> time,
                                    std::span<const std::uint8_t> event, double t,
                                    int n_bins = 10) {
  Require(n_bins >= 2, "calibration: n_bins must be >= 2");
  const std::size_t n = predicted.size();
  Require(n > 0 && time.size() == n && event.size() == n,
          "calibration: length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predicted[a] < predicted[b];
  });
  std::vector<double> distinct(predicted.begin(), predicted.end());
  std::sort(distinct.begin(), distinct.end());
  const std::size_t n_distinct = static_cast<std::size_t>(
      std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  const std::size_t B =
      std::min({static_cast<std::size_t>(n_bins), n_distinct, n});

  CalibrationCurve curve;
  double err = 0.0;
  std::size_t used = 0;
  std::size_t start = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t size = n / B + (b < n % B ? 1 : 0);
    std::vector<double> bt;
    std::vector<std::uint8_t> be;
    CalibrationBin bin;
    bin.count = size;
    double max_time = -std::numeric_limits<double>::infinity();
    for (std::size_t s = start; s < start + size; ++s) {
      const std::size_t i = order[s];
      bin.mean_predicted += predicted[i];
      bt.push_back(time[i]);
      be.push_back(event[i]);
      max_time = std::max(max_time, time[i]);
    }
    bin.mean_predicted /= static_cast<double>(size);
    const double surv = KmFit(bt, be).At(t);
    bin.observed = 1.0 - surv;
    bin.flagged = max_time < t && surv > 0.0;
    if (!bin.flagged) {
      err += std::abs(bin.mean_predicted - bin.observed);
      ++used;
    }
    curve.bins.push_back(bin);
    start += size;
  }
  if (used > 0) curve.mae = err / static_cast<double>(used);
  return curve;
}

// Mean absolute difference over `grid` between two curves, each shifted to
// zero mean over the grid first.
template <typename Learned, typename Truth>
double ShapeMae(Learned&& learned, Truth&& truth, std::span<const double> grid) {
  Require(!grid.empty(), "shape_mae: empty grid");
  std::vector<double> a, b;
  a.reserve(grid.size());
  b.reserve(grid.size());
  for (double x : grid) {
    a.push_back(learned(x));
    b.push_back(truth(x));
  }
  const double inv = 1.0 / static_cast<double>(grid.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) * inv;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) * inv;
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    total += std::abs((a[i] - ma) - (b[i] - mb));
  }
  return total * inv;
}

// Cell midpoints (i + 0.5) / n of [0, 1].
inline std::vector<double> UniformGrid(std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  return grid;
}

}  // namespace dnamite
