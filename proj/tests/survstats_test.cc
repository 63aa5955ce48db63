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

#include "dnamite/survstats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace dnamite {
namespace {

using Events = std::vector<std::uint8_t>;

// Product limit written directly from its definition: for each distinct
// event time s, factor 1 - d(s) / #{Z >= s}.
double OracleKm(const std::vector<double>& z, const Events& d, double t) {
  std::set<double> event_times;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (d[i]) event_times.insert(z[i]);
  }
  double s = 1.0;
  for (double u : event_times) {
    if (u > t) break;
    double deaths = 0, risk = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] >= u) ++risk;
      if (z[i] == u && d[i]) ++deaths;
    }
    s *= 1.0 - deaths / risk;
  }
  return s;
}

TEST(KmFitTest, HandComputedCurve) {
  const std::vector<double> z = {2, 3, 3, 5};
  const Events d = {1, 0, 1, 1};
  const StepCurve km = KmFit(z, d);
  // At t = 3 the at-risk set is {3, 3, 5}: the censored 3 stays at risk.
  EXPECT_EQ(km.times, (std::vector<double>{2, 3, 5}));
  EXPECT_EQ(km.At(1.9), 1.0);
  EXPECT_EQ(km.At(2.0), 0.75);
  EXPECT_EQ(km.At(3.0), 0.75 * (1.0 - 1.0 / 3.0));
  EXPECT_EQ(km.At(4.9), 0.5);
  EXPECT_EQ(km.At(5.0), 0.0);
  for (double t : {2.0, 3.0, 5.0}) EXPECT_EQ(km.At(t), OracleKm(z, d, t));
  EXPECT_EQ(km.LeftLimit(3.0), 0.75);
  EXPECT_EQ(km.LeftLimit(2.0), 1.0);
}

TEST(KmFitTest, DegenerateInputs) {
  const std::vector<double> z = {1, 2, 3};
  const StepCurve none = KmFit(z, Events{0, 0, 0});
  EXPECT_TRUE(none.times.empty());
  EXPECT_EQ(none.At(100.0), 1.0);
  const std::vector<double> one = {4.0};
  const StepCurve single = KmFit(one, Events{1});
  EXPECT_EQ(single.At(3.999), 1.0);
  EXPECT_EQ(single.At(4.0), 0.0);
  EXPECT_THROW(KmFit(std::vector<double>{}, Events{}), InvalidArgument);
}

TEST(CensorCurveTest, HandComputed) {
  const std::vector<double> z = {1, 2};
  const StepCurve g = CensorCurve(z, Events{0, 1});
  EXPECT_EQ(g.At(1.0), 0.5);
  EXPECT_EQ(g.At(2.0), 0.5);
  const StepCurve all_events = CensorCurve(z, Events{1, 1});
  EXPECT_EQ(all_events.At(10.0), 1.0);
}

TEST(CensorCurveTest, DoubleFlipIsKm) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> t(1, 15), coin(0, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> z;
    Events d, flipped;
    for (int i = 0; i < 40; ++i) {
      z.push_back(t(rng));
      d.push_back(static_cast<std::uint8_t>(coin(rng)));
      flipped.push_back(d.back() ? 0 : 1);
    }
    EXPECT_EQ(CensorCurve(z, flipped), KmFit(z, d));
  }
}

TEST(KmPropertyTest, MatchesOracleAndIsPermutationInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> t(0, 12), coin(0, 2);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z;
    Events d;
    for (int i = 0; i < 30; ++i) {
      z.push_back(0.5 * t(rng));
      d.push_back(coin(rng) != 0 ? 1 : 0);
    }
    const StepCurve km = KmFit(z, d);
    km.Validate("km");
    for (double q = 0.0; q <= 6.5; q += 0.25) EXPECT_EQ(km.At(q), OracleKm(z, d, q));
    std::vector<std::size_t> perm(z.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> zp;
    Events dp;
    for (auto i : perm) {
      zp.push_back(z[i]);
      dp.push_back(d[i]);
    }
    EXPECT_EQ(KmFit(zp, dp), km);
  }
}

TEST(KmPropertyTest, ProductOfCurvesTracksObservedSurvival) {
  std::mt19937_64 rng(23);
  std::exponential_distribution<double> event_time(1.0), censor_time(0.5);
  std::vector<double> z;
  Events d;
  for (int i = 0; i < 5000; ++i) {
    const double t = event_time(rng);
    const double c = censor_time(rng);
    z.push_back(std::min(t, c));
    d.push_back(t <= c ? 1 : 0);
  }
  const StepCurve s = KmFit(z, d);
  const StepCurve g = CensorCurve(z, d);
  for (double t : {0.1, 0.3, 0.6, 1.0, 1.5}) {
    const double empirical =
        static_cast<double>(std::count_if(z.begin(), z.end(), [&](double v) { return v > t; })) /
        static_cast<double>(z.size());
    EXPECT_NEAR(s.At(t) * g.At(t), empirical, 0.05) << t;
  }
}

TEST(IpcwLossTest, HandEvaluatedSingleSample) {
  Matrix cif(1, 2);
  cif(0, 0) = 0.2;
  cif(0, 1) = 0.7;
  const std::vector<double> z = {2.0}, times = {1.0, 3.0};
  const StepCurve none;
  EXPECT_NEAR(IpcwLoss(cif, z, Events{1}, none, times), 0.2 * 0.2 + 0.3 * 0.3, 1e-15);
}

TEST(IpcwLossTest, PerfectPredictionsAndCensoredEarlySamples) {
  const std::vector<double> z = {0.5, 1.5, 2.5, 0.2}, times = {1.0, 2.0};
  const Events d = {1, 1, 1, 0};
  Matrix cif(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < 2; ++k) cif(i, k) = z[i] <= times[k] ? 1.0 : 0.0;
  }
  cif(3, 0) = 0.9;  // censored before every time: contributes nothing
  cif(3, 1) = 0.4;
  const StepCurve g = CensorCurve(z, d);
  EXPECT_EQ(IpcwLoss(cif, z, d, g, times), 0.0);
}

TEST(IpcwLossTest, NoCensoringEqualsBrierSum) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 100;
  const std::vector<double> times = {0.2, 0.5, 0.8};
  std::vector<double> z(n);
  Events d(n, 1);
  Matrix cif(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = unit(rng);
    for (std::size_t k = 0; k < 3; ++k) cif(i, k) = unit(rng);
  }
  double brier = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double y = z[i] <= times[k] ? 1.0 : 0.0;
      brier += (cif(i, k) - y) * (cif(i, k) - y);
    }
  }
  EXPECT_NEAR(IpcwLoss(cif, z, d, CensorCurve(z, d), times), brier / n, 1e-14);
}

TEST(IpcwWeightsTest, LeftLimitAndFloor) {
  const std::vector<double> z = {1, 2, 3, 4};
  const Events d = {0, 0, 0, 1};
  const StepCurve g = CensorCurve(z, d);
  // G drops to 3/4, 2/4, 1/4 at 1, 2, 3.
  const std::vector<double> times = {0.5, 3.5};
  const auto w = ComputeIpcwWeights(z, g, times, 0.3);
  EXPECT_EQ(w.event_weight[0], 1.0);
  EXPECT_DOUBLE_EQ(w.event_weight[1], 1.0 / 0.75);
  EXPECT_DOUBLE_EQ(w.event_weight[3], 1.0 / 0.3);
  EXPECT_EQ(w.survivor_weight[0], 1.0);
  EXPECT_DOUBLE_EQ(w.survivor_weight[1], 1.0 / 0.3);
  EXPECT_EQ(w.clamped, 2u);
}

TEST(IpcwLossTest, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> z(50);
    Events d(50);
    Matrix cif(50, 4);
    for (std::size_t i = 0; i < 50; ++i) {
      z[i] = unit(rng);
      d[i] = unit(rng) < 0.6 ? 1 : 0;
      for (std::size_t k = 0; k < 4; ++k) cif(i, k) = unit(rng);
    }
    const std::vector<double> times = {0.2, 0.4, 0.6, 0.8};
    EXPECT_GE(IpcwLoss(cif, z, d, CensorCurve(z, d), times), 0.0);
  }
}

}  // namespace
}  // namespace dnamite
