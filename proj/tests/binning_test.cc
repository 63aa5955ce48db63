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

#include "dnamite/binning.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace dnamite {
namespace {

std::vector<std::optional<double>> Wrap(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

// Type-7 quantile written out from its definition: h = (n - 1) q,
// x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h]).
double OracleQuantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const double fl = std::floor(h);
  const auto i = static_cast<std::size_t>(fl);
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (h - fl) * (x[i + 1] - x[i]);
}

TEST(FitBinsTest, EightValuesFourBins) {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8};
  const BinSpec spec = FitBins(Wrap(v), 4);
  ASSERT_EQ(spec.n_bins, 4);
  ASSERT_EQ(spec.cut_points.size(), 3u);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_DOUBLE_EQ(spec.cut_points[static_cast<std::size_t>(i - 1)],
                     OracleQuantile(v, i / 4.0));
  }
  EXPECT_DOUBLE_EQ(spec.cut_points[0], 2.75);
  EXPECT_DOUBLE_EQ(spec.cut_points[1], 4.5);
  EXPECT_DOUBLE_EQ(spec.cut_points[2], 6.25);
}

TEST(FitBinsTest, ConstantColumnIsOneBin) {
  const BinSpec spec = FitBins(Wrap(std::vector<double>(50, 5.0)), 8);
  EXPECT_EQ(spec.n_bins, 1);
  EXPECT_TRUE(spec.cut_points.empty());
}

TEST(FitBinsTest, ZeroInflatedCollapsesDuplicates) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i < 900 ? 0.0 : 1.0 + unit(rng));
  std::shuffle(v.begin(), v.end(), rng);
  const BinSpec spec = FitBins(Wrap(v), 16);
  std::set<double> distinct;
  for (int i = 1; i < 16; ++i) {
    const double c = OracleQuantile(v, i / 16.0);
    if (c < *std::max_element(v.begin(), v.end())) distinct.insert(c);
  }
  EXPECT_LT(spec.n_bins, 16);
  EXPECT_EQ(spec.cut_points.size(), distinct.size());
  EXPECT_TRUE(std::equal(spec.cut_points.begin(), spec.cut_points.end(), distinct.begin()));
}

TEST(FitBinsTest, IgnoresMissingValues) {
  std::vector<std::optional<double>> v = {1.0, std::nullopt, 2.0, 3.0, std::nullopt, 4.0};
  const BinSpec spec = FitBins(v, 2);
  ASSERT_EQ(spec.cut_points.size(), 1u);
  EXPECT_DOUBLE_EQ(spec.cut_points[0], 2.5);
}

TEST(FitBinsTest, Errors) {
  EXPECT_THROW(FitBins(Wrap({1.0, 2.0}), 1), InvalidArgument);
  std::vector<std::optional<double>> all_missing(3);
  EXPECT_THROW(FitBins(all_missing, 4), DataError);
}

TEST(FitLevelsTest, FirstAppearanceOrder) {
  std::vector<std::optional<std::string>> v = {"b", "a", "b"};
  const BinSpec spec = FitLevels(v);
  EXPECT_EQ(spec.levels, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(spec.n_bins, 2);
  std::vector<std::optional<std::string>> one = {"x"};
  EXPECT_EQ(FitLevels(one).n_bins, 1);
}

TEST(FitLevelsTest, CardinalityIgnoresFrequency) {
  std::vector<std::optional<std::string>> v;
  for (int i = 0; i < 1000; ++i) v.push_back(std::string(1, static_cast<char>('a' + (i < 990 ? 0 : i % 5))));
  EXPECT_EQ(FitLevels(v).n_bins, 5);
  std::vector<std::optional<std::string>> none(4);
  EXPECT_THROW(FitLevels(none), DataError);
}

TEST(ApplyBinsTest, BoundariesAndMissing) {
  BinSpec spec;
  spec.cut_points = {2.75, 4.5, 6.25};
  spec.n_bins = 4;
  EXPECT_EQ(ApplyBins(1.0, spec), 1);
  EXPECT_EQ(ApplyBins(std::optional<double>(), spec), kMissingBin);
  EXPECT_EQ(ApplyBins(4.5, spec), 2);
  EXPECT_EQ(ApplyBins(4.5000001, spec), 3);
  EXPECT_EQ(ApplyBins(100.0, spec), 4);
  EXPECT_EQ(ApplyBins(std::nan(""), spec), kMissingBin);
}

TEST(ApplyBinsTest, Categorical) {
  std::vector<std::optional<std::string>> v = {"red", "green"};
  const BinSpec spec = FitLevels(v);
  EXPECT_EQ(ApplyBins(std::optional<std::string_view>("red"), spec), 1);
  EXPECT_EQ(ApplyBins(std::optional<std::string_view>("green"), spec), 2);
  EXPECT_EQ(ApplyBins(std::optional<std::string_view>("blue"), spec), kMissingBin);
  EXPECT_EQ(ApplyBins(std::optional<std::string_view>(), spec), kMissingBin);
}

TEST(BinSpecTest, ValidateRejectsBrokenInvariants) {
  BinSpec spec;
  spec.cut_points = {1.0, 0.5};
  spec.n_bins = 3;
  EXPECT_THROW(spec.Validate(), InvalidArgument);
  spec.cut_points = {0.5};
  EXPECT_THROW(spec.Validate(), InvalidArgument);
  BinSpec cat;
  cat.kind = FeatureKind::kCategorical;
  cat.levels = {"a", "a"};
  cat.n_bins = 2;
  EXPECT_THROW(cat.Validate(), InvalidArgument);
}

class BinPropertyTest : public ::testing::TestWithParam<int> {};

TEST_P(BinPropertyTest, MonotoneNonEmptyAndOrderFree) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  std::uniform_int_distribution<int> size(1, 300);
  std::uniform_int_distribution<int> bins(2, 40);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_int_distribution<int> coin(0, 3);
  const int n = size(rng);
  const int b = bins(rng);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    // Rounded draws create ties in a quarter of the cases.
    const double x = normal(rng);
    v.push_back(coin(rng) == 0 ? std::round(x) : x);
  }
  const BinSpec spec = FitBins(Wrap(v), b);
  spec.Validate();
  EXPECT_LE(spec.n_bins, b);

  std::vector<int> counts(static_cast<std::size_t>(spec.n_bins) + 1, 0);
  for (double x : v) ++counts[static_cast<std::size_t>(ApplyBins(x, spec))];
  EXPECT_EQ(counts[0], 0);
  for (int k = 1; k <= spec.n_bins; ++k) {
    EXPECT_GE(counts[static_cast<std::size_t>(k)], 1) << "empty bin " << k;
  }

  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    EXPECT_LE(ApplyBins(sorted[i - 1], spec), ApplyBins(sorted[i], spec));
  }

  std::vector<double> shuffled = v;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(FitBins(Wrap(shuffled), b), spec);
}

INSTANTIATE_TEST_SUITE_P(RandomSamples, BinPropertyTest, ::testing::Range(0, 60));

}  // namespace
}  // namespace dnamite
