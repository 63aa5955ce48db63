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

#include "dnamite/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace dnamite {
namespace {

SurvivalDataset Parse(const std::string& text, CsvSchema schema = {}) {
  std::istringstream in(text);
  return ParseCsv(in, schema);
}

TEST(ParseCsvTest, FourRowFile) {
  const auto ds = Parse("x,time,event\n0.5,2,1\n1.5,3,0\n2.5,3,1\n3.5,5,1\n");
  EXPECT_EQ(ds.n(), 4u);
  EXPECT_EQ(ds.p(), 1u);
  EXPECT_EQ(ds.time, (std::vector<double>{2, 3, 3, 5}));
  EXPECT_EQ(ds.event, (std::vector<std::uint8_t>{1, 0, 1, 1}));
  EXPECT_EQ(ds.features[0].kind, FeatureKind::kContinuous);
}

TEST(ParseCsvTest, EmptyCellIsMissingAndRowKept) {
  const auto ds = Parse("x,y,time,event\n1,,2,1\n,b,3,0\nNA,a,4,true\n");
  ASSERT_EQ(ds.n(), 3u);
  EXPECT_TRUE(ds.features[0].is_missing(1));
  EXPECT_TRUE(ds.features[0].is_missing(2));
  EXPECT_EQ(ds.features[1].kind, FeatureKind::kCategorical);
  EXPECT_TRUE(ds.features[1].is_missing(0));
  EXPECT_EQ(*ds.features[1].text[1], "b");
}

TEST(ParseCsvTest, SchemaForcesCategorical) {
  CsvSchema schema;
  schema.time_col = "T";
  schema.event_col = "D";
  schema.categorical = {"code"};
  const auto ds = Parse("code,T,D\n10,1,1\n20,2,0\n", schema);
  EXPECT_EQ(ds.features[0].kind, FeatureKind::kCategorical);
  EXPECT_EQ(*ds.features[0].text[0], "10");
}

TEST(ParseCsvTest, QuotedFields) {
  CsvSchema schema;
  schema.categorical = {"name"};
  const auto ds = Parse("name,time,event\n\"a, b\",1,1\n\"say \"\"hi\"\"\",2,1\n", schema);
  EXPECT_EQ(*ds.features[0].text[0], "a, b");
  EXPECT_EQ(*ds.features[0].text[1], "say \"hi\"");
}

TEST(ParseCsvTest, Errors) {
  EXPECT_THROW(Parse("x,time,event\n1,2,2\n"), DataError);
  EXPECT_THROW(Parse("x,time,event\n1,-2,1\n"), DataError);
  EXPECT_THROW(Parse("x,time,event\n1,abc,1\n"), DataError);
  EXPECT_THROW(Parse("x,time,event\n1,2,0\n1,3,0\n"), DataError);
  EXPECT_THROW(Parse("x,time,event\n1,2\n"), DataError);
  EXPECT_THROW(Parse("x,event\n1,1\n"), DataError);
  EXPECT_THROW(Parse("time,event\n1,1\n"), DataError);
  EXPECT_THROW(LoadCsv("/nonexistent/file.csv", {}), DataError);
}

TEST(CsvRoundTripTest, BitExactFiniteValues) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  SurvivalDataset ds;
  ds.features.resize(2);
  ds.features[0].name = "a";
  ds.features[1].name = "b";
  ds.features[1].kind = FeatureKind::kCategorical;
  for (int i = 0; i < 500; ++i) {
    double v;
    do {
      const auto b = bits(rng);
      std::memcpy(&v, &b, sizeof v);
    } while (!std::isfinite(v));
    ds.features[0].numeric.push_back(i % 17 == 0 ? std::nullopt : std::optional<double>(v));
    ds.features[1].text.push_back(i % 13 == 0 ? std::nullopt
                                              : std::optional<std::string>("lvl, " + std::to_string(i % 4)));
    ds.time.push_back(std::abs(v) < 1e300 ? std::abs(v) : 1.0);
    ds.event.push_back(static_cast<std::uint8_t>(i % 2));
  }
  std::stringstream buffer;
  WriteCsv(ds, buffer);
  CsvSchema schema;
  schema.categorical = {"b"};
  const auto back = ParseCsv(buffer, schema);
  ASSERT_EQ(back.n(), ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    ASSERT_EQ(back.features[0].numeric[i].has_value(), ds.features[0].numeric[i].has_value());
    if (ds.features[0].numeric[i]) {
      EXPECT_EQ(std::memcmp(&*back.features[0].numeric[i], &*ds.features[0].numeric[i], 8), 0);
    }
    EXPECT_EQ(back.features[1].text[i], ds.features[1].text[i]);
    EXPECT_EQ(back.time[i], ds.time[i]);
    EXPECT_EQ(back.event[i], ds.event[i]);
  }
}

SurvivalDataset Sized(std::size_t n) {
  SurvivalDataset ds;
  ds.features.resize(1);
  ds.features[0].name = "x";
  for (std::size_t i = 0; i < n; ++i) {
    ds.features[0].numeric.push_back(static_cast<double>(i));
    ds.time.push_back(static_cast<double>(i) + 1.0);
    ds.event.push_back(1);
  }
  return ds;
}

void ExpectPartition(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
}

TEST(SplitTest, SizesAndDeterminism) {
  const auto ds = Sized(10);
  const auto a = Split(ds, 0.2, 7);
  EXPECT_EQ(a.validation.size(), 2u);
  EXPECT_EQ(a.train.size(), 8u);
  ExpectPartition(a, 10);
  const auto b = Split(ds, 0.2, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
}

TEST(SplitTest, SeedsGiveDistinctValidPartitions) {
  const auto ds = Sized(100);
  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = Split(ds, 0.2, seed);
    ExpectPartition(s, 100);
    EXPECT_EQ(s.validation.size(), 20u);
    seen.insert(s.validation);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(SplitTest, Errors) {
  EXPECT_THROW(Split(Sized(3), 0.2, 1), InvalidArgument);
  auto ds = Sized(4);
  ds.event = {1, 0, 0, 0};
  bool saw_error = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    try {
      Split(ds, 0.5, seed);
    } catch (const DataError&) {
      saw_error = true;
    }
  }
  EXPECT_TRUE(saw_error);
}

TEST(SubsetTest, SelectsRows) {
  const auto ds = Sized(5);
  const std::vector<std::size_t> rows = {4, 1};
  const auto sub = ds.Subset(rows);
  EXPECT_EQ(sub.time, (std::vector<double>{5, 2}));
  EXPECT_EQ(*sub.features[0].numeric[0], 4.0);
}

}  // namespace
}  // namespace dnamite
