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

#include "dnamite/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dnamite/synthgen.hpp"
#include "dnamite/train.hpp"
#include "test_util.hpp"

namespace dnamite {
namespace {

using testing::MakeSmallProblem;
using testing::SmallProblemOptions;

SmallProblemOptions WithPairs() {
  SmallProblemOptions o;
  o.pairs = {{0, 1}, {3, 2}};
  return o;
}

TEST(TQuantileTest, StudentTValues) {
  EXPECT_EQ(TQuantile95(1), 0.0);
  EXPECT_NEAR(TQuantile95(2), 12.7062047, 1e-6);
  EXPECT_NEAR(TQuantile95(5), 2.7764451, 1e-6);
  EXPECT_NEAR(TQuantile95(10), 2.2621572, 1e-6);
}

TEST(ShapeFunctionTest, SingleMemberIntervalCollapses) {
  auto sp = MakeSmallProblem({});
  CenterModel(sp.model, sp.enc);
  const auto curve = ShapeFunction(sp.model, 1, 3);
  ASSERT_EQ(curve.values.size(), static_cast<std::size_t>(sp.model.bins[1].n_bins));
  for (std::size_t b = 0; b < curve.values.size(); ++b) {
    EXPECT_EQ(curve.ci_lower[b], curve.values[b]);
    EXPECT_EQ(curve.ci_upper[b], curve.values[b]);
  }
  EXPECT_EQ(curve.missing_ci_lower, curve.missing_value);
  EXPECT_EQ(curve.lower.front(), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(curve.upper.back(), std::numeric_limits<double>::infinity());
  for (std::size_t b = 1; b < curve.lower.size(); ++b) EXPECT_EQ(curve.lower[b], curve.upper[b - 1]);
  EXPECT_THROW(ShapeFunction(sp.model, 4, 0), InvalidArgument);
  EXPECT_THROW(ShapeFunction(sp.model, 0, sp.model.K()), InvalidArgument);
}

TEST(ShapeFunctionTest, CurvesReproduceLogits) {
  auto sp = MakeSmallProblem(WithPairs());
  CenterModel(sp.model, sp.enc);
  const Matrix logits = PredictLogits(sp.model, sp.enc);
  const EnsembleModel ensemble{{sp.model}};
  for (std::size_t k = 0; k < sp.model.K(); ++k) {
    std::vector<ShapeCurve> mains;
    for (std::size_t j = 0; j < sp.model.p(); ++j) mains.push_back(ShapeFunction(sp.model, j, k));
    std::vector<ShapeCurve> pairs;
    for (const auto& q : sp.model.pairs) pairs.push_back(PairShapeFunction(ensemble, q.first, q.second, k));
    for (std::size_t i = 0; i < sp.ds.n(); ++i) {
      double s = sp.model.intercept[k];
      for (std::size_t j = 0; j < sp.model.p(); ++j) {
        const int b = sp.enc.bins[j][i];
        s += b == kMissingBin ? mains[j].missing_value
                              : mains[j].values[static_cast<std::size_t>(b - 1)];
      }
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        const auto& pr = sp.model.pairs[q];
        const int a = sp.enc.bins[static_cast<std::size_t>(pr.first)][i];
        const int b = sp.enc.bins[static_cast<std::size_t>(pr.second)][i];
        const int nb = sp.model.bins[static_cast<std::size_t>(pr.second)].n_bins;
        const std::size_t cell = static_cast<std::size_t>(a * (nb + 1) + b);
        ASSERT_EQ(pairs[q].bin_first[cell], a);
        ASSERT_EQ(pairs[q].bin_second[cell], b);
        s += pairs[q].values[cell];
      }
      EXPECT_NEAR(s, logits(i, k), 1e-10);
    }
  }
}

TEST(ShapeFunctionTest, TrainingWeightedMeanIsZero) {
  auto sp = MakeSmallProblem({});
  CenterModel(sp.model, sp.enc);
  for (std::size_t j = 0; j < sp.model.p(); ++j) {
    const auto curve = ShapeFunction(sp.model, j, 2);
    double s = 0.0;
    for (std::size_t i = 0; i < sp.ds.n(); ++i) {
      const int b = sp.enc.bins[j][i];
      s += b == kMissingBin ? curve.missing_value : curve.values[static_cast<std::size_t>(b - 1)];
    }
    EXPECT_LT(std::abs(s / static_cast<double>(sp.ds.n())), 1e-8);
  }
}

TEST(ShapeFunctionTest, CategoricalLabels) {
  std::istringstream csv(
      "time,event,color,x\n1,1,red,0.5\n2,0,blue,0.1\n3,1,red,0.9\n4,1,green,0.3\n"
      "5,1,blue,0.7\n6,0,red,\n");
  CsvSchema schema;
  schema.categorical = {"color"};
  const auto ds = ParseCsv(csv, schema);
  ModelHyperparameters hp;
  hp.embedding_dim = 4;
  hp.hidden = {4};
  hp.n_times = 2;
  std::mt19937_64 rng(1);
  auto model = MakeModel(hp, ds.feature_names(), FitFeatureBins(ds, 4),
                         ChooseEvalTimes(ds.time, ds.event, 2),
                         CensorCurve(ds.time, ds.event), RawRanges(ds), rng);
  CenterModel(model, Encode(model, ds));
  const auto curve = ShapeFunction(model, 0, 0);
  EXPECT_EQ(curve.labels, (std::vector<std::string>{"red", "blue", "green"}));
  EXPECT_TRUE(curve.lower.empty());
}

TEST(PairShapeFunctionTest, GridAndErrors) {
  auto sp = MakeSmallProblem(WithPairs());
  CenterModel(sp.model, sp.enc);
  const EnsembleModel e{{sp.model}};
  const auto curve = PairShapeFunction(e, 3, 2, 1);
  const auto na = static_cast<std::size_t>(sp.model.bins[3].n_bins + 1);
  const auto nb = static_cast<std::size_t>(sp.model.bins[2].n_bins + 1);
  EXPECT_EQ(curve.values.size(), na * nb);
  EXPECT_EQ(curve.term.kind, TermRef::Kind::kPair);
  EXPECT_THROW(PairShapeFunction(e, 2, 3, 1), InvalidArgument);
  EXPECT_THROW(PairShapeFunction(e, 0, 1, 99), InvalidArgument);
}

TEST(ShapeFunctionTest, EnsembleMeanAndInterval) {
  auto a = MakeSmallProblem({});
  auto b = a;
  std::mt19937_64 rng(9);
  b.model = MakeModel(a.model.hp, a.ds.feature_names(), a.model.bins, a.model.eval_times,
                      a.model.censor_curve, RawRanges(a.ds), rng);
  CenterModel(a.model, a.enc);
  CenterModel(b.model, a.enc);
  const EnsembleModel e{{a.model, b.model}};
  const auto ca = ShapeFunction(a.model, 0, 4);
  const auto cb = ShapeFunction(b.model, 0, 4);
  const auto ce = ShapeFunction(e, 0, 4);
  for (std::size_t i = 0; i < ce.values.size(); ++i) {
    const double mean = 0.5 * (ca.values[i] + cb.values[i]);
    const double sd = std::abs(ca.values[i] - cb.values[i]) / std::sqrt(2.0);
    const double half = 12.706204736174707 * sd / std::sqrt(2.0);
    EXPECT_NEAR(ce.values[i], mean, 1e-15);
    EXPECT_NEAR(ce.ci_upper[i] - ce.values[i], half, 1e-9);
    EXPECT_NEAR(ce.values[i] - ce.ci_lower[i], half, 1e-9);
  }
}

// One feature with two bins, a linear network and a point-mass kernel:
// the shape is -c on bin 1 and +c on bin 2.
DnamiteModel TwoLevelModel(double c, const SurvivalDataset& ds) {
  ModelHyperparameters hp;
  hp.embedding_dim = 1;
  hp.hidden = {};
  hp.gamma = 0.0;
  hp.n_times = 1;
  std::mt19937_64 rng(2);
  auto m = MakeModel(hp, ds.feature_names(), FitFeatureBins(ds, 2),
                     ChooseEvalTimes(ds.time, ds.event, 1), CensorCurve(ds.time, ds.event),
                     RawRanges(ds), rng);
  m.mains[0].table.weights(1, 0) = -1.0;
  m.mains[0].table.weights(2, 0) = 1.0;
  m.mains[0].net.layers[0].weight(0, 0) = c;
  m.mains[0].net.layers[0].bias[0] = 0.0;
  return m;
}

SurvivalDataset HalfAndHalf() {
  SurvivalDataset ds;
  ds.features.resize(1);
  ds.features[0].name = "x";
  for (int i = 0; i < 10; ++i) {
    ds.features[0].numeric.push_back(i < 5 ? 0.0 : 1.0);
    ds.time.push_back(1.0 + i);
    ds.event.push_back(1);
  }
  return ds;
}

TEST(ImportanceTest, PlusMinusShapeHasImportanceC) {
  const auto ds = HalfAndHalf();
  auto m = TwoLevelModel(0.75, ds);
  const auto enc = Encode(m, ds);
  CenterModel(m, enc);
  const auto imp = ComputeImportance(m, enc);
  EXPECT_DOUBLE_EQ(imp.mains(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(imp.MainMean(0), 0.75);
  auto flat = TwoLevelModel(0.0, ds);
  CenterModel(flat, enc);
  EXPECT_EQ(ComputeImportance(flat, enc).mains(0, 0), 0.0);
}

TEST(ImportanceTest, MatchesDirectMeanAbsoluteContribution) {
  auto sp = MakeSmallProblem(WithPairs());
  CenterModel(sp.model, sp.enc);
  const auto imp = ComputeImportance(sp.model, sp.enc);
  ASSERT_EQ(imp.pair_features, (std::vector<std::pair<int, int>>{{0, 1}, {3, 2}}));
  for (const auto ref : internal::AllTerms(sp.model)) {
    const Matrix c = TermContributions(sp.model, ref, sp.enc);
    const Matrix& got = ref.kind == TermRef::Kind::kMain ? imp.mains : imp.pairs;
    for (std::size_t k = 0; k < sp.model.K(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.rows; ++i) s += std::abs(c(i, k));
      EXPECT_NEAR(got(ref.index, k), s / static_cast<double>(c.rows), 1e-14);
    }
  }
}

TEST(ImportanceTest, InvariantToConstantShiftAfterRecentering) {
  auto sp = MakeSmallProblem({});
  CenterModel(sp.model, sp.enc);
  const auto before = ComputeImportance(sp.model, sp.enc);
  for (double& b : sp.model.mains[2].net.layers.back().bias) b += 5.0;
  CenterModel(sp.model, sp.enc);
  const auto after = ComputeImportance(sp.model, sp.enc);
  for (std::size_t i = 0; i < before.mains.data.size(); ++i) {
    EXPECT_NEAR(after.mains.data[i], before.mains.data[i], 1e-12);
  }
}

TEST(ImportanceTest, EnsembleMatchesPairsByFeatures) {
  SmallProblemOptions oa;
  oa.pairs = {{0, 1}};
  SmallProblemOptions ob;
  ob.pairs = {{2, 3}, {0, 1}};
  auto a = MakeSmallProblem(oa);
  auto b = MakeSmallProblem(ob);
  CenterModel(a.model, a.enc);
  CenterModel(b.model, b.enc);
  const auto ia = ComputeImportance(a.model, a.enc);
  const auto ib = ComputeImportance(b.model, b.enc);
  const auto total = ComputeImportance(EnsembleModel{{a.model, b.model}}, a.ds);
  ASSERT_EQ(total.pair_features, (std::vector<std::pair<int, int>>{{0, 1}, {2, 3}}));
  for (std::size_t k = 0; k < a.model.K(); ++k) {
    EXPECT_NEAR(total.pairs(0, k), 0.5 * (ia.pairs(0, k) + ib.pairs(1, k)), 1e-15);
    EXPECT_NEAR(total.pairs(1, k), 0.5 * ib.pairs(0, k), 1e-15);
    EXPECT_NEAR(total.mains(1, k), 0.5 * (ia.mains(1, k) + ib.mains(1, k)), 1e-15);
  }
}

// At the outermost evaluation times only a few percent of rows lie on one
// side of t, and the noise feature's fitted shape reaches the size of the
// weakest signal (f2). Per-time ranking is therefore checked on the central
// half of the time grid; the across-time mean covers every time.
TEST(ImportanceTest, NoiseFeatureRanksLast) {
  SyntheticSpec s;
  s.n = 5000;
  s.seed = 17;
  s.interaction = false;
  const auto data = Generate(s);
  TrainConfig c;
  c.ensemble_size = 1;
  c.seed = 17;
  c.threads = 1;
  const auto e = FitEnsemble(data.dataset, c);
  const auto imp = ComputeImportance(e, data.dataset);
  const std::size_t noise = 4;
  const std::size_t K = imp.mains.cols;
  for (std::size_t k = K / 4; k < 3 * K / 4; ++k) {
    for (std::size_t j = 0; j < noise; ++j) {
      EXPECT_GT(imp.mains(j, k), imp.mains(noise, k)) << "feature " << j << " time " << k;
    }
  }
  EXPECT_EQ(RankFeatures(imp).back(), 4);
}

double MedianHalfWidth(const EnsembleModel& e, std::size_t k) {
  std::vector<double> widths;
  for (std::size_t j = 0; j < e.front().p(); ++j) {
    const auto curve = ShapeFunction(e, j, k);
    for (std::size_t b = 0; b < curve.values.size(); ++b) {
      widths.push_back(curve.ci_upper[b] - curve.ci_lower[b]);
    }
  }
  std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
  return widths[widths.size() / 2];
}

TEST(ShapeFunctionTest, IntervalsNarrowWithMoreMembers) {
  SyntheticSpec s;
  s.n = 2000;
  s.seed = 6;
  const auto data = Generate(s);
  TrainConfig c;
  c.seed = 6;
  c.threads = 1;
  c.max_epochs = 30;
  c.model.n_times = 8;
  c.model.embedding_dim = 8;
  c.model.hidden = {16, 16};
  c.model.max_bins = 16;
  c.ensemble_size = 3;
  const auto small = FitEnsemble(data.dataset, c);
  c.ensemble_size = 10;
  const auto large = FitEnsemble(data.dataset, c);
  for (std::size_t k : {2u, 4u}) {
    EXPECT_LT(MedianHalfWidth(large, k), MedianHalfWidth(small, k)) << "time " << k;
  }
}

}  // namespace
}  // namespace dnamite
