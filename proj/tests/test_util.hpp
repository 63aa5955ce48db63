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

// Shared fixtures: small random problems and scratch directories.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dnamite/dnamite.hpp"

namespace dnamite::testing {

struct SmallProblem {
  SurvivalDataset ds;
  DnamiteModel model;
  EncodedRows enc;
  IpcwWeights weights;
  std::vector<std::size_t> rows;
};

struct SmallProblemOptions {
  std::size_t n = 60;
  std::size_t p = 4;
  int n_times = 8;
  int dim = 8;
  int hidden = 16;
  int max_bins = 8;
  double gamma = 1.0;
  int width = 2;
  double censor_probability = 0.3;
  double missing_probability = 0.05;
  std::vector<std::pair<int, int>> pairs;
  bool random_intercept = true;
  std::uint64_t seed = 7;
};

// Random data with missing values and censoring, and an untrained model
// whose biases and intercept are nonzero.
inline SmallProblem MakeSmallProblem(const SmallProblemOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  SmallProblem sp;
  sp.ds.features.resize(o.p);
  for (std::size_t j = 0; j < o.p; ++j) {
    sp.ds.features[j].name = "x" + std::to_string(j);
    sp.ds.features[j].kind = FeatureKind::kContinuous;
  }
  for (std::size_t i = 0; i < o.n; ++i) {
    for (std::size_t j = 0; j < o.p; ++j) {
      const double v = unit(rng);
      sp.ds.features[j].numeric.push_back(
          unit(rng) < o.missing_probability ? std::nullopt : std::optional<double>(v));
    }
    sp.ds.time.push_back(0.05 + expo(rng));
    sp.ds.event.push_back(unit(rng) < o.censor_probability ? 0 : 1);
  }
  sp.ds.event[0] = 1;
  ModelHyperparameters hp;
  hp.gamma = o.gamma;
  hp.kernel_width = o.width;
  hp.embedding_dim = o.dim;
  hp.hidden = {o.hidden, o.hidden};
  hp.n_times = o.n_times;
  hp.max_bins = o.max_bins;
  const auto bins = FitFeatureBins(sp.ds, o.max_bins);
  auto times = ChooseEvalTimes(sp.ds.time, sp.ds.event, o.n_times);
  sp.model = MakeModel(hp, sp.ds.feature_names(), bins, times,
                       CensorCurve(sp.ds.time, sp.ds.event), RawRanges(sp.ds), rng);
  AddPairs(sp.model, o.pairs, rng);
  std::normal_distribution<double> normal(0.0, 0.3);
  auto jitter = [&](Mlp& net) {
    for (auto& layer : net.layers) {
      for (double& b : layer.bias) b = normal(rng);
    }
  };
  for (auto& m : sp.model.mains) jitter(m.net);
  for (auto& q : sp.model.pairs) jitter(q.net);
  if (o.random_intercept) {
    for (double& b : sp.model.intercept) b = normal(rng);
  }
  sp.enc = Encode(sp.model, sp.ds);
  sp.weights = ComputeIpcwWeights(sp.ds.time, sp.model.censor_curve, sp.model.eval_times,
                                  hp.censor_floor);
  sp.rows.resize(o.n);
  for (std::size_t i = 0; i < o.n; ++i) sp.rows[i] = i;
  return sp;
}

struct GradientCheckResult {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Relative error is |a - f| / max(|a|, |f|, floor); the floor keeps
// parameters with (near-)zero gradient from dividing rounding noise by zero.
inline constexpr double kGradientFloor = 1e-6;

// Compares analytic gradients of the mean loss over sp.rows with central
// finite differences for `count` parameters drawn uniformly from the
// trainable blocks of `set`. With several steps a parameter's error is the
// smallest over them: large steps can straddle a ReLU kink and small steps
// lose digits to rounding, while a wrong gradient disagrees at every step.
inline GradientCheckResult CheckGradients(SmallProblem& sp, TrainableSet set,
                                          std::size_t count,
                                          const std::vector<double>& steps,
                                          std::uint64_t seed) {
  const auto analytic = ComputeLossAndGradients(sp.model, sp.enc, sp.rows, sp.ds.time,
                                                sp.ds.event, sp.weights, set);
  std::vector<std::pair<double*, double>> params;
  ForEachParameterBlock(sp.model, analytic.grads, set,
                        [&](std::vector<double>& p, const std::vector<double>& g) {
                          for (std::size_t i = 0; i < p.size(); ++i) {
                            params.emplace_back(&p[i], g[i]);
                          }
                        });
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
  auto loss = [&] {
    return ComputeLoss(sp.model, sp.enc, sp.rows, sp.ds.time, sp.ds.event, sp.weights);
  };
  GradientCheckResult result;
  for (std::size_t c = 0; c < count; ++c) {
    auto& [ptr, grad] = params[pick(rng)];
    const double saved = *ptr;
    double best_rel = std::numeric_limits<double>::infinity();
    double best_numeric = 0.0;
    for (double h : steps) {
      *ptr = saved + h;
      const double up = loss();
      *ptr = saved - h;
      const double down = loss();
      *ptr = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(grad), std::abs(numeric), kGradientFloor});
      const double rel = std::abs(grad - numeric) / denom;
      if (rel < best_rel) {
        best_rel = rel;
        best_numeric = numeric;
      }
    }
    if (best_rel >= result.max_relative_error) {
      result.max_relative_error = best_rel;
      result.worst_analytic = grad;
      result.worst_numeric = best_numeric;
    }
    ++result.checked;
  }
  return result;
}

inline GradientCheckResult CheckGradients(SmallProblem& sp, TrainableSet set,
                                          std::size_t count, double h,
                                          std::uint64_t seed) {
  return CheckGradients(sp, set, count, std::vector<double>{h}, seed);
}

// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dnamite_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace dnamite::testing
