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

// Training protocol. Each ensemble member is fit as
//
//   split -> main effects (Adam + early stopping) -> freeze mains
//         -> pair selection -> interactions (Adam + early stopping)
//         -> centering on the member's training rows
//
// and the ensemble averages member CIFs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dnamite/adam.hpp"
#include "dnamite/binning.hpp"
#include "dnamite/dataset.hpp"
#include "dnamite/interpret.hpp"
#include "dnamite/model.hpp"
#include "dnamite/survstats.hpp"

namespace dnamite {

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 128;
  int max_epochs = 100;
  int patience = 5;
  double val_fraction = kDefaultValFraction;
  int n_pairs = 0;
  std::vector<std::pair<int, int>> pair_list;  // overrides n_pairs when set
  int ensemble_size = 5;
  std::uint64_t seed = 0;
  ModelHyperparameters model;
  int threads = 0;  // member parallelism; 0 = hardware concurrency

  bool operator==(const TrainConfig&) const = default;

  void Validate() const {
    Require(learning_rate > 0, "config: learning_rate must be > 0");
    Require(batch_size >= 1, "config: batch_size must be >= 1");
    Require(max_epochs >= 1, "config: max_epochs must be >= 1");
    Require(patience >= 1 && patience <= max_epochs,
            "config: patience must lie in [1, max_epochs]");
    Require(val_fraction > 0 && val_fraction < 1,
            "config: val_fraction must lie in (0, 1)");
    Require(n_pairs >= 0, "config: n_pairs must be >= 0");
    Require(ensemble_size >= 1, "config: ensemble_size must be >= 1");
    Require(model.gamma >= 0, "config: gamma must be >= 0");
    Require(model.kernel_width >= 0, "config: kernel width must be >= 0");
    Require(model.embedding_dim >= 1, "config: embedding dim must be >= 1");
    Require(model.n_times >= 1, "config: number of times must be >= 1");
    Require(model.max_bins >= 2, "config: max_bins must be >= 2");
    Require(model.censor_floor > 0 && model.censor_floor <= 1,
            "config: censor floor must lie in (0, 1]");
    for (int h : model.hidden) Require(h >= 1, "config: hidden widths must be >= 1");
  }
};

// Per-stage optimization record.
struct FitReport {
  std::vector<double> train_losses;  // mean batch loss per epoch
  std::vector<double> val_losses;
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based; 0 when no epoch improved
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t clamped_weights = 0;
};

struct MemberReport {
  FitReport mains;
  FitReport pairs;
  std::vector<std::pair<int, int>> selected_pairs;
};

// K times at quantiles i/(K+1) of the observed event times; duplicates and
// nonpositive values are dropped.
inline std::vector<double> ChooseEvalTimes(std::span<const double> time,
                                           std::span<const std::uint8_t> event,
                                           int n_times) {
  std::vector<double> event_times;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (event[i]) event_times.push_back(time[i]);
  }
  if (event_times.empty()) throw DataError("eval times: no events");
  std::sort(event_times.begin(), event_times.end());
  std::vector<double> out;
  for (int i = 1; i <= n_times; ++i) {
    const double t = QuantileSorted(
        event_times, static_cast<double>(i) / static_cast<double>(n_times + 1));
    if (t > 0 && (out.empty() || t > out.back())) out.push_back(t);
  }
  if (out.empty()) throw DataError("eval times: all event times are zero");
  return out;
}

inline std::vector<BinSpec> FitFeatureBins(const SurvivalDataset& ds, int max_bins) {
  std::vector<BinSpec> specs;
  for (const auto& col : ds.features) {
    try {
      specs.push_back(col.kind == FeatureKind::kContinuous
                          ? FitBins(col.numeric, max_bins)
                          : FitLevels(col.text));
    } catch (const Error& e) {
      throw DataError("feature '" + col.name + "': " + e.what());
    }
  }
  return specs;
}

inline std::vector<std::pair<double, double>> RawRanges(const SurvivalDataset& ds) {
  std::vector<std::pair<double, double>> ranges;
  for (const auto& col : ds.features) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (col.kind == FeatureKind::kContinuous) {
      for (const auto& v : col.numeric) {
        if (v && !std::isnan(*v)) {
          lo = std::min(lo, *v);
          hi = std::max(hi, *v);
        }
      }
    }
    if (!(lo <= hi)) lo = hi = 0.0;
    ranges.emplace_back(lo, hi);
  }
  return ranges;
}

// Data shared by all members: bins and times fit once on the full data.
struct SharedFit {
  std::vector<BinSpec> bins;
  std::vector<double> eval_times;
  std::vector<std::pair<double, double>> raw_ranges;
};

inline SharedFit FitShared(const SurvivalDataset& ds, const TrainConfig& config) {
  SharedFit shared;
  shared.bins = FitFeatureBins(ds, config.model.max_bins);
  shared.eval_times = ChooseEvalTimes(ds.time, ds.event, config.model.n_times);
  shared.raw_ranges = RawRanges(ds);
  return shared;
}

inline std::mt19937_64 MemberRng(std::uint64_t seed, std::uint64_t member) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(member)};
  return std::mt19937_64(seq);
}

// Mini-batch Adam on the training rows with early stopping on the
// validation rows. On return `model` holds the parameters of the epoch with
// the lowest validation loss.
inline FitReport RunOptimization(DnamiteModel& model, const EncodedRows& enc,
                                 std::span<const double> time,
                                 std::span<const std::uint8_t> event,
                                 const SplitIndices& split, const TrainConfig& config,
                                 TrainableSet set, std::mt19937_64& rng) {
  FitReport report;
  const IpcwWeights weights = ComputeIpcwWeights(
      time, model.censor_curve, model.eval_times, model.hp.censor_floor);
  report.clamped_weights = weights.clamped;
  Adam adam(AdamOptions{config.learning_rate});
  DnamiteModel best = model;
  int since_best = 0;
  std::vector<std::size_t> order = split.train;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      LossAndGradients lg;
      try {
        lg = ComputeLossAndGradients(model, enc, rows, time, event, weights, set);
      } catch (const DivergenceError&) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(n_batches + 1));
      }
      adam.BeginStep();
      ForEachParameterBlock(model, lg.grads, set,
                            [&](std::vector<double>& p, const std::vector<double>& g) {
                              adam.Update(p, g);
                            });
      train_total += lg.loss;
      ++n_batches;
    }
    const double val =
        ComputeLoss(model, enc, split.validation, time, event, weights);
    if (!std::isfinite(val)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            " (non-finite validation loss)");
    }
    report.train_losses.push_back(train_total / static_cast<double>(n_batches));
    report.val_losses.push_back(val);
    report.epochs_run = epoch;
    if (val < report.best_val_loss) {
      report.best_val_loss = val;
      report.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model = std::move(best);
  return report;
}

// Stage 1: main effects only.
inline FitReport FitMainEffects(DnamiteModel& model, const EncodedRows& enc,
                                const SurvivalDataset& ds, const SplitIndices& split,
                                const TrainConfig& config, std::mt19937_64& rng) {
  model.centered = false;
  return RunOptimization(model, enc, ds.time, ds.event, split, config, kMainsOnly, rng);
}

// The first k pairs, in lexicographic order over rank positions, among the
// top-ranked features. `ranking` lists feature indices by decreasing
// importance.
inline std::vector<std::pair<int, int>> PairsFromRanking(const std::vector<int>& ranking,
                                                         int k) {
  const auto p = static_cast<long>(ranking.size());
  if (k < 0 || static_cast<long>(k) > p * (p - 1) / 2) {
    throw InvalidArgument("select_pairs: k = " + std::to_string(k) +
                          " exceeds the number of feature pairs");
  }
  std::vector<std::pair<int, int>> pairs;
  if (k == 0) return pairs;
  // Smallest m with m(m-1)/2 >= k.
  std::size_t m = 2;
  while (m * (m - 1) / 2 < static_cast<std::size_t>(k)) ++m;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      pairs.emplace_back(ranking[a], ranking[b]);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
    auto pos = [&](int f) {
      return std::find(ranking.begin(), ranking.end(), f) - ranking.begin();
    };
    return std::make_pair(pos(x.first), pos(x.second)) <
           std::make_pair(pos(y.first), pos(y.second));
  });
  pairs.resize(static_cast<std::size_t>(k));
  return pairs;
}

// Features by decreasing across-time importance; ties keep index order.
inline std::vector<int> RankFeatures(const FeatureImportance& imp) {
  std::vector<int> ranking(imp.mains.rows);
  for (std::size_t j = 0; j < ranking.size(); ++j) ranking[j] = static_cast<int>(j);
  std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
    return imp.MainMean(static_cast<std::size_t>(a)) >
           imp.MainMean(static_cast<std::size_t>(b));
  });
  return ranking;
}

// Ranks features by main-effect importance over `enc` (after centering a
// copy of the model on the same rows) and enumerates pairs.
inline std::vector<std::pair<int, int>> SelectPairs(const DnamiteModel& model,
                                                    const EncodedRows& enc, int k) {
  const auto p = static_cast<long>(model.p());
  if (k < 0 || static_cast<long>(k) > p * (p - 1) / 2) {
    throw InvalidArgument("select_pairs: k = " + std::to_string(k) +
                          " exceeds the number of feature pairs");
  }
  if (k == 0) return {};
  DnamiteModel centered = model;
  centered.pairs.clear();
  CenterModel(centered, enc);
  return PairsFromRanking(RankFeatures(ComputeImportance(centered, enc)), k);
}

// Stage 2: adds `pairs` (tables warm-started from the frozen mains) and
// trains only the pair parameters.
inline FitReport FitInteractions(DnamiteModel& model,
                                 const std::vector<std::pair<int, int>>& pairs,
                                 const EncodedRows& enc, const SurvivalDataset& ds,
                                 const SplitIndices& split, const TrainConfig& config,
                                 std::mt19937_64& rng) {
  if (pairs.empty()) return {};
  AddPairs(model, pairs, rng);
  return RunOptimization(model, enc, ds.time, ds.event, split, config, kPairsOnly, rng);
}

// One full member fit on a given split.
inline DnamiteModel FitMember(const SurvivalDataset& ds, const SharedFit& shared,
                              const TrainConfig& config,
                              const SplitIndices& split, std::mt19937_64& rng,
                              MemberReport* report = nullptr) {
  std::vector<double> train_time;
  std::vector<std::uint8_t> train_event;
  for (auto i : split.train) {
    train_time.push_back(ds.time[i]);
    train_event.push_back(ds.event[i]);
  }
  DnamiteModel model =
      MakeModel(config.model, ds.feature_names(), shared.bins, shared.eval_times,
                CensorCurve(train_time, train_event), shared.raw_ranges, rng);
  const EncodedRows enc_full = Encode(model, ds);
  MemberReport local;
  local.mains = FitMainEffects(model, enc_full, ds, split, config, rng);
  if (!config.pair_list.empty()) {
    local.selected_pairs = config.pair_list;
  } else if (config.n_pairs > 0) {
    local.selected_pairs = SelectPairs(model, enc_full, config.n_pairs);
  }
  local.pairs =
      FitInteractions(model, local.selected_pairs, enc_full, ds, split, config, rng);
  CenterModel(model, enc_full, split.train);
  if (report) *report = std::move(local);
  return model;
}

inline int ResolveThreads(int requested) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("DNAMITE_THREADS")) threads = std::atoi(env);
  }
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(threads, 1);
}

// B members, each on its own seeded split. Members are independent and may
// run on separate threads; results do not depend on the thread count.
inline EnsembleModel FitEnsemble(const SurvivalDataset& ds, const TrainConfig& config,
                                 std::vector<MemberReport>* reports = nullptr) {
  config.Validate();
  ds.Validate();
  const SharedFit shared = FitShared(ds, config);
  const auto B = static_cast<std::size_t>(config.ensemble_size);
  EnsembleModel ensemble;
  ensemble.members.resize(B);
  std::vector<MemberReport> local(B);
  std::vector<std::exception_ptr> errors(B);

  auto fit_one = [&](std::size_t b) {
    try {
      auto rng = MemberRng(config.seed, b);
      const SplitIndices split = Split(ds, config.val_fraction, config.seed + b);
      ensemble.members[b] = FitMember(ds, shared, config, split, rng, &local[b]);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };

  const auto threads = static_cast<std::size_t>(ResolveThreads(config.threads));
  if (threads <= 1 || B == 1) {
    for (std::size_t b = 0; b < B; ++b) fit_one(b);
  } else {
    for (std::size_t start = 0; start < B; start += threads) {
      std::vector<std::thread> pool;
      for (std::size_t b = start; b < std::min(B, start + threads); ++b) {
        pool.emplace_back(fit_one, b);
      }
      for (auto& t : pool) t.join();
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    if (!errors[b]) continue;
    try {
      std::rethrow_exception(errors[b]);
    } catch (const std::exception& e) {
      throw Error("ensemble member " + std::to_string(b) + " failed: " + e.what());
    }
  }
  if (reports) *reports = std::move(local);
  return ensemble;
}

}  // namespace dnamite
