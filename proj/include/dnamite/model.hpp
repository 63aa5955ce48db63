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

// The additive survival model. For K evaluation times t_1 < ... < t_K,
//
//   logit P(T <= t_k | x) = b0_k + sum_j f_j(x_j)_k + sum_(j,l) f_jl(x_j, x_l)_k
//
// where every shape function is an MLP applied to a kernel-smoothed bin
// embedding (pairs use the concatenation of two embeddings).
//
// A shape function only depends on its input bins, so batches are evaluated
// once per distinct bin (or bin pair) present in the batch and scattered back
// to the rows. Gradients are gathered the same way before backpropagation.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dnamite/binning.hpp"
#include "dnamite/common.hpp"
#include "dnamite/dataset.hpp"
#include "dnamite/embedding.hpp"
#include "dnamite/mlp.hpp"
#include "dnamite/survstats.hpp"

namespace dnamite {

struct ModelHyperparameters {
  double gamma = kDefaultGamma;
  int kernel_width = kDefaultKernelWidth;
  int embedding_dim = kDefaultEmbeddingDim;
  std::vector<int> hidden = {32, 32};
  int n_times = 32;
  int max_bins = kDefaultMaxBins;
  // Continuous features bypass binning and feed their min-max scaled value
  // straight into the MLP (neural additive model baseline).
  bool nam_mode = false;
  double censor_floor = kDefaultCensorFloor;

  bool operator==(const ModelHyperparameters&) const = default;
};

struct MainTerm {
  EmbeddingTable table;  // empty when the term takes raw input
  Mlp net;
  std::vector<double> offset;  // centering offset, one entry per time
  bool raw_input = false;
  double raw_lo = 0.0;  // min-max scaling for raw input
  double raw_hi = 1.0;

  bool operator==(const MainTerm&) const = default;
};

struct PairTerm {
  int first = 0;
  int second = 0;
  EmbeddingTable table_first;
  EmbeddingTable table_second;
  Mlp net;
  std::vector<double> offset;

  bool operator==(const PairTerm&) const = default;
};

struct DnamiteModel {
  ModelHyperparameters hp;
  std::vector<std::string> feature_names;
  std::vector<BinSpec> bins;
  std::vector<double> eval_times;
  StepCurve censor_curve;
  std::vector<MainTerm> mains;
  std::vector<PairTerm> pairs;
  std::vector<double> intercept;
  bool centered = false;

  std::size_t p() const { return bins.size(); }
  std::size_t K() const { return eval_times.size(); }

  bool operator==(const DnamiteModel&) const = default;

  void Validate() const {
    Require(!eval_times.empty(), "model: no evaluation times");
    for (std::size_t k = 0; k < eval_times.size(); ++k) {
      Require(std::isfinite(eval_times[k]) && eval_times[k] > 0,
              "model: evaluation times must be positive");
      if (k > 0) {
        Require(eval_times[k - 1] < eval_times[k],
                "model: evaluation times must be strictly increasing");
      }
    }
    Require(feature_names.size() == bins.size(),
            "model: feature name count does not match bin spec count");
    Require(mains.size() == bins.size(),
            "model: one main term is required per feature");
    Require(intercept.size() == K(), "model: intercept length must equal K");
    censor_curve.Validate("model censor curve");
    for (std::size_t j = 0; j < bins.size(); ++j) {
      const std::string where = "main term " + std::to_string(j);
      bins[j].Validate();
      const auto& m = mains[j];
      Require(m.offset.size() == K(), where + ": offset length must equal K");
      if (m.raw_input) {
        Require(bins[j].kind == FeatureKind::kContinuous,
                where + ": raw input requires a continuous feature");
        m.net.Validate(where, 1, K());
      } else {
        m.table.Validate(where);
        Require(m.table.n_bins() == bins[j].n_bins,
                where + ": embedding rows must equal n_bins + 1");
        m.net.Validate(where, m.table.weights.cols, K());
      }
    }
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const std::string where = "pair term " + std::to_string(q);
      const auto& pr = pairs[q];
      Require(pr.first >= 0 && pr.second >= 0 &&
                  static_cast<std::size_t>(pr.first) < p() &&
                  static_cast<std::size_t>(pr.second) < p() &&
                  pr.first != pr.second,
              where + ": invalid feature indices");
      pr.table_first.Validate(where);
      pr.table_second.Validate(where);
      Require(pr.table_first.n_bins() == bins[pr.first].n_bins &&
                  pr.table_second.n_bins() == bins[pr.second].n_bins,
              where + ": embedding rows must equal n_bins + 1");
      pr.net.Validate(where,
                      pr.table_first.weights.cols + pr.table_second.weights.cols,
                      K());
      Require(pr.offset.size() == K(), where + ": offset length must equal K");
    }
  }
};

// Builds an untrained model with main terms only. `raw_ranges` supplies the
// (min, max) of each continuous feature for nam mode and is ignored
// otherwise.
template <typename Rng>
DnamiteModel MakeModel(const ModelHyperparameters& hp,
                       std::vector<std::string> feature_names,
                       std::vector<BinSpec> bins, std::vector<double> eval_times,
                       StepCurve censor_curve,
                       const std::vector<std::pair<double, double>>& raw_ranges,
                       Rng& rng) {
  DnamiteModel model;
  model.hp = hp;
  model.feature_names = std::move(feature_names);
  model.bins = std::move(bins);
  model.eval_times = std::move(eval_times);
  model.censor_curve = std::move(censor_curve);
  const std::size_t K = model.eval_times.size();
  model.intercept.assign(K, 0.0);
  for (std::size_t j = 0; j < model.bins.size(); ++j) {
    MainTerm term;
    term.offset.assign(K, 0.0);
    if (hp.nam_mode && model.bins[j].kind == FeatureKind::kContinuous) {
      term.raw_input = true;
      if (j < raw_ranges.size()) {
        term.raw_lo = raw_ranges[j].first;
        term.raw_hi = raw_ranges[j].second;
      }
      term.net = MakeMlp(1, hp.hidden, K, rng);
    } else {
      term.table = MakeEmbeddingTable(model.bins[j].n_bins, hp.embedding_dim,
                                      hp.gamma, hp.kernel_width, rng);
      term.net = MakeMlp(static_cast<std::size_t>(hp.embedding_dim), hp.hidden,
                         K, rng);
    }
    model.mains.push_back(std::move(term));
  }
  model.Validate();
  return model;
}

// Adds pair terms. Pair embedding tables start as copies of the main-effect
// tables of the two features when those exist.
template <typename Rng>
void AddPairs(DnamiteModel& model, const std::vector<std::pair<int, int>>& pairs,
              Rng& rng) {
  const auto& hp = model.hp;
  for (const auto& [a, b] : pairs) {
    Require(a >= 0 && b >= 0 && static_cast<std::size_t>(a) < model.p() &&
                static_cast<std::size_t>(b) < model.p() && a != b,
            "pairs: invalid feature pair");
    PairTerm term;
    term.first = a;
    term.second = b;
    auto table_for = [&](int j) {
      const auto& main = model.mains[static_cast<std::size_t>(j)];
      if (!main.raw_input) return main.table;
      return MakeEmbeddingTable(model.bins[static_cast<std::size_t>(j)].n_bins,
                                hp.embedding_dim, hp.gamma, hp.kernel_width, rng);
    };
    term.table_first = table_for(a);
    term.table_second = table_for(b);
    term.net = MakeMlp(term.table_first.weights.cols + term.table_second.weights.cols,
                       hp.hidden, model.K(), rng);
    term.offset.assign(model.K(), 0.0);
    model.pairs.push_back(std::move(term));
  }
  model.centered = false;
}

// Rows encoded for one model: bin index per feature, plus the scaled raw
// value for raw-input features. Stored feature-major.
struct EncodedRows {
  std::size_t n = 0;
  std::vector<std::vector<int>> bins;
  std::vector<std::vector<double>> raw;
};

inline double ScaleRaw(const MainTerm& term, std::optional<double> value) {
  if (!value.has_value() || std::isnan(*value)) return 0.0;
  const double span = term.raw_hi - term.raw_lo;
  if (!(span > 0)) return 0.0;
  return (*value - term.raw_lo) / span;
}

inline EncodedRows Encode(const DnamiteModel& model, const SurvivalDataset& ds) {
  if (ds.p() != model.p()) {
    throw InvalidArgument("encode: dataset has " + std::to_string(ds.p()) +
                          " features, model expects " + std::to_string(model.p()));
  }
  EncodedRows enc;
  enc.n = ds.n();
  enc.bins.resize(model.p());
  enc.raw.resize(model.p());
  for (std::size_t j = 0; j < model.p(); ++j) {
    const auto& col = ds.features[j];
    const auto& spec = model.bins[j];
    if (col.kind != spec.kind) {
      throw InvalidArgument("encode: feature '" + col.name + "' kind mismatch");
    }
    auto& out = enc.bins[j];
    out.resize(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (spec.kind == FeatureKind::kContinuous) {
        out[i] = ApplyBins(col.numeric[i], spec);
      } else {
        const auto& v = col.text[i];
        out[i] = ApplyBins(v ? std::optional<std::string_view>(*v) : std::nullopt,
                           spec);
      }
    }
    if (model.mains[j].raw_input) {
      auto& raw = enc.raw[j];
      raw.resize(ds.n());
      for (std::size_t i = 0; i < ds.n(); ++i) {
        raw[i] = ScaleRaw(model.mains[j], col.numeric[i]);
      }
    }
  }
  return enc;
}

// One raw feature value: missing, numeric or categorical.
using FeatureValue = std::variant<std::monostate, double, std::string>;

inline EncodedRows EncodeRow(const DnamiteModel& model,
                             std::span<const FeatureValue> row) {
  if (row.size() != model.p()) {
    throw InvalidArgument("forward: row has " + std::to_string(row.size()) +
                          " values, model expects " + std::to_string(model.p()));
  }
  EncodedRows enc;
  enc.n = 1;
  enc.bins.resize(model.p());
  enc.raw.resize(model.p());
  for (std::size_t j = 0; j < model.p(); ++j) {
    const auto& spec = model.bins[j];
    const auto& v = row[j];
    std::optional<double> numeric;
    if (spec.kind == FeatureKind::kContinuous) {
      if (std::holds_alternative<std::string>(v)) {
        throw InvalidArgument("forward: feature " + std::to_string(j) +
                              " expects a number");
      }
      if (std::holds_alternative<double>(v)) numeric = std::get<double>(v);
      enc.bins[j].push_back(ApplyBins(numeric, spec));
    } else {
      if (std::holds_alternative<double>(v)) {
        throw InvalidArgument("forward: feature " + std::to_string(j) +
                              " expects a category");
      }
      std::optional<std::string_view> level;
      if (std::holds_alternative<std::string>(v)) level = std::get<std::string>(v);
      enc.bins[j].push_back(ApplyBins(level, spec));
    }
    if (model.mains[j].raw_input) {
      enc.raw[j].push_back(ScaleRaw(model.mains[j], numeric));
    }
  }
  return enc;
}

// Identifies one shape function: main effect j, or pair index q.
struct TermRef {
  enum class Kind { kMain, kPair };
  Kind kind = Kind::kMain;
  std::size_t index = 0;
};

namespace internal {

// Network evaluation for the distinct inputs of one term over a set of rows.
struct TermEval {
  std::vector<std::uint32_t> slot;  // row -> distinct input
  std::vector<int> bin_first;       // distinct input -> bin (first feature)
  std::vector<int> bin_second;      // distinct input -> bin (pairs only)
  MlpTrace trace;
};

inline TermEval EvalMain(const DnamiteModel& model, std::size_t j,
                         const EncodedRows& enc, std::span<const std::size_t> rows) {
  const MainTerm& term = model.mains[j];
  TermEval ev;
  ev.slot.resize(rows.size());
  if (term.raw_input) {
    Matrix input(rows.size(), 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      ev.slot[r] = static_cast<std::uint32_t>(r);
      input(r, 0) = enc.raw[j][rows[r]];
    }
    ev.trace = MlpForward(term.net, std::move(input));
    return ev;
  }
  const int n_bins = term.table.n_bins();
  std::vector<int> slot_of_bin(static_cast<std::size_t>(n_bins) + 1, -1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int b = enc.bins[j][rows[r]];
    auto& s = slot_of_bin[static_cast<std::size_t>(b)];
    if (s < 0) {
      s = static_cast<int>(ev.bin_first.size());
      ev.bin_first.push_back(b);
    }
    ev.slot[r] = static_cast<std::uint32_t>(s);
  }
  const auto kernel = KernelWeights(term.table.gamma, term.table.width);
  Matrix input(ev.bin_first.size(), term.table.weights.cols);
  for (std::size_t u = 0; u < ev.bin_first.size(); ++u) {
    EmbedFeatureInto(ev.bin_first[u], term.table, kernel, input.row(u));
  }
  ev.trace = MlpForward(term.net, std::move(input));
  return ev;
}

inline TermEval EvalPair(const DnamiteModel& model, std::size_t q,
                         const EncodedRows& enc, std::span<const std::size_t> rows) {
  const PairTerm& term = model.pairs[q];
  const auto a = static_cast<std::size_t>(term.first);
  const auto b = static_cast<std::size_t>(term.second);
  const std::size_t stride = static_cast<std::size_t>(term.table_second.n_bins()) + 1;
  std::vector<int> slot_of_key(
      (static_cast<std::size_t>(term.table_first.n_bins()) + 1) * stride, -1);
  TermEval ev;
  ev.slot.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int ba = enc.bins[a][rows[r]];
    const int bb = enc.bins[b][rows[r]];
    auto& s = slot_of_key[static_cast<std::size_t>(ba) * stride +
                          static_cast<std::size_t>(bb)];
    if (s < 0) {
      s = static_cast<int>(ev.bin_first.size());
      ev.bin_first.push_back(ba);
      ev.bin_second.push_back(bb);
    }
    ev.slot[r] = static_cast<std::uint32_t>(s);
  }
  const auto kernel_a = KernelWeights(term.table_first.gamma, term.table_first.width);
  const auto kernel_b = KernelWeights(term.table_second.gamma, term.table_second.width);
  const std::size_t da = term.table_first.weights.cols;
  Matrix input(ev.bin_first.size(), da + term.table_second.weights.cols);
  for (std::size_t u = 0; u < ev.bin_first.size(); ++u) {
    auto row = input.row(u);
    EmbedFeatureInto(ev.bin_first[u], term.table_first, kernel_a, row.first(da));
    EmbedFeatureInto(ev.bin_second[u], term.table_second, kernel_b, row.subspan(da));
  }
  ev.trace = MlpForward(term.net, std::move(input));
  return ev;
}

inline TermEval EvalTerm(const DnamiteModel& model, TermRef ref,
                         const EncodedRows& enc, std::span<const std::size_t> rows) {
  return ref.kind == TermRef::Kind::kMain ? EvalMain(model, ref.index, enc, rows)
                                          : EvalPair(model, ref.index, enc, rows);
}

inline const std::vector<double>& TermOffset(const DnamiteModel& model, TermRef ref) {
  return ref.kind == TermRef::Kind::kMain ? model.mains[ref.index].offset
                                          : model.pairs[ref.index].offset;
}

inline std::vector<TermRef> AllTerms(const DnamiteModel& model) {
  std::vector<TermRef> terms;
  for (std::size_t j = 0; j < model.mains.size(); ++j) {
    terms.push_back({TermRef::Kind::kMain, j});
  }
  for (std::size_t q = 0; q < model.pairs.size(); ++q) {
    terms.push_back({TermRef::Kind::kPair, q});
  }
  return terms;
}

inline std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace internal

// Centered contribution of one term for each of `rows` (rows x K).
inline Matrix TermContributions(const DnamiteModel& model, TermRef ref,
                                const EncodedRows& enc,
                                std::span<const std::size_t> rows) {
  const auto ev = internal::EvalTerm(model, ref, enc, rows);
  const auto& offset = internal::TermOffset(model, ref);
  const Matrix& out = ev.trace.output();
  Matrix result(rows.size(), model.K());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = out.row(ev.slot[r]);
    auto dst = result.row(r);
    for (std::size_t k = 0; k < model.K(); ++k) dst[k] = src[k] - offset[k];
  }
  return result;
}

inline Matrix TermContributions(const DnamiteModel& model, TermRef ref,
                                const EncodedRows& enc) {
  const auto rows = internal::AllRows(enc.n);
  return TermContributions(model, ref, enc, rows);
}

// Pre-sigmoid outputs (rows x K).
inline Matrix PredictLogits(const DnamiteModel& model, const EncodedRows& enc,
                            std::span<const std::size_t> rows) {
  const std::size_t K = model.K();
  Matrix logits(rows.size(), K);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(model.intercept.begin(), model.intercept.end(), logits.row(r).begin());
  }
  for (const auto ref : internal::AllTerms(model)) {
    const auto ev = internal::EvalTerm(model, ref, enc, rows);
    const auto& offset = internal::TermOffset(model, ref);
    const Matrix& out = ev.trace.output();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = out.row(ev.slot[r]);
      auto dst = logits.row(r);
      for (std::size_t k = 0; k < K; ++k) dst[k] += src[k] - offset[k];
    }
  }
  return logits;
}

inline Matrix PredictLogits(const DnamiteModel& model, const EncodedRows& enc) {
  const auto rows = internal::AllRows(enc.n);
  return PredictLogits(model, enc, rows);
}

inline Matrix SigmoidMatrix(Matrix m) {
  for (double& v : m.data) v = Sigmoid(v);
  return m;
}

// CIF estimates P(T <= t_k | x) for every row (n x K).
inline Matrix PredictCif(const DnamiteModel& model, const EncodedRows& enc) {
  return SigmoidMatrix(PredictLogits(model, enc));
}

inline Matrix PredictCif(const DnamiteModel& model, const SurvivalDataset& ds) {
  return PredictCif(model, Encode(model, ds));
}

struct Contribution {
  TermRef source;
  std::vector<double> logits;
};

struct ForwardResult {
  std::vector<Contribution> contributions;
  std::vector<double> logits;
  std::vector<double> cif;
};

// Single-row prediction with per-term contributions.
inline ForwardResult Forward(const DnamiteModel& model,
                             std::span<const FeatureValue> row) {
  const auto enc = EncodeRow(model, row);
  const std::size_t only_row[] = {0};
  ForwardResult result;
  result.logits = model.intercept;
  for (const auto ref : internal::AllTerms(model)) {
    const Matrix c = TermContributions(model, ref, enc, only_row);
    result.contributions.push_back({ref, std::vector<double>(c.data)});
    for (std::size_t k = 0; k < model.K(); ++k) result.logits[k] += c.data[k];
  }
  for (double v : result.logits) result.cif.push_back(Sigmoid(v));
  return result;
}

// Which parameter groups receive gradients.
struct TrainableSet {
  bool mains = true;
  bool pairs = false;
};

inline constexpr TrainableSet kMainsOnly{true, false};
inline constexpr TrainableSet kPairsOnly{false, true};

struct MainGradient {
  Matrix table;
  Mlp net;
};

struct PairGradient {
  Matrix table_first;
  Matrix table_second;
  Mlp net;
};

// Same layout as the trainable parameters of a model. Frozen groups hold
// zeros.
struct ModelGradients {
  std::vector<MainGradient> mains;
  std::vector<PairGradient> pairs;

  static ModelGradients ZerosLike(const DnamiteModel& model) {
    ModelGradients g;
    for (const auto& m : model.mains) {
      g.mains.push_back({Matrix(m.table.weights.rows, m.table.weights.cols),
                         m.net.ZerosLike()});
    }
    for (const auto& p : model.pairs) {
      g.pairs.push_back({Matrix(p.table_first.weights.rows, p.table_first.weights.cols),
                         Matrix(p.table_second.weights.rows,
                                p.table_second.weights.cols),
                         p.net.ZerosLike()});
    }
    return g;
  }
};

// Visits every parameter block of `model` selected by `set`, paired with
// the matching block of `grads`. Visiting order is fixed.
template <typename Fn>
void ForEachParameterBlock(DnamiteModel& model, const ModelGradients& grads,
                           TrainableSet set, Fn&& fn) {
  auto visit_net = [&](Mlp& net, const Mlp& g) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      fn(net.layers[l].weight.data, g.layers[l].weight.data);
      fn(net.layers[l].bias, g.layers[l].bias);
    }
  };
  if (set.mains) {
    for (std::size_t j = 0; j < model.mains.size(); ++j) {
      auto& m = model.mains[j];
      if (!m.raw_input) fn(m.table.weights.data, grads.mains[j].table.data);
      visit_net(m.net, grads.mains[j].net);
    }
  }
  if (set.pairs) {
    for (std::size_t q = 0; q < model.pairs.size(); ++q) {
      auto& p = model.pairs[q];
      fn(p.table_first.weights.data, grads.pairs[q].table_first.data);
      fn(p.table_second.weights.data, grads.pairs[q].table_second.data);
      visit_net(p.net, grads.pairs[q].net);
    }
  }
}

struct LossAndGradients {
  double loss = 0.0;
  ModelGradients grads;
};

// Mean IPCW loss over `rows` and its exact gradient with respect to every
// parameter group in `set`. `weights` must be computed for the same rows
// indexing as `time` / `event` (i.e. over all encoded rows).
inline LossAndGradients ComputeLossAndGradients(
    const DnamiteModel& model, const EncodedRows& enc,
    std::span<const std::size_t> rows, std::span<const double> time,
    std::span<const std::uint8_t> event, const IpcwWeights& weights,
    TrainableSet set) {
  Require(!rows.empty(), "loss_and_gradients: empty batch");
  const std::size_t K = model.K();
  const std::size_t m = rows.size();
  const auto terms = internal::AllTerms(model);

  std::vector<internal::TermEval> evals;
  evals.reserve(terms.size());
  Matrix logits(m, K);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy(model.intercept.begin(), model.intercept.end(), logits.row(r).begin());
  }
  for (const auto ref : terms) {
    evals.push_back(internal::EvalTerm(model, ref, enc, rows));
    const auto& ev = evals.back();
    const auto& offset = internal::TermOffset(model, ref);
    const Matrix& out = ev.trace.output();
    for (std::size_t r = 0; r < m; ++r) {
      const auto src = out.row(ev.slot[r]);
      auto dst = logits.row(r);
      for (std::size_t k = 0; k < K; ++k) dst[k] += src[k] - offset[k];
    }
  }

  LossAndGradients result;
  result.grads = ModelGradients::ZerosLike(model);
  Matrix grad_logits(m, K);
  std::vector<double> cif(K);
  std::vector<double> grad_cif(K);
  const double scale = 1.0 / static_cast<double>(m);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = rows[r];
    for (std::size_t k = 0; k < K; ++k) cif[k] = Sigmoid(logits(r, k));
    total += IpcwSampleTerm(cif, time[i], event[i] != 0, weights.event_weight[i],
                            weights.survivor_weight, model.eval_times, grad_cif);
    for (std::size_t k = 0; k < K; ++k) {
      grad_logits(r, k) = scale * grad_cif[k] * cif[k] * (1.0 - cif[k]);
    }
  }
  result.loss = total * scale;
  if (!std::isfinite(result.loss)) {
    throw DivergenceError("loss_and_gradients: non-finite loss");
  }

  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto ref = terms[t];
    const bool is_main = ref.kind == TermRef::Kind::kMain;
    if ((is_main && !set.mains) || (!is_main && !set.pairs)) continue;
    const auto& ev = evals[t];
    Matrix grad_out(ev.trace.output().rows, K);
    for (std::size_t r = 0; r < m; ++r) {
      auto dst = grad_out.row(ev.slot[r]);
      const auto src = grad_logits.row(r);
      for (std::size_t k = 0; k < K; ++k) dst[k] += src[k];
    }
    if (is_main) {
      const auto& term = model.mains[ref.index];
      auto& g = result.grads.mains[ref.index];
      const Matrix grad_in = MlpBackward(term.net, ev.trace, std::move(grad_out), g.net);
      if (term.raw_input) continue;
      const auto kernel = KernelWeights(term.table.gamma, term.table.width);
      for (std::size_t u = 0; u < ev.bin_first.size(); ++u) {
        AccumulateEmbeddingGradient(ev.bin_first[u], term.table, kernel,
                                    grad_in.row(u), g.table);
      }
    } else {
      const auto& term = model.pairs[ref.index];
      auto& g = result.grads.pairs[ref.index];
      const Matrix grad_in = MlpBackward(term.net, ev.trace, std::move(grad_out), g.net);
      const auto kernel_a = KernelWeights(term.table_first.gamma, term.table_first.width);
      const auto kernel_b =
          KernelWeights(term.table_second.gamma, term.table_second.width);
      const std::size_t da = term.table_first.weights.cols;
      for (std::size_t u = 0; u < ev.bin_first.size(); ++u) {
        const auto row = grad_in.row(u);
        AccumulateEmbeddingGradient(ev.bin_first[u], term.table_first, kernel_a,
                                    row.first(da), g.table_first);
        AccumulateEmbeddingGradient(ev.bin_second[u], term.table_second, kernel_b,
                                    row.subspan(da), g.table_second);
      }
    }
  }
  return result;
}

// Mean IPCW loss over `rows` without gradients.
inline double ComputeLoss(const DnamiteModel& model, const EncodedRows& enc,
                          std::span<const std::size_t> rows,
                          std::span<const double> time,
                          std::span<const std::uint8_t> event,
                          const IpcwWeights& weights) {
  Require(!rows.empty(), "loss: empty row set");
  const Matrix logits = PredictLogits(model, enc, rows);
  std::vector<double> cif(model.K());
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    for (std::size_t k = 0; k < model.K(); ++k) cif[k] = Sigmoid(logits(r, k));
    total += IpcwSampleTerm(cif, time[i], event[i] != 0, weights.event_weight[i],
                            weights.survivor_weight, model.eval_times);
  }
  return total / static_cast<double>(rows.size());
}

// Shifts every shape function to zero mean over `rows` and moves the shift
// into the intercept. Predictions are unchanged up to rounding.
inline void CenterModel(DnamiteModel& model, const EncodedRows& enc,
                        std::span<const std::size_t> rows) {
  Require(!rows.empty(), "center_model: empty row set");
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (const auto ref : internal::AllTerms(model)) {
    const Matrix c = TermContributions(model, ref, enc, rows);
    std::vector<double> mean(model.K(), 0.0);
    for (std::size_t r = 0; r < c.rows; ++r) {
      for (std::size_t k = 0; k < model.K(); ++k) mean[k] += c(r, k);
    }
    auto& offset = ref.kind == TermRef::Kind::kMain ? model.mains[ref.index].offset
                                                    : model.pairs[ref.index].offset;
    for (std::size_t k = 0; k < model.K(); ++k) {
      mean[k] *= inv_n;
      offset[k] += mean[k];
      model.intercept[k] += mean[k];
    }
  }
  model.centered = true;
}

inline void CenterModel(DnamiteModel& model, const EncodedRows& enc) {
  const auto rows = internal::AllRows(enc.n);
  CenterModel(model, enc, rows);
}

// Centered main-effect values at arbitrary raw feature values (m x K),
// routed through the model's own binning or raw scaling.
inline Matrix MainCurveAt(const DnamiteModel& model, std::size_t j,
                          std::span<const std::optional<double>> xs) {
  Require(j < model.p(), "main curve: feature index out of range");
  Require(model.bins[j].kind == FeatureKind::kContinuous,
          "main curve: feature is categorical");
  EncodedRows enc;
  enc.n = xs.size();
  enc.bins.resize(model.p());
  enc.raw.resize(model.p());
  for (const auto& x : xs) {
    enc.bins[j].push_back(ApplyBins(x, model.bins[j]));
    if (model.mains[j].raw_input) enc.raw[j].push_back(ScaleRaw(model.mains[j], x));
  }
  return TermContributions(model, {TermRef::Kind::kMain, j}, enc);
}

}  // namespace dnamite
