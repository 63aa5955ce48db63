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

// Command-line front end. Run() returns the process exit code: 0 on success,
// 1 on a runtime failure, 2 on a usage error. Failures print exactly one
// line, "error: <message>", to the error stream.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dnamite/common.hpp"
#include "dnamite/config.hpp"
#include "dnamite/dataset.hpp"
#include "dnamite/interpret.hpp"
#include "dnamite/metrics.hpp"
#include "dnamite/persist.hpp"
#include "dnamite/synthgen.hpp"
#include "dnamite/train.hpp"

namespace dnamite::cli {

inline constexpr std::size_t kTruthGridSize = 1000;

namespace internal {

using Json = nlohmann::json;

inline std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

inline std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = Trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// A feature given by name or by 0-based index.
inline std::size_t ResolveFeature(const std::vector<std::string>& names,
                                  const std::string& token) {
  const auto it = std::find(names.begin(), names.end(), token);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  std::size_t index = 0;
  const auto r = std::from_chars(token.data(), token.data() + token.size(), index);
  if (!token.empty() && r.ec == std::errc() && r.ptr == token.data() + token.size() &&
      index < names.size()) {
    return index;
  }
  throw InvalidArgument("unknown feature '" + token + "'");
}

inline std::pair<int, int> ResolvePair(const std::vector<std::string>& names,
                                       const std::string& token) {
  const auto colon = token.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("pair '" + token + "' must have the form j:l");
  }
  return {static_cast<int>(ResolveFeature(names, token.substr(0, colon))),
          static_cast<int>(ResolveFeature(names, token.substr(colon + 1)))};
}

inline std::vector<std::size_t> ResolveTimes(const DnamiteModel& model,
                                             const std::string& spec) {
  std::vector<std::size_t> out;
  if (spec == "all") {
    for (std::size_t k = 0; k < model.K(); ++k) out.push_back(k);
    return out;
  }
  for (const auto& item : SplitList(spec)) {
    std::size_t k = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), k);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size() || k >= model.K()) {
      throw InvalidArgument("time index '" + item + "' must be 'all' or lie in [0, " +
                            std::to_string(model.K() - 1) + "]");
    }
    out.push_back(k);
  }
  if (out.empty()) throw InvalidArgument("no time index given");
  return out;
}

inline std::vector<FeatureKind> ModelKinds(const DnamiteModel& model) {
  std::vector<FeatureKind> kinds;
  for (const auto& spec : model.bins) kinds.push_back(spec.kind);
  return kinds;
}

inline std::string FormatEdge(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return FormatDouble(v);
}

inline std::string FileStem(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

// Step plot of a main-effect curve with its interval band.
inline std::string RenderStepSvg(const ShapeCurve& curve, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 400, kMargin = 50;
  const std::size_t n = curve.values.size();
  double lo = std::min(0.0, *std::min_element(curve.ci_lower.begin(), curve.ci_lower.end()));
  double hi = std::max(0.0, *std::max_element(curve.ci_upper.begin(), curve.ci_upper.end()));
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double step = (kWidth - 2 * kMargin) / static_cast<double>(n);
  auto y = [&](double v) {
    return kHeight - kMargin - (v - lo) / (hi - lo) * (kHeight - 2 * kMargin);
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n"
      << "<line x1=\"" << kMargin << "\" x2=\"" << kWidth - kMargin << "\" y1=\"" << y(0.0)
      << "\" y2=\"" << y(0.0) << "\" stroke=\"#999\" stroke-dasharray=\"4\"/>\n";
  for (std::size_t b = 0; b < n; ++b) {
    const double x0 = kMargin + step * static_cast<double>(b);
    svg << "<rect x=\"" << x0 << "\" y=\"" << y(curve.ci_upper[b]) << "\" width=\"" << step
        << "\" height=\"" << y(curve.ci_lower[b]) - y(curve.ci_upper[b])
        << "\" fill=\"#9ecae1\" fill-opacity=\"0.5\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
  for (std::size_t b = 0; b < n; ++b) {
    const double x0 = kMargin + step * static_cast<double>(b);
    svg << x0 << ',' << y(curve.values[b]) << ' ' << x0 + step << ',' << y(curve.values[b])
        << ' ';
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

inline void WriteMainCurveCsv(const ShapeCurve& curve, std::ostream& out) {
  out << "bin,lower,upper,level,value,ci_lower,ci_upper\n";
  out << "0,,,," << FormatDouble(curve.missing_value) << ','
      << FormatDouble(curve.missing_ci_lower) << ',' << FormatDouble(curve.missing_ci_upper)
      << '\n';
  for (std::size_t b = 0; b < curve.values.size(); ++b) {
    out << curve.bin_first[b] << ',';
    if (curve.labels.empty()) {
      out << FormatEdge(curve.lower[b]) << ',' << FormatEdge(curve.upper[b]) << ",,";
    } else {
      out << ",," << dnamite::internal::QuoteIfNeeded(curve.labels[b]) << ',';
    }
    out << FormatDouble(curve.values[b]) << ',' << FormatDouble(curve.ci_lower[b]) << ','
        << FormatDouble(curve.ci_upper[b]) << '\n';
  }
}

inline void WritePairCurveCsv(const ShapeCurve& curve, std::ostream& out) {
  out << "bin_first,bin_second,value,ci_lower,ci_upper\n";
  for (std::size_t r = 0; r < curve.values.size(); ++r) {
    out << curve.bin_first[r] << ',' << curve.bin_second[r] << ','
        << FormatDouble(curve.values[r]) << ',' << FormatDouble(curve.ci_lower[r]) << ','
        << FormatDouble(curve.ci_upper[r]) << '\n';
  }
}

// Options of `fit`; each flag only overrides the configuration when given.
struct FitFlags {
  std::string data, out, config_file, time_col = "time", event_col = "event";
  std::string categorical, pair_list;
  TrainConfig config;
  int hidden_dim = 32;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> overrides;
};

}  // namespace internal

inline int Simulate(const SyntheticSpec& spec, const std::string& out_path) {
  const SyntheticData data = Generate(spec);
  SaveCsv(data.dataset, out_path);

  internal::Json truth;
  const auto grid = UniformGrid(kTruthGridSize);
  truth["grid"] = grid;
  for (int f = 1; f <= kSignalFeatures; ++f) {
    std::vector<double> curve, main_effect;
    for (double x : grid) {
      curve.push_back(spec.signal_scale * TrueFeatureFn(f, x));
      main_effect.push_back(TrueMainEffectFn(f, x, spec));
    }
    const std::string name = "f" + std::to_string(f);
    truth["feature_functions"][name] = curve;
    truth["main_effects"][name] = main_effect;
  }
  truth["interaction"] = {{"enabled", spec.interaction},
                          {"features", {"f1", "f2"}},
                          {"thresholds", {spec.threshold_first, spec.threshold_second}},
                          {"weights", spec.weights}};
  truth["horizon"] = spec.horizon;
  truth["t_max"] = spec.t_max;
  truth["noise_sd"] = spec.noise_sd;
  truth["censor_rate"] = spec.censor_rate;
  truth["seed"] = spec.seed;
  truth["risk"] = data.risk;
  truth["probability"] = data.probability;
  internal::OpenOutput(out_path + ".truth.json") << truth.dump(1) << '\n';
  return 0;
}

inline int Fit(const internal::FitFlags& flags) {
  TrainConfig config =
      flags.config_file.empty() ? TrainConfig{} : LoadConfig(flags.config_file);
  for (const auto& [option, apply] : flags.overrides) {
    if (option->count() > 0) apply(config);
  }
  CsvSchema schema;
  schema.time_col = flags.time_col;
  schema.event_col = flags.event_col;
  schema.categorical = internal::SplitList(flags.categorical);
  const SurvivalDataset ds = LoadCsv(flags.data, schema);
  if (!flags.pair_list.empty()) {
    config.pair_list.clear();
    for (const auto& item : internal::SplitList(flags.pair_list)) {
      config.pair_list.push_back(internal::ResolvePair(ds.feature_names(), item));
    }
  }
  config.Validate();
  std::vector<MemberReport> reports;
  const EnsembleModel ensemble = FitEnsemble(ds, config, &reports);
  SaveModel(ensemble, flags.out);
  for (std::size_t b = 0; b < reports.size(); ++b) {
    const auto& r = reports[b];
    std::cout << "member " << b << ": main epochs " << r.mains.epochs_run << " (best "
              << r.mains.best_epoch << ", val " << FormatDouble(r.mains.best_val_loss)
              << "), pairs " << r.selected_pairs.size();
    if (!r.selected_pairs.empty()) {
      std::cout << " epochs " << r.pairs.epochs_run << " (best " << r.pairs.best_epoch
                << ", val " << FormatDouble(r.pairs.best_val_loss) << ")";
    }
    if (r.mains.clamped_weights > 0) {
      std::cout << ", clamped censoring weights " << r.mains.clamped_weights;
    }
    std::cout << '\n';
  }
  return 0;
}

inline SurvivalDataset LoadForModel(const EnsembleModel& ensemble, const std::string& path,
                                    const std::string& time_col = "",
                                    const std::string& event_col = "") {
  const auto& m = ensemble.front();
  return LoadFeatureCsv(path, m.feature_names, internal::ModelKinds(m), time_col, event_col);
}

inline int Predict(const std::string& model_path, const std::string& data_path,
                   const std::string& times, const std::string& out_path) {
  const EnsembleModel ensemble = LoadModel(model_path);
  const auto ks = internal::ResolveTimes(ensemble.front(), times);
  const SurvivalDataset ds = LoadForModel(ensemble, data_path);
  const Matrix cif = PredictCif(ensemble, ds);
  auto out = internal::OpenOutput(out_path);
  out << "row";
  for (auto k : ks) out << ",cif_" << k;
  out << '\n';
  for (std::size_t i = 0; i < cif.rows; ++i) {
    out << i;
    for (auto k : ks) out << ',' << FormatDouble(cif(i, k));
    out << '\n';
  }
  return 0;
}

struct ExplainRequest {
  std::string model_path;
  std::vector<std::string> features;
  std::vector<std::string> pairs;
  std::string times = "all";
  std::string out_dir;
  std::string data_path;
  bool svg = false;
};

inline int Explain(const ExplainRequest& req) {
  const EnsembleModel ensemble = LoadModel(req.model_path);
  const auto& m = ensemble.front();
  const auto ks = internal::ResolveTimes(m, req.times);
  std::filesystem::create_directories(req.out_dir);
  const std::filesystem::path dir(req.out_dir);
  for (const auto& token : req.features) {
    const std::size_t j = internal::ResolveFeature(m.feature_names, token);
    const std::string stem = internal::FileStem(m.feature_names[j]);
    for (auto k : ks) {
      const ShapeCurve curve = ShapeFunction(ensemble, j, k);
      const std::string base = stem + "_t" + std::to_string(k);
      auto out = internal::OpenOutput((dir / (base + ".csv")).string());
      internal::WriteMainCurveCsv(curve, out);
      if (req.svg) {
        internal::OpenOutput((dir / (base + ".svg")).string())
            << internal::RenderStepSvg(curve, m.feature_names[j] + " at t = " +
                                                  FormatDouble(m.eval_times[k]));
      }
    }
  }
  for (const auto& token : req.pairs) {
    auto [a, b] = internal::ResolvePair(m.feature_names, token);
    bool stored = false;
    for (const auto& pr : m.pairs) stored = stored || (pr.first == a && pr.second == b);
    if (!stored) std::swap(a, b);
    const std::string stem =
        internal::FileStem(m.feature_names[static_cast<std::size_t>(a)]) + "__" +
        internal::FileStem(m.feature_names[static_cast<std::size_t>(b)]);
    for (auto k : ks) {
      const ShapeCurve curve = PairShapeFunction(ensemble, a, b, k);
      auto out = internal::OpenOutput((dir / (stem + "_t" + std::to_string(k) + ".csv")).string());
      internal::WritePairCurveCsv(curve, out);
    }
  }
  if (!req.data_path.empty()) {
    const SurvivalDataset ds = LoadForModel(ensemble, req.data_path);
    const FeatureImportance imp = ComputeImportance(ensemble, ds);
    auto out = internal::OpenOutput((dir / "importance.csv").string());
    out << "term,kind,mean";
    for (std::size_t k = 0; k < m.K(); ++k) out << ",t" << k;
    out << '\n';
    for (std::size_t j = 0; j < m.p(); ++j) {
      out << dnamite::internal::QuoteIfNeeded(m.feature_names[j]) << ",main,"
          << FormatDouble(imp.MainMean(j));
      for (std::size_t k = 0; k < m.K(); ++k) out << ',' << FormatDouble(imp.mains(j, k));
      out << '\n';
    }
    for (std::size_t q = 0; q < imp.pair_features.size(); ++q) {
      const auto [a, b] = imp.pair_features[q];
      out << dnamite::internal::QuoteIfNeeded(m.feature_names[static_cast<std::size_t>(a)] +
                                              ":" +
                                              m.feature_names[static_cast<std::size_t>(b)])
          << ",pair," << FormatDouble(imp.PairMean(q));
      for (std::size_t k = 0; k < m.K(); ++k) out << ',' << FormatDouble(imp.pairs(q, k));
      out << '\n';
    }
  }
  return 0;
}

// Evaluation time closest to the median observed event time.
inline std::size_t MedianTimeIndex(const DnamiteModel& model, const SurvivalDataset& ds) {
  std::vector<double> events;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.event[i]) events.push_back(ds.time[i]);
  }
  if (events.empty()) throw DataError("evaluate: data has no events");
  std::sort(events.begin(), events.end());
  const double median = QuantileSorted(events, 0.5);
  std::size_t best = 0;
  for (std::size_t k = 1; k < model.K(); ++k) {
    if (std::abs(model.eval_times[k] - median) < std::abs(model.eval_times[best] - median)) {
      best = k;
    }
  }
  return best;
}

inline int Evaluate(const std::string& model_path, const std::string& data_path,
                    const std::string& time_col, const std::string& event_col,
                    const std::string& out_path) {
  const EnsembleModel ensemble = LoadModel(model_path);
  const auto& m = ensemble.front();
  const SurvivalDataset ds = LoadForModel(ensemble, data_path, time_col, event_col);
  const Matrix cif = PredictCif(ensemble, ds);
  const auto auc = TdAuc(cif, ds.time, ds.event, m.censor_curve, m.eval_times,
                         m.hp.censor_floor);
  const auto brier = BrierIpcw(cif, ds.time, ds.event, m.censor_curve, m.eval_times,
                               m.hp.censor_floor);
  const std::size_t kc = MedianTimeIndex(m, ds);
  std::vector<double> risk(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) risk[i] = cif(i, kc);
  const double cindex = CIndex(risk, ds.time, ds.event);

  auto out = internal::OpenOutput(out_path);
  out << "time_index,time,td_auc,brier\n";
  for (std::size_t k = 0; k < m.K(); ++k) {
    out << k << ',' << FormatDouble(m.eval_times[k]) << ','
        << (std::isnan(auc.per_time[k]) ? "" : FormatDouble(auc.per_time[k])) << ','
        << FormatDouble(brier.per_time[k]) << '\n';
  }
  out << "mean,," << FormatDouble(auc.mean) << ',' << FormatDouble(brier.mean) << '\n';

  internal::Json summary;
  summary["n"] = ds.n();
  summary["td_auc_mean"] = auc.mean;
  summary["brier_mean"] = brier.mean;
  summary["c_index"] = cindex;
  summary["c_index_time_index"] = kc;
  summary["c_index_time"] = m.eval_times[kc];
  internal::Json per_auc = internal::Json::array();
  for (double v : auc.per_time) {
    per_auc.push_back(std::isnan(v) ? internal::Json(nullptr) : internal::Json(v));
  }
  summary["td_auc"] = per_auc;
  summary["brier"] = brier.per_time;
  summary["eval_times"] = m.eval_times;
  internal::OpenOutput(out_path + ".json") << summary.dump(1) << '\n';
  std::cout << "td_auc_mean=" << FormatDouble(auc.mean)
            << " brier_mean=" << FormatDouble(brier.mean)
            << " c_index=" << FormatDouble(cindex) << '\n';
  return 0;
}

inline int Calibrate(const std::string& model_path, const std::string& data_path,
                     const std::string& time_col, const std::string& event_col,
                     std::size_t k, int bins, const std::string& out_path) {
  const EnsembleModel ensemble = LoadModel(model_path);
  const auto& m = ensemble.front();
  if (k >= m.K()) {
    throw InvalidArgument("time index " + std::to_string(k) + " must lie in [0, " +
                          std::to_string(m.K() - 1) + "]");
  }
  const SurvivalDataset ds = LoadForModel(ensemble, data_path, time_col, event_col);
  const Matrix cif = PredictCif(ensemble, ds);
  std::vector<double> predicted(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) predicted[i] = cif(i, k);
  const auto curve = Calibration(predicted, ds.time, ds.event, m.eval_times[k], bins);
  auto out = internal::OpenOutput(out_path);
  out << "bin,count,mean_predicted,observed,flagged\n";
  for (std::size_t b = 0; b < curve.bins.size(); ++b) {
    const auto& bin = curve.bins[b];
    out << b << ',' << bin.count << ',' << FormatDouble(bin.mean_predicted) << ','
        << FormatDouble(bin.observed) << ',' << (bin.flagged ? 1 : 0) << '\n';
  }
  std::cout << "time=" << FormatDouble(m.eval_times[k]) << " mae="
            << (std::isnan(curve.mae) ? std::string("nan") : FormatDouble(curve.mae)) << '\n';
  return 0;
}

inline int Run(int argc, const char* const* argv) {
  CLI::App app{"Glass-box neural survival models", "dnamite"};
  app.require_subcommand(1);

  SyntheticSpec sim;
  std::string sim_out;
  bool no_interaction = false;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic survival data");
  simulate->add_option("--out", sim_out, "Output CSV path")->required();
  simulate->add_option("--n", sim.n, "Number of samples")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--censor-rate", sim.censor_rate, "Fraction of samples exposed to censoring")
      ->capture_default_str();
  simulate->add_option("--noise-sd", sim.noise_sd, "Standard deviation of risk noise")
      ->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "Horizon time t")->capture_default_str();
  simulate->add_option("--t-max", sim.t_max, "Largest event time")->capture_default_str();
  simulate->add_flag("--no-interaction", no_interaction, "Drop the f1 x f2 interaction");

  internal::FitFlags fit;
  auto* fit_cmd = app.add_subcommand("fit", "Train an ensemble");
  fit_cmd->add_option("--data", fit.data, "Training CSV")->required();
  fit_cmd->add_option("--out", fit.out, "Model file to write")->required();
  fit_cmd->add_option("--config", fit.config_file, "key = value configuration file");
  fit_cmd->add_option("--time-col", fit.time_col)->capture_default_str();
  fit_cmd->add_option("--event-col", fit.event_col)->capture_default_str();
  fit_cmd->add_option("--categorical", fit.categorical, "Comma-separated categorical columns");
  auto& c = fit.config;
  auto bind = [&](CLI::Option* option, std::function<void(TrainConfig&)> apply) {
    option->capture_default_str();
    fit.overrides.emplace_back(option, std::move(apply));
  };
  auto* pairs_opt = fit_cmd->add_option("--pairs", c.n_pairs, "Number of interaction pairs");
  bind(pairs_opt, [&](TrainConfig& t) { t.n_pairs = c.n_pairs; });
  auto* pair_list_opt =
      fit_cmd->add_option("--pair-list", fit.pair_list, "Explicit pairs j:l,... (names or indices)");
  pairs_opt->excludes(pair_list_opt);
  bind(fit_cmd->add_option("--gamma", c.model.gamma, "Kernel smoothing strength"),
       [&](TrainConfig& t) { t.model.gamma = c.model.gamma; });
  bind(fit_cmd->add_option("--kernel-width", c.model.kernel_width, "Kernel half-width in bins"),
       [&](TrainConfig& t) { t.model.kernel_width = c.model.kernel_width; });
  bind(fit_cmd->add_option("--embedding-dim", c.model.embedding_dim, "Embedding dimension"),
       [&](TrainConfig& t) { t.model.embedding_dim = c.model.embedding_dim; });
  bind(fit_cmd->add_option("--max-bins", c.model.max_bins, "Maximum bins per feature"),
       [&](TrainConfig& t) { t.model.max_bins = c.model.max_bins; });
  bind(fit_cmd->add_option("--hidden-dim", fit.hidden_dim, "Width of both hidden layers"),
       [&](TrainConfig& t) { t.model.hidden = {fit.hidden_dim, fit.hidden_dim}; });
  bind(fit_cmd->add_option("--k-times", c.model.n_times, "Number of evaluation times"),
       [&](TrainConfig& t) { t.model.n_times = c.model.n_times; });
  bind(fit_cmd->add_option("--ensemble-b", c.ensemble_size, "Ensemble members"),
       [&](TrainConfig& t) { t.ensemble_size = c.ensemble_size; });
  bind(fit_cmd->add_option("--seed", c.seed, "Random seed"),
       [&](TrainConfig& t) { t.seed = c.seed; });
  bind(fit_cmd->add_option("--lr", c.learning_rate, "Adam learning rate"),
       [&](TrainConfig& t) { t.learning_rate = c.learning_rate; });
  bind(fit_cmd->add_option("--batch-size", c.batch_size, "Mini-batch size"),
       [&](TrainConfig& t) { t.batch_size = c.batch_size; });
  bind(fit_cmd->add_option("--max-epochs", c.max_epochs, "Epoch limit per stage"),
       [&](TrainConfig& t) { t.max_epochs = c.max_epochs; });
  bind(fit_cmd->add_option("--patience", c.patience, "Early-stopping patience"),
       [&](TrainConfig& t) { t.patience = c.patience; });
  bind(fit_cmd->add_option("--val-frac", c.val_fraction, "Validation fraction"),
       [&](TrainConfig& t) { t.val_fraction = c.val_fraction; });
  bind(fit_cmd->add_option("--censor-floor", c.model.censor_floor, "Lower clamp for G"),
       [&](TrainConfig& t) { t.model.censor_floor = c.model.censor_floor; });
  bind(fit_cmd->add_option("--threads", c.threads, "Member parallelism (0 = automatic)"),
       [&](TrainConfig& t) { t.threads = c.threads; });
  bind(fit_cmd->add_flag("--nam-mode", c.model.nam_mode,
                         "Feed scaled raw values to the networks (no embeddings)"),
       [&](TrainConfig& t) { t.model.nam_mode = c.model.nam_mode; });

  std::string model_path, data_path, out_path, times = "all";
  std::string time_col = "time", event_col = "event";
  auto* predict = app.add_subcommand("predict", "Predict cumulative incidence");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--data", data_path)->required();
  predict->add_option("--times", times, "'all' or comma-separated time indices")
      ->capture_default_str();
  predict->add_option("--out", out_path)->required();

  ExplainRequest explain_req;
  auto* explain = app.add_subcommand("explain", "Export shape functions and importances");
  explain->add_option("--model", explain_req.model_path)->required();
  explain->add_option("--feature", explain_req.features, "Feature name or index (repeatable)");
  explain->add_option("--pair", explain_req.pairs, "Pair j:l (repeatable)");
  explain->add_option("--time", explain_req.times, "'all' or comma-separated time indices")
      ->capture_default_str();
  explain->add_option("--out", explain_req.out_dir, "Output directory")->required();
  explain->add_option("--data", explain_req.data_path, "Rows for the importance table");
  explain->add_flag("--svg", explain_req.svg, "Also write step plots");

  auto* evaluate = app.add_subcommand("evaluate", "Discrimination and Brier metrics");
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--data", data_path)->required();
  evaluate->add_option("--time-col", time_col)->capture_default_str();
  evaluate->add_option("--event-col", event_col)->capture_default_str();
  evaluate->add_option("--out", out_path)->required();

  std::size_t time_index = 0;
  int calib_bins = 10;
  auto* calibrate = app.add_subcommand("calibrate", "Calibration curve at one time");
  calibrate->add_option("--model", model_path)->required();
  calibrate->add_option("--data", data_path)->required();
  calibrate->add_option("--time", time_index, "Time index")->required();
  calibrate->add_option("--bins", calib_bins)->capture_default_str();
  calibrate->add_option("--time-col", time_col)->capture_default_str();
  calibrate->add_option("--event-col", event_col)->capture_default_str();
  calibrate->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate) {
      sim.interaction = !no_interaction;
      return Simulate(sim, sim_out);
    }
    if (*fit_cmd) return Fit(fit);
    if (*predict) return Predict(model_path, data_path, times, out_path);
    if (*explain) {
      if (explain_req.features.empty() && explain_req.pairs.empty() &&
          explain_req.data_path.empty()) {
        throw InvalidArgument("explain needs --feature, --pair or --data");
      }
      return Explain(explain_req);
    }
    if (*evaluate) return Evaluate(model_path, data_path, time_col, event_col, out_path);
    if (*calibrate) {
      return Calibrate(model_path, data_path, time_col, event_col, time_index, calib_bins,
                       out_path);
    }
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "error: " << message << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dnamite::cli
