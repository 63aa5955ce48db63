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

// Model files are JSON documents with sorted keys and shortest round-trip
// decimal floats, so save(load(save(m))) reproduces the file byte for byte
// and every parameter survives exactly.
//
// Top-level keys:
//   format_version   integer, currently 1
//   hyperparameters  object
//   bins             per feature: name, kind, n_bins, cut_points | levels
//   eval_times       K increasing times
//   censor_curve     per member: {times, values}
//   mains            per member, per feature: {table, net, raw_input, raw_range}
//   pairs            per member, per pair: {features, table_first, table_second, net}
//   intercept        per member: K-vector
//   offsets          per member: {mains: [K-vector], pairs: [K-vector]}
//   ensemble         {members: B}
//
// Matrices are {rows, cols, data} with row-major data.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dnamite/common.hpp"
#include "dnamite/interpret.hpp"
#include "dnamite/model.hpp"

namespace dnamite {

inline constexpr int kFormatVersion = 1;

namespace internal {

using Json = nlohmann::json;

inline Json MatrixToJson(const Matrix& m) {
  return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Json NetToJson(const Mlp& net) {
  Json layers = Json::array();
  for (const auto& layer : net.layers) {
    layers.push_back(Json{{"weight", MatrixToJson(layer.weight)}, {"bias", layer.bias}});
  }
  return layers;
}

inline Json TableToJson(const EmbeddingTable& t) {
  return Json{{"weights", MatrixToJson(t.weights)}, {"gamma", t.gamma}, {"width", t.width}};
}

// Reads with the JSON path of the block in every error.
class Reader {
 public:
  [[noreturn]] static void Fail(const std::string& where, const std::string& what) {
    throw FormatError("model file: " + where + ": " + what);
  }

  static const Json& Get(const Json& obj, const std::string& key,
                         const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) Fail(where, "missing key '" + key + "'");
    return obj.at(key);
  }

  static double Number(const Json& j, const std::string& where) {
    if (!j.is_number()) Fail(where, "expected a number");
    return j.get<double>();
  }

  static long Integer(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) Fail(where, "expected an integer");
    return j.get<long>();
  }

  static std::vector<double> Numbers(const Json& j, const std::string& where) {
    if (!j.is_array()) Fail(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(Number(v, where));
    return out;
  }

  static const Json& Array(const Json& j, const std::string& where,
                           std::size_t expected_size) {
    if (!j.is_array()) Fail(where, "expected an array");
    if (j.size() != expected_size) {
      Fail(where, "expected " + std::to_string(expected_size) + " entries, found " +
                      std::to_string(j.size()));
    }
    return j;
  }

  static Matrix ReadMatrix(const Json& j, const std::string& where) {
    Matrix m;
    const long rows = Integer(Get(j, "rows", where), where + ".rows");
    const long cols = Integer(Get(j, "cols", where), where + ".cols");
    if (rows < 0 || cols < 0) Fail(where, "negative matrix dimensions");
    m.rows = static_cast<std::size_t>(rows);
    m.cols = static_cast<std::size_t>(cols);
    m.data = Numbers(Get(j, "data", where), where + ".data");
    if (m.data.size() != m.rows * m.cols) {
      Fail(where, "truncated parameter block: expected " +
                      std::to_string(m.rows * m.cols) + " values, found " +
                      std::to_string(m.data.size()));
    }
    return m;
  }

  static Mlp ReadNet(const Json& j, const std::string& where) {
    if (!j.is_array()) Fail(where, "expected an array of layers");
    Mlp net;
    for (std::size_t l = 0; l < j.size(); ++l) {
      const std::string w = where + ".layers[" + std::to_string(l) + "]";
      DenseLayer layer;
      layer.weight = ReadMatrix(Get(j[l], "weight", w), w + ".weight");
      layer.bias = Numbers(Get(j[l], "bias", w), w + ".bias");
      net.layers.push_back(std::move(layer));
    }
    return net;
  }

  static EmbeddingTable ReadTable(const Json& j, const std::string& where) {
    EmbeddingTable t;
    t.weights = ReadMatrix(Get(j, "weights", where), where + ".weights");
    t.gamma = Number(Get(j, "gamma", where), where + ".gamma");
    t.width = static_cast<int>(Integer(Get(j, "width", where), where + ".width"));
    return t;
  }
};

}  // namespace internal

inline std::string SerializeModel(const EnsembleModel& ensemble) {
  using internal::Json;
  ensemble.Validate();
  for (std::size_t b = 0; b < ensemble.size(); ++b) {
    if (!ensemble.members[b].centered) {
      throw InvalidArgument("save_model: member " + std::to_string(b) +
                            " is not centered");
    }
  }
  const DnamiteModel& first = ensemble.front();
  const auto& hp = first.hp;
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["hyperparameters"] = Json{{"gamma", hp.gamma},
                                {"kernel_width", hp.kernel_width},
                                {"embedding_dim", hp.embedding_dim},
                                {"hidden", hp.hidden},
                                {"n_times", hp.n_times},
                                {"max_bins", hp.max_bins},
                                {"nam_mode", hp.nam_mode},
                                {"censor_floor", hp.censor_floor}};
  Json bins = Json::array();
  for (std::size_t j = 0; j < first.p(); ++j) {
    const auto& spec = first.bins[j];
    Json b{{"name", first.feature_names[j]}, {"n_bins", spec.n_bins}};
    if (spec.kind == FeatureKind::kContinuous) {
      b["kind"] = "continuous";
      b["cut_points"] = spec.cut_points;
    } else {
      b["kind"] = "categorical";
      b["levels"] = spec.levels;
    }
    bins.push_back(std::move(b));
  }
  doc["bins"] = std::move(bins);
  doc["eval_times"] = first.eval_times;

  Json censor = Json::array(), mains = Json::array(), pairs = Json::array(),
       intercept = Json::array(), offsets = Json::array();
  for (const auto& m : ensemble.members) {
    censor.push_back(Json{{"times", m.censor_curve.times}, {"values", m.censor_curve.values}});
    Json member_mains = Json::array();
    Json main_offsets = Json::array();
    for (const auto& term : m.mains) {
      Json t{{"net", internal::NetToJson(term.net)}, {"raw_input", term.raw_input}};
      if (term.raw_input) {
        t["raw_range"] = std::vector<double>{term.raw_lo, term.raw_hi};
        t["table"] = nullptr;
      } else {
        t["table"] = internal::TableToJson(term.table);
      }
      member_mains.push_back(std::move(t));
      main_offsets.push_back(term.offset);
    }
    Json member_pairs = Json::array();
    Json pair_offsets = Json::array();
    for (const auto& term : m.pairs) {
      member_pairs.push_back(Json{{"features", std::vector<int>{term.first, term.second}},
                                  {"table_first", internal::TableToJson(term.table_first)},
                                  {"table_second", internal::TableToJson(term.table_second)},
                                  {"net", internal::NetToJson(term.net)}});
      pair_offsets.push_back(term.offset);
    }
    mains.push_back(std::move(member_mains));
    pairs.push_back(std::move(member_pairs));
    intercept.push_back(m.intercept);
    offsets.push_back(Json{{"mains", std::move(main_offsets)},
                           {"pairs", std::move(pair_offsets)}});
  }
  doc["censor_curve"] = std::move(censor);
  doc["mains"] = std::move(mains);
  doc["pairs"] = std::move(pairs);
  doc["intercept"] = std::move(intercept);
  doc["offsets"] = std::move(offsets);
  doc["ensemble"] = Json{{"members", ensemble.size()}};
  return doc.dump(1) + "\n";
}

inline EnsembleModel DeserializeModel(const std::string& text) {
  using internal::Json;
  using R = internal::Reader;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("model file: not a valid document (truncated?): ") +
                      e.what());
  }
  if (!doc.is_object()) R::Fail("document", "expected an object");
  const long version = R::Integer(R::Get(doc, "format_version", "document"),
                                  "format_version");
  if (version != kFormatVersion) {
    throw FormatError("model file: unsupported format_version " +
                      std::to_string(version) + " (this build reads version " +
                      std::to_string(kFormatVersion) + ")");
  }

  ModelHyperparameters hp;
  const auto& h = R::Get(doc, "hyperparameters", "document");
  hp.gamma = R::Number(R::Get(h, "gamma", "hyperparameters"), "hyperparameters.gamma");
  hp.kernel_width = static_cast<int>(
      R::Integer(R::Get(h, "kernel_width", "hyperparameters"), "hyperparameters.kernel_width"));
  hp.embedding_dim = static_cast<int>(R::Integer(
      R::Get(h, "embedding_dim", "hyperparameters"), "hyperparameters.embedding_dim"));
  hp.hidden.clear();
  const auto& hidden = R::Get(h, "hidden", "hyperparameters");
  if (!hidden.is_array()) R::Fail("hyperparameters.hidden", "expected an array");
  for (const auto& v : hidden) {
    hp.hidden.push_back(static_cast<int>(R::Integer(v, "hyperparameters.hidden")));
  }
  hp.n_times = static_cast<int>(
      R::Integer(R::Get(h, "n_times", "hyperparameters"), "hyperparameters.n_times"));
  hp.max_bins = static_cast<int>(
      R::Integer(R::Get(h, "max_bins", "hyperparameters"), "hyperparameters.max_bins"));
  const auto& nam = R::Get(h, "nam_mode", "hyperparameters");
  if (!nam.is_boolean()) R::Fail("hyperparameters.nam_mode", "expected a boolean");
  hp.nam_mode = nam.get<bool>();
  hp.censor_floor = R::Number(R::Get(h, "censor_floor", "hyperparameters"),
                              "hyperparameters.censor_floor");

  const auto& bins_json = R::Get(doc, "bins", "document");
  if (!bins_json.is_array()) R::Fail("bins", "expected an array");
  std::vector<BinSpec> bins;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < bins_json.size(); ++j) {
    const std::string w = "bins[" + std::to_string(j) + "]";
    const auto& b = bins_json[j];
    const auto& name = R::Get(b, "name", w);
    const auto& kind = R::Get(b, "kind", w);
    if (!name.is_string() || !kind.is_string()) R::Fail(w, "name and kind must be strings");
    names.push_back(name.get<std::string>());
    BinSpec spec;
    spec.n_bins = static_cast<int>(R::Integer(R::Get(b, "n_bins", w), w + ".n_bins"));
    if (kind == "continuous") {
      spec.kind = FeatureKind::kContinuous;
      spec.cut_points = R::Numbers(R::Get(b, "cut_points", w), w + ".cut_points");
    } else if (kind == "categorical") {
      spec.kind = FeatureKind::kCategorical;
      const auto& levels = R::Get(b, "levels", w);
      if (!levels.is_array()) R::Fail(w + ".levels", "expected an array");
      for (const auto& l : levels) {
        if (!l.is_string()) R::Fail(w + ".levels", "expected strings");
        spec.levels.push_back(l.get<std::string>());
      }
    } else {
      R::Fail(w + ".kind", "unknown feature kind");
    }
    try {
      spec.Validate();
    } catch (const InvalidArgument& e) {
      R::Fail(w, e.what());
    }
    bins.push_back(std::move(spec));
  }
  const auto eval_times = R::Numbers(R::Get(doc, "eval_times", "document"), "eval_times");

  const long members = R::Integer(
      R::Get(R::Get(doc, "ensemble", "document"), "members", "ensemble"), "ensemble.members");
  if (members < 1) R::Fail("ensemble.members", "must be >= 1");
  const auto B = static_cast<std::size_t>(members);
  const auto& censor = R::Array(R::Get(doc, "censor_curve", "document"), "censor_curve", B);
  const auto& mains = R::Array(R::Get(doc, "mains", "document"), "mains", B);
  const auto& pairs = R::Array(R::Get(doc, "pairs", "document"), "pairs", B);
  const auto& intercept = R::Array(R::Get(doc, "intercept", "document"), "intercept", B);
  const auto& offsets = R::Array(R::Get(doc, "offsets", "document"), "offsets", B);

  EnsembleModel ensemble;
  for (std::size_t b = 0; b < B; ++b) {
    const std::string mb = "[" + std::to_string(b) + "]";
    DnamiteModel m;
    m.hp = hp;
    m.feature_names = names;
    m.bins = bins;
    m.eval_times = eval_times;
    m.censor_curve.times =
        R::Numbers(R::Get(censor[b], "times", "censor_curve" + mb), "censor_curve" + mb + ".times");
    m.censor_curve.values = R::Numbers(R::Get(censor[b], "values", "censor_curve" + mb),
                                       "censor_curve" + mb + ".values");
    m.intercept = R::Numbers(intercept[b], "intercept" + mb);

    const auto& member_mains = R::Array(mains[b], "mains" + mb, bins.size());
    const auto& main_offsets = R::Array(R::Get(offsets[b], "mains", "offsets" + mb),
                                        "offsets" + mb + ".mains", bins.size());
    for (std::size_t j = 0; j < bins.size(); ++j) {
      const std::string w = "mains" + mb + "[" + std::to_string(j) + "]";
      const auto& t = member_mains[j];
      MainTerm term;
      const auto& raw = R::Get(t, "raw_input", w);
      if (!raw.is_boolean()) R::Fail(w + ".raw_input", "expected a boolean");
      term.raw_input = raw.get<bool>();
      term.net = R::ReadNet(R::Get(t, "net", w), w + ".net");
      if (term.raw_input) {
        const auto range = R::Numbers(R::Get(t, "raw_range", w), w + ".raw_range");
        if (range.size() != 2) R::Fail(w + ".raw_range", "expected [lo, hi]");
        term.raw_lo = range[0];
        term.raw_hi = range[1];
      } else {
        term.table = R::ReadTable(R::Get(t, "table", w), w + ".table");
      }
      term.offset = R::Numbers(main_offsets[j], "offsets" + mb + ".mains[" +
                                                    std::to_string(j) + "]");
      m.mains.push_back(std::move(term));
    }
    const auto& member_pairs = pairs[b];
    if (!member_pairs.is_array()) R::Fail("pairs" + mb, "expected an array");
    const auto& pair_offsets = R::Array(R::Get(offsets[b], "pairs", "offsets" + mb),
                                        "offsets" + mb + ".pairs", member_pairs.size());
    for (std::size_t q = 0; q < member_pairs.size(); ++q) {
      const std::string w = "pairs" + mb + "[" + std::to_string(q) + "]";
      const auto& t = member_pairs[q];
      PairTerm term;
      const auto features = R::Numbers(R::Get(t, "features", w), w + ".features");
      if (features.size() != 2) R::Fail(w + ".features", "expected two indices");
      term.first = static_cast<int>(features[0]);
      term.second = static_cast<int>(features[1]);
      term.table_first = R::ReadTable(R::Get(t, "table_first", w), w + ".table_first");
      term.table_second = R::ReadTable(R::Get(t, "table_second", w), w + ".table_second");
      term.net = R::ReadNet(R::Get(t, "net", w), w + ".net");
      term.offset = R::Numbers(pair_offsets[q], "offsets" + mb + ".pairs[" +
                                                    std::to_string(q) + "]");
      m.pairs.push_back(std::move(term));
    }
    m.centered = true;
    try {
      m.Validate();
    } catch (const InvalidArgument& e) {
      throw FormatError("model file: member " + std::to_string(b) +
                        " failed validation: " + e.what());
    }
    ensemble.members.push_back(std::move(m));
  }
  try {
    ensemble.Validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return ensemble;
}

inline void SaveModel(const EnsembleModel& ensemble, const std::string& path) {
  const std::string text = SerializeModel(ensemble);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_model: cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("save_model: write to '" + path + "' failed");
}

inline void SaveModel(const DnamiteModel& model, const std::string& path) {
  SaveModel(EnsembleModel{{model}}, path);
}

inline EnsembleModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_model: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeModel(buffer.str());
}

}  // namespace dnamite
