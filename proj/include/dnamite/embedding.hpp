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

// Per-bin embeddings with Gaussian kernel smoothing across neighbouring
// bins. The smoothed embedding of bin b is
//
//   sum_{z=-k..k, 1 <= b+z <= B} exp(-z^2 / (2 gamma)) * W[b+z]
//
// with unnormalized weights. The missing bin (row 0) is never smoothed and
// never contributes to other bins.

#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dnamite/binning.hpp"
#include "dnamite/common.hpp"

namespace dnamite {

inline constexpr double kDefaultGamma = 1.0;
inline constexpr int kDefaultKernelWidth = 8;
inline constexpr int kDefaultEmbeddingDim = 32;

// Kernel weight for each offset in [-width, width]. gamma == 0 is the point
// mass at offset 0.
inline std::vector<double> KernelWeights(double gamma, int width) {
  Require(gamma >= 0, "kernel_weights: gamma must be >= 0");
  Require(width >= 0, "kernel_weights: width must be >= 0");
  std::vector<double> w(2 * static_cast<std::size_t>(width) + 1, 0.0);
  for (int z = -width; z <= width; ++z) {
    double value;
    if (gamma == 0.0) {
      value = z == 0 ? 1.0 : 0.0;
    } else {
      value = std::exp(-static_cast<double>(z * z) / (2.0 * gamma));
    }
    w[static_cast<std::size_t>(z + width)] = value;
  }
  return w;
}

struct EmbeddingTable {
  Matrix weights;  // (n_bins + 1) x dim, row 0 = missing bin
  double gamma = kDefaultGamma;
  int width = kDefaultKernelWidth;

  int n_bins() const { return static_cast<int>(weights.rows) - 1; }
  int dim() const { return static_cast<int>(weights.cols); }

  bool operator==(const EmbeddingTable&) const = default;

  void Validate(const std::string& where) const {
    Require(weights.rows >= 2, where + ": embedding table needs >= 2 rows");
    Require(weights.cols >= 1, where + ": embedding dimension must be >= 1");
    Require(gamma >= 0 && std::isfinite(gamma), where + ": gamma must be >= 0");
    Require(width >= 0, where + ": kernel width must be >= 0");
    for (double v : weights.data) {
      Require(std::isfinite(v), where + ": embedding weights must be finite");
    }
  }
};

// Zero-mean normal initialization with standard deviation 1/sqrt(dim).
template <typename Rng>
EmbeddingTable MakeEmbeddingTable(int n_bins, int dim, double gamma, int width,
                                  Rng& rng) {
  EmbeddingTable table;
  table.weights = Matrix(static_cast<std::size_t>(n_bins) + 1,
                         static_cast<std::size_t>(dim));
  table.gamma = gamma;
  table.width = width;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(dim));
  for (double& v : table.weights.data) v = normal(rng);
  return table;
}

// Writes the smoothed embedding of `bin` into `out` (size dim).
// `kernel` must come from KernelWeights(table.gamma, table.width).
inline void EmbedFeatureInto(int bin, const EmbeddingTable& table,
                             std::span<const double> kernel,
                             std::span<double> out) {
  const int n_bins = table.n_bins();
  if (bin < 0 || bin > n_bins) {
    throw InvalidArgument("embed_feature: bin " + std::to_string(bin) +
                          " outside [0, " + std::to_string(n_bins) + "]");
  }
  const std::size_t d = table.weights.cols;
  if (bin == kMissingBin) {
    const auto row = table.weights.row(0);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
  const int width = table.width;
  for (int z = -width; z <= width; ++z) {
    const int neighbor = bin + z;
    if (neighbor <= 0 || neighbor > n_bins) continue;
    const double w = kernel[static_cast<std::size_t>(z + width)];
    if (w == 0.0) continue;
    const auto row = table.weights.row(static_cast<std::size_t>(neighbor));
    for (std::size_t c = 0; c < d; ++c) out[c] += w * row[c];
  }
}

inline std::vector<double> EmbedFeature(int bin, const EmbeddingTable& table) {
  std::vector<double> out(table.weights.cols);
  EmbedFeatureInto(bin, table, KernelWeights(table.gamma, table.width), out);
  return out;
}

// Adjoint of EmbedFeatureInto: adds d(loss)/d(weights) given
// d(loss)/d(embedding of bin).
inline void AccumulateEmbeddingGradient(int bin, const EmbeddingTable& table,
                                        std::span<const double> kernel,
                                        std::span<const double> grad_embedding,
                                        Matrix& grad_weights) {
  const std::size_t d = table.weights.cols;
  if (bin == kMissingBin) {
    auto row = grad_weights.row(0);
    for (std::size_t c = 0; c < d; ++c) row[c] += grad_embedding[c];
    return;
  }
  const int n_bins = table.n_bins();
  const int width = table.width;
  for (int z = -width; z <= width; ++z) {
    const int neighbor = bin + z;
    if (neighbor <= 0 || neighbor > n_bins) continue;
    const double w = kernel[static_cast<std::size_t>(z + width)];
    if (w == 0.0) continue;
    auto row = grad_weights.row(static_cast<std::size_t>(neighbor));
    for (std::size_t c = 0; c < d; ++c) row[c] += w * grad_embedding[c];
  }
}

// Concatenation [embed(bin_a) | embed(bin_b)].
inline std::vector<double> EmbedPair(int bin_a, int bin_b,
                                     const EmbeddingTable& table_a,
                                     const EmbeddingTable& table_b) {
  std::vector<double> out(table_a.weights.cols + table_b.weights.cols);
  std::span<double> s(out);
  EmbedFeatureInto(bin_a, table_a, KernelWeights(table_a.gamma, table_a.width),
                   s.first(table_a.weights.cols));
  EmbedFeatureInto(bin_b, table_b, KernelWeights(table_b.gamma, table_b.width),
                   s.subspan(table_a.weights.cols));
  return out;
}

}  // namespace dnamite
