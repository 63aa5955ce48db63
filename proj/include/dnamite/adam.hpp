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

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dnamite/common.hpp"

namespace dnamite {

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments. Parameter blocks are identified by the
// order in which they are passed within one step.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Starts a new step; call before the per-block Update calls.
  void BeginStep() {
    ++step_;
    block_ = 0;
  }

  void Update(std::span<double> param, std::span<const double> grad) {
    if (block_ == first_moment_.size()) {
      first_moment_.emplace_back(param.size(), 0.0);
      second_moment_.emplace_back(param.size(), 0.0);
    }
    auto& m = first_moment_[block_];
    auto& v = second_moment_[block_];
    Require(m.size() == param.size(), "adam: parameter block changed size");
    ++block_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      param[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }

  long step() const { return step_; }

 private:
  AdamOptions options_;
  long step_ = 0;
  std::size_t block_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

}  // namespace dnamite
