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

#include "dnamite/adam.hpp"
#include "dnamite/binning.hpp"
#include "dnamite/common.hpp"
#include "dnamite/config.hpp"
#include "dnamite/dataset.hpp"
#include "dnamite/embedding.hpp"
#include "dnamite/interpret.hpp"
#include "dnamite/metrics.hpp"
#include "dnamite/mlp.hpp"
#include "dnamite/model.hpp"
#include "dnamite/persist.hpp"
#include "dnamite/survstats.hpp"
#include "dnamite/synthgen.hpp"
#include "dnamite/train.hpp"
