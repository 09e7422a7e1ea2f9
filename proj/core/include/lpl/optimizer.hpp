// Copyright 2026 The LPL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lpl/matrix.hpp"

namespace lpl {

enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// First-order optimizer with per-parameter moment buffers. Buffers are
/// allocated on the first step and shape-checked on every later one.
///
///   sgd_momentum: velocity = momentum * velocity - lr * grad; param += velocity
///   adam:         bias-corrected first/second moments, eps added to sqrt(v_hat)
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t step_count() const noexcept { return step_count_; }

 private:
  OptimizerConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

}  // namespace lpl
