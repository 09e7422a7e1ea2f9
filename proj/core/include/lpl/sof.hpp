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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lpl/dataset.hpp"
#include "lpl/matrix.hpp"
#include "lpl/optimizer.hpp"

namespace lpl {

/// Semantic-oriented fine-tuning at the embedding level: a square linear
/// refiner x -> x * refiner stands in for the backbone, and `projection` is
/// the visual->semantic map that supervises it. Only the refiner is kept for
/// stage two.
struct RefinerParams {
  Matrix refiner;     // C x C
  Matrix projection;  // C x D

  static RefinerParams identity(std::size_t feat_dim, std::size_t attr_dim);
};

struct SofConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  OptimizerConfig optimizer{OptimizerKind::kSgdMomentum, 0.05, 0.9};
  double tau = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SofLoss {
  double loss = 0.0;
  /// d loss / d refined_sem, same shape as the input.
  Matrix grad;
};

/// Mean over rows of -log softmax_l(tau * cos(z_i, a_l)) at l = label_i, the
/// softmax running over every seen class.
SofLoss sof_loss(const Matrix& refined_sem, std::span<const std::size_t> labels,
                 const AttributeTable& attributes, std::span<const std::size_t> seen_classes,
                 double tau);

struct SofGradients {
  double loss = 0.0;
  Matrix refiner;
  Matrix projection;
};

/// L_SoF of raw features `x` pushed through refiner and projection, with
/// gradients for both parameter matrices.
SofGradients sof_gradients(const RefinerParams& params, const Matrix& x,
                           std::span<const std::size_t> labels, const AttributeTable& attributes,
                           std::span<const std::size_t> seen_classes, double tau);

struct SofResult {
  RefinerParams params;
  /// Mean batch loss per epoch.
  std::vector<double> loss_trace;
};

SofResult train_sof(const TrainingView& view, const SofConfig& cfg);
SofResult train_sof(const SplitDataset& ds, const SofConfig& cfg);

/// Copy of `ds` with features replaced by features * refiner and `refined` set.
SplitDataset refine_features(const SplitDataset& ds, const RefinerParams& params);

/// Writes sof_refiner.lplf, sof_projection.lplf and sof.json.
void save_refiner(const SofResult& result, const SofConfig& cfg, const std::filesystem::path& dir);
RefinerParams load_refiner(const std::filesystem::path& dir);
bool has_refiner(const std::filesystem::path& dir);

}  // namespace lpl
