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
#include <string_view>
#include <vector>

#include "lpl/dataset.hpp"
#include "lpl/hallucination.hpp"
#include "lpl/mapping_net.hpp"
#include "lpl/optimizer.hpp"

namespace lpl {

/// Ablation ladder for stage two.
///   kS2vBaseline  plain semantic->visual mapping on real classes
///   kEpOnly       placeholders from propagation alone (beta = 0)
///   kEpEi         propagation plus Beta-drawn interpolation
///   kFull         kEpEi on features refined by semantic-oriented fine-tuning
enum class TrainMode { kS2vBaseline, kEpOnly, kEpEi, kFull };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 30;
  /// 0 means ceil(|train| / (classes_per_episode * shots)).
  std::size_t episodes_per_epoch = 0;
  std::size_t classes_per_episode = 20;
  std::size_t shots = 4;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 1e-3};
  /// Scale on cosine logits.
  double tau = 10.0;
  double lambda_real = 1.0;
  HalluConfig hallucination;
  TrainMode mode = TrainMode::kFull;
  /// 0 means 2 * max(attribute_dim, feature_dim).
  std::size_t hidden_dim = 0;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t resolved_episodes(std::size_t train_count) const;
  std::size_t resolved_hidden(std::size_t attr_dim, std::size_t feat_dim) const;
  /// Placeholder classes are generated unless the mode is the baseline or n is 0.
  bool uses_placeholders() const noexcept;
};

/// Semantic->visual mapping h and how it was produced.
struct PrototypeModel {
  MappingNet net;
  TrainConfig config;
  /// Mean total loss per epoch.
  std::vector<double> loss_trace;
};

PrototypeModel init_prototype_model(std::size_t attr_dim, std::size_t feat_dim,
                                    const TrainConfig& cfg);

struct LossAndGrads {
  double loss = 0.0;
  MappingNet::Gradients grads;
};

/// Mean over visual rows of -log softmax_l(tau * cos(h(semantic_l), visual_s))
/// at l = labels[s], with exact gradients through h.
LossAndGrads prototype_loss(const MappingNet& net, const Matrix& semantic, const Matrix& visual,
                            std::span<const std::size_t> labels, double tau);

/// Classification loss over the hallucinated placeholder classes.
LossAndGrads place_loss(const MappingNet& net, const HallucinatedEpisode& hep, double tau);
/// Same loss over the episode's real classes.
LossAndGrads real_loss(const MappingNet& net, const Episode& ep, double tau);

/// Episodic training. Only the view's seen classes and training samples are
/// ever read.
PrototypeModel train_prototypes(const TrainingView& view, const TrainConfig& cfg);
PrototypeModel train_prototypes(const SplitDataset& ds, const TrainConfig& cfg);

/// Row j is h(a_{class_ids[j]}).
Matrix project_prototypes(const PrototypeModel& model, const AttributeTable& attributes,
                          std::span<const std::size_t> class_ids);

/// Writes h_w1/h_b1/h_w2/h_b2 as LPLF matrices plus model.json.
void save_prototype_model(const PrototypeModel& model, const std::filesystem::path& dir);
PrototypeModel load_prototype_model(const std::filesystem::path& dir);

}  // namespace lpl
