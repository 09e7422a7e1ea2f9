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
#include <optional>
#include <string>
#include <vector>

#include "lpl/dataset.hpp"
#include "lpl/matrix.hpp"
#include "lpl/rng.hpp"

namespace lpl {

enum class Similarity { kCosine };

struct HalluConfig {
  /// Softmax temperature applied to pairwise similarities.
  double sigma = 0.2;
  /// Neighbors mixed into each placeholder class.
  std::size_t n = 4;
  double alpha1 = 5.0;
  double alpha2 = 1.0;
  Similarity similarity = Similarity::kCosine;
  /// When set, every class uses this mixing coefficient instead of a Beta draw.
  std::optional<double> forced_beta;

  void validate() const;
};

/// Harmonized propagation weights for one episode.
struct PropagationWeights {
  /// Final weights: zero outside each row's chosen neighbors, rows sum to 1.
  Matrix w;
  /// Chosen neighbor subset per row, ascending.
  std::vector<std::vector<std::size_t>> chosen;
  /// Full-neighborhood softmax weights in each space, before averaging.
  Matrix visual;
  Matrix semantic;
};

/// Per-class means of the episode's visual rows (M x C).
Matrix class_centroids(const Episode& ep);

/// Row-wise softmax of pairwise cosine similarities over the off-diagonal
/// entries; the diagonal is exactly zero.
Matrix neighbor_softmax(const Matrix& nodes, double sigma);

PropagationWeights propagation_weights(const Episode& ep, const HalluConfig& cfg, RngStream& rng);

struct Propagated {
  Matrix visual;    // M x C
  Matrix semantic;  // M x D
};

/// Records exactly which weight matrix each space consumed.
struct PropagationTrace {
  Matrix visual_weights;
  Matrix semantic_weights;
};

Propagated propagate(const Episode& ep, const PropagationWeights& weights,
                     PropagationTrace* trace = nullptr);

struct HallucinatedEpisode {
  Matrix visual;       // M*N x C, rows aligned with the source episode
  Matrix semantic;     // M x D
  std::vector<double> betas;
  Matrix elementary_visual;    // M x C
  Matrix elementary_semantic;  // M x D
  std::vector<std::size_t> local_labels;
};

HallucinatedEpisode interpolate(const Episode& ep, const Propagated& elementary,
                                const HalluConfig& cfg, RngStream& rng);

/// Weights, propagation, then interpolation.
HallucinatedEpisode hallucinate(const Episode& ep, const HalluConfig& cfg, RngStream& rng,
                                PropagationTrace* trace = nullptr,
                                PropagationWeights* weights_out = nullptr);

/// JSON dump of (w, chosen, v', a', beta) for one episode.
std::string dump_hallucination(const Episode& ep, const PropagationWeights& weights,
                               const HallucinatedEpisode& hep);

}  // namespace lpl
