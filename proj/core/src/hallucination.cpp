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

#include "lpl/hallucination.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lpl/error.hpp"

namespace lpl {

void HalluConfig::validate() const {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::kParameter, "sigma must be positive");
  require(n >= 1, ErrorKind::kParameter, "neighbor count n must be at least 1");
  require(alpha1 > 0.0 && alpha2 > 0.0, ErrorKind::kParameter, "Beta shapes must be positive");
  if (forced_beta) {
    require(*forced_beta >= 0.0 && *forced_beta <= 1.0, ErrorKind::kParameter,
            "forced beta must lie in [0,1]");
  }
}

Matrix class_centroids(const Episode& ep) {
  const std::size_t M = ep.num_classes();
  require(M >= 1 && ep.visual.rows() == M * ep.shots(), ErrorKind::kShape,
          "episode visual rows do not match classes x shots");
  Matrix out(M, ep.visual.cols());
  for (std::size_t r = 0; r < ep.visual.rows(); ++r) {
    auto dst = out.row(ep.local_labels[r]);
    auto src = ep.visual.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
  const double inv = 1.0 / static_cast<double>(ep.shots());
  for (double& x : out.data()) x *= inv;
  return out;
}

Matrix neighbor_softmax(const Matrix& nodes, double sigma) {
  const std::size_t M = nodes.rows();
  Matrix w(M, M);
  std::vector<double> scores;
  for (std::size_t i = 0; i < M; ++i) {
    scores.clear();
    for (std::size_t j = 0; j < M; ++j) {
      if (j != i) scores.push_back(cosine(nodes.row(i), nodes.row(j)).value);
    }
    const auto probs = softmax(scores, sigma);
    std::size_t t = 0;
    for (std::size_t j = 0; j < M; ++j) {
      if (j != i) w(i, j) = probs[t++];
    }
  }
  return w;
}

PropagationWeights propagation_weights(const Episode& ep, const HalluConfig& cfg, RngStream& rng) {
  cfg.validate();
  const std::size_t M = ep.num_classes();
  require(M >= 2 && cfg.n <= M - 1, ErrorKind::kParameter,
          "neighbor count n=" + std::to_string(cfg.n) + " needs at most M-1=" +
              std::to_string(M == 0 ? 0 : M - 1));
  PropagationWeights out;
  out.visual = neighbor_softmax(class_centroids(ep), cfg.sigma);
  out.semantic = neighbor_softmax(ep.semantic, cfg.sigma);
  out.w = Matrix(M, M);
  out.chosen.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    auto& chosen = out.chosen[i];
    for (std::size_t pick : rng.sample_without_replacement(M - 1, cfg.n)) {
      chosen.push_back(pick < i ? pick : pick + 1);
    }
    std::sort(chosen.begin(), chosen.end());
    double total = 0.0;
    for (std::size_t j : chosen) total += 0.5 * (out.visual(i, j) + out.semantic(i, j));
    for (std::size_t j : chosen) {
      const double harmonized = 0.5 * (out.visual(i, j) + out.semantic(i, j));
      // Underflow of every chosen weight leaves a uniform mix over the subset.
      out.w(i, j) = total > 0.0 ? harmonized / total : 1.0 / static_cast<double>(chosen.size());
    }
  }
  return out;
}

namespace {

Matrix combine(const Matrix& weights, const std::vector<std::vector<std::size_t>>& chosen,
               const Matrix& nodes, Matrix* record) {
  require(weights.rows() == nodes.rows() && weights.cols() == nodes.rows() &&
              chosen.size() == nodes.rows(),
          ErrorKind::kShape, "propagation weights do not match the episode's class count");
  if (record) *record = weights;
  Matrix out(nodes.rows(), nodes.cols());
  for (std::size_t i = 0; i < nodes.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j : chosen[i]) {
      const double wij = weights(i, j);
      auto src = nodes.row(j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += wij * src[c];
    }
  }
  return out;
}

void mix_row(std::span<double> dst, std::span<const double> original,
             std::span<const double> elementary, double beta) {
  if (beta == 1.0) {
    std::copy(original.begin(), original.end(), dst.begin());
  } else if (beta == 0.0) {
    std::copy(elementary.begin(), elementary.end(), dst.begin());
  } else {
    for (std::size_t c = 0; c < dst.size(); ++c)
      dst[c] = beta * original[c] + (1.0 - beta) * elementary[c];
  }
}

}  // namespace

Propagated propagate(const Episode& ep, const PropagationWeights& weights,
                     PropagationTrace* trace) {
  Propagated out;
  out.visual = combine(weights.w, weights.chosen, class_centroids(ep),
                       trace ? &trace->visual_weights : nullptr);
  out.semantic = combine(weights.w, weights.chosen, ep.semantic,
                         trace ? &trace->semantic_weights : nullptr);
  return out;
}

HallucinatedEpisode interpolate(const Episode& ep, const Propagated& elementary,
                                const HalluConfig& cfg, RngStream& rng) {
  cfg.validate();
  const std::size_t M = ep.num_classes();
  require(elementary.visual.rows() == M && elementary.visual.cols() == ep.visual.cols() &&
              elementary.semantic.rows() == M && elementary.semantic.cols() == ep.semantic.cols(),
          ErrorKind::kShape, "elementary hallucination shapes do not match the episode");
  HallucinatedEpisode hep;
  hep.betas.resize(M);
  for (std::size_t i = 0; i < M; ++i)
    hep.betas[i] = cfg.forced_beta ? *cfg.forced_beta : rng.beta(cfg.alpha1, cfg.alpha2);

  hep.visual = Matrix(ep.visual.rows(), ep.visual.cols());
  for (std::size_t r = 0; r < ep.visual.rows(); ++r) {
    const std::size_t i = ep.local_labels[r];
    mix_row(hep.visual.row(r), ep.visual.row(r), elementary.visual.row(i), hep.betas[i]);
  }
  hep.semantic = Matrix(M, ep.semantic.cols());
  for (std::size_t i = 0; i < M; ++i)
    mix_row(hep.semantic.row(i), ep.semantic.row(i), elementary.semantic.row(i), hep.betas[i]);
  hep.elementary_visual = elementary.visual;
  hep.elementary_semantic = elementary.semantic;
  hep.local_labels = ep.local_labels;
  return hep;
}

HallucinatedEpisode hallucinate(const Episode& ep, const HalluConfig& cfg, RngStream& rng,
                                PropagationTrace* trace, PropagationWeights* weights_out) {
  PropagationWeights weights = propagation_weights(ep, cfg, rng);
  const Propagated elementary = propagate(ep, weights, trace);
  HallucinatedEpisode hep = interpolate(ep, elementary, cfg, rng);
  if (weights_out) *weights_out = std::move(weights);
  return hep;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

}  // namespace

std::string dump_hallucination(const Episode& ep, const PropagationWeights& weights,
                               const HallucinatedEpisode& hep) {
  nlohmann::json j;
  j["class_ids"] = ep.class_ids;
  j["weights"] = matrix_json(weights.w);
  j["chosen"] = weights.chosen;
  j["elementary_visual"] = matrix_json(hep.elementary_visual);
  j["elementary_semantic"] = matrix_json(hep.elementary_semantic);
  j["betas"] = hep.betas;
  return j.dump(2);
}

}  // namespace lpl
