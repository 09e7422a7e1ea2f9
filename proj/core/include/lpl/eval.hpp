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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpl/dataset.hpp"
#include "lpl/matrix.hpp"
#include "lpl/prototype.hpp"

namespace lpl {

/// argmax over prototypes of cos(prototype, feature) per feature row. Ties go
/// to the smallest class id.
std::vector<std::size_t> zsl_predict(const Matrix& prototypes, std::span<const std::size_t> class_ids,
                                     const Matrix& features);

/// Calibrated stacking: argmax of cos(p_y, x) - delta * [y seen].
std::vector<std::size_t> gzsl_predict(const Matrix& prototypes,
                                      std::span<const std::size_t> class_ids,
                                      const std::vector<bool>& seen_mask, const Matrix& features,
                                      double delta);

/// Best seen and best unseen candidate for each feature row. Calibrated
/// stacking only ever compares these two, so one scoring pass serves a
/// whole delta grid.
struct StackedScores {
  struct Row {
    double seen_score;
    std::size_t seen_id;
    double unseen_score;
    std::size_t unseen_id;
  };
  std::vector<Row> rows;
  bool has_seen = false;
  bool has_unseen = false;

  std::vector<std::size_t> predict(double delta) const;
};

StackedScores stack_scores(const Matrix& prototypes, std::span<const std::size_t> class_ids,
                           const std::vector<bool>& seen_mask, const Matrix& features);

struct ClassAccuracy {
  double mean = 0.0;
  std::map<std::size_t, double> per_class;
};

/// Unweighted mean over classes that have at least one sample.
ClassAccuracy per_class_accuracy(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels,
                                 std::span<const std::size_t> class_set);

/// 2US / (U + S), 0 when U + S = 0.
double harmonic_mean(double unseen, double seen);

struct EvalReport {
  /// ZSL accuracy over unseen classes.
  std::optional<double> T;
  std::optional<double> U;
  std::optional<double> S;
  std::optional<double> H;
  double delta = 0.0;
  /// Per-class ZSL accuracy.
  std::map<std::size_t, double> per_class;
  /// Per-class GZSL accuracy over seen and unseen test classes.
  std::map<std::size_t, double> per_class_gzsl;
};

EvalReport evaluate(const PrototypeModel& model, const SplitDataset& ds, double delta);

struct SweepResult {
  std::vector<EvalReport> reports;
  std::size_t best_index = 0;
  double best_delta() const { return reports.at(best_index).delta; }
};

/// 0, 0.02, ..., 1.0.
std::vector<double> default_delta_grid();

/// Evaluates every delta; best is the largest H, ties to the smallest delta.
SweepResult cs_sweep(const PrototypeModel& model, const SplitDataset& ds,
                     std::span<const double> deltas);

struct SimilarityMatrix {
  std::vector<std::size_t> class_ids;
  Matrix values;
  /// Rows whose prototype had zero norm.
  std::vector<bool> degenerate;
};

SimilarityMatrix prototype_similarity(const Matrix& prototypes,
                                      std::span<const std::size_t> class_ids);

/// Mean of the off-diagonal entries.
double mean_off_diagonal(const SimilarityMatrix& sim);

std::string report_csv(const EvalReport& report);
std::string per_class_csv(const EvalReport& report);
std::string sweep_csv(const SweepResult& sweep);
std::string similarity_csv(const SimilarityMatrix& sim);

}  // namespace lpl
