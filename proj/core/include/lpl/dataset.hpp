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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lpl/matrix.hpp"
#include "lpl/rng.hpp"

namespace lpl {

/// One attribute row per class id 0..L-1. Rows are unit-norm.
struct AttributeTable {
  Matrix values;

  std::size_t num_classes() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
  std::span<const double> row(std::size_t class_id) const { return values.row(class_id); }

  /// L2-normalizes every row whose norm is not already 1 within 1e-6.
  /// Zero-norm rows are a validation error.
  static AttributeTable normalized(Matrix values);
};

/// Features, labels and class attributes with a seen/unseen split and
/// train/test index sets. Construct, then call validate(); every loader and
/// generator in this library does so before returning.
struct SplitDataset {
  Matrix features;
  std::vector<std::size_t> labels;
  AttributeTable attributes;
  std::vector<std::size_t> seen_classes;
  std::vector<std::size_t> unseen_classes;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_seen_idx;
  std::vector<std::size_t> test_unseen_idx;
  /// Set once features have been passed through a trained feature refiner.
  bool refined = false;

  std::size_t num_samples() const noexcept { return features.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  std::size_t attribute_dim() const noexcept { return attributes.dim(); }
  std::size_t num_classes() const noexcept { return attributes.num_classes(); }

  void validate() const;
};

enum class DataFormat { kCsv, kBinary };

DataFormat parse_data_format(std::string_view name);

struct DatasetFiles {
  std::filesystem::path features;
  std::filesystem::path attributes;
  std::filesystem::path split;
  /// Binary format only: per-sample labels as an N x 1 LPLF matrix.
  std::filesystem::path labels;
};

/// Canonical file names inside a dataset directory.
DatasetFiles dataset_files(const std::filesystem::path& dir, DataFormat format);
/// Labels file that accompanies a binary features file.
std::filesystem::path labels_path_for(const std::filesystem::path& features_path);

SplitDataset load_dataset(const std::filesystem::path& features_path,
                          const std::filesystem::path& attributes_path,
                          const std::filesystem::path& split_path, DataFormat format);
SplitDataset load_dataset(const std::filesystem::path& dir, DataFormat format);
/// Picks binary when features.lplf exists in `dir`, CSV otherwise.
SplitDataset load_dataset(const std::filesystem::path& dir);

void save_dataset(const SplitDataset& ds, const std::filesystem::path& dir, DataFormat format);

/// Content hash over every file of a saved dataset.
std::string dataset_fingerprint(const std::filesystem::path& dir);

struct SynthConfig {
  std::size_t seen_count = 40;
  std::size_t unseen_count = 10;
  std::size_t attr_dim = 16;
  std::size_t feat_dim = 32;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 30;
  double noise_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  /// Non-fatal remarks, e.g. feat_dim < attr_dim.
  std::vector<std::string> warnings() const;
};

struct SyntheticBenchmark {
  SplitDataset dataset;
  /// Hidden attribute-to-feature map (feat_dim x attr_dim); mean of class k is G * a_k.
  Matrix ground_truth_map;
};

/// Attribute rows are Gaussian draws normalized to unit length, G has
/// N(0, 1/attr_dim) entries, and samples are G a_k plus isotropic Gaussian
/// noise. Seen classes take ids [0, seen_count); seen classes get train and
/// test samples, unseen classes test samples only. Values are rounded to
/// float32 so the dataset survives a binary save/load unchanged.
SyntheticBenchmark generate_synthetic_benchmark(const SynthConfig& cfg);
SplitDataset generate_synthetic(const SynthConfig& cfg);

/// Read-only view exposing seen classes and training samples only. Any
/// attempt to read an unseen attribute row or a non-training sample throws a
/// usage error, and every read is counted so callers can audit a run.
class TrainingView {
 public:
  explicit TrainingView(const SplitDataset& ds);

  const std::vector<std::size_t>& seen_classes() const noexcept { return ds_.seen_classes; }
  const std::vector<std::size_t>& train_indices() const noexcept { return ds_.train_idx; }
  const std::vector<std::size_t>& train_indices_of(std::size_t class_id) const;

  std::span<const double> feature(std::size_t sample) const;
  std::size_t label(std::size_t sample) const;
  std::span<const double> attribute(std::size_t class_id) const;

  std::size_t feature_dim() const noexcept { return ds_.feature_dim(); }
  std::size_t attribute_dim() const noexcept { return ds_.attribute_dim(); }
  bool refined() const noexcept { return ds_.refined; }

  struct AccessLog {
    std::size_t feature_reads = 0;
    std::size_t attribute_reads = 0;
    std::set<std::size_t> samples;
    std::set<std::size_t> classes;
  };
  const AccessLog& access_log() const noexcept { return log_; }

 private:
  const SplitDataset& ds_;
  std::vector<bool> is_train_;
  std::vector<bool> is_seen_;
  std::vector<std::vector<std::size_t>> per_class_;
  mutable AccessLog log_;
};

/// M seen classes by N training samples, class-major.
struct Episode {
  std::vector<std::size_t> class_ids;
  std::vector<std::size_t> sample_idx;
  Matrix visual;
  Matrix semantic;
  std::vector<std::size_t> local_labels;

  std::size_t num_classes() const noexcept { return class_ids.size(); }
  std::size_t shots() const noexcept {
    return class_ids.empty() ? 0 : sample_idx.size() / class_ids.size();
  }
};

Episode sample_episode(const TrainingView& view, std::size_t classes, std::size_t shots,
                       RngStream& rng);
Episode sample_episode(const SplitDataset& ds, std::size_t classes, std::size_t shots,
                       RngStream& rng);

}  // namespace lpl
