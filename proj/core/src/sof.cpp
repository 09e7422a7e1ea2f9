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

#include "lpl/sof.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "lpl/error.hpp"
#include "lpl/matrix_io.hpp"

namespace lpl {

RefinerParams RefinerParams::identity(std::size_t feat_dim, std::size_t attr_dim) {
  return {Matrix::identity(feat_dim), Matrix(feat_dim, attr_dim)};
}

void SofConfig::validate() const {
  require(batch_size >= 1, ErrorKind::kParameter, "SoF batch size must be positive");
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kParameter, "tau_sof must be positive");
  optimizer.validate();
}

SofLoss sof_loss(const Matrix& refined_sem, std::span<const std::size_t> labels,
                 const AttributeTable& attributes, std::span<const std::size_t> seen_classes,
                 double tau) {
  require(labels.size() == refined_sem.rows(), ErrorKind::kShape, "one label per row required");
  require(refined_sem.cols() == attributes.dim(), ErrorKind::kShape,
          "projected features have " + std::to_string(refined_sem.cols()) +
              " columns, attributes " + std::to_string(attributes.dim()));
  require(!seen_classes.empty(), ErrorKind::kValidation, "no seen classes");
  std::vector<std::size_t> position(attributes.num_classes(), seen_classes.size());
  for (std::size_t p = 0; p < seen_classes.size(); ++p) position[seen_classes[p]] = p;
  for (std::size_t y : labels) {
    require(y < position.size() && position[y] < seen_classes.size(), ErrorKind::kValidation,
            "label " + std::to_string(y) + " is not a seen class");
  }

  const std::size_t L = seen_classes.size();
  SofLoss out;
  out.grad = Matrix(refined_sem.rows(), refined_sem.cols());
  if (refined_sem.rows() == 0) return out;
  std::vector<double> cosines(L), logits(L);
  const double inv_rows = 1.0 / static_cast<double>(refined_sem.rows());
  for (std::size_t i = 0; i < refined_sem.rows(); ++i) {
    auto z = refined_sem.row(i);
    const double z_norm = l2_norm(z);
    for (std::size_t l = 0; l < L; ++l) {
      auto a = attributes.row(seen_classes[l]);
      const double denom = z_norm * l2_norm(a);
      cosines[l] = denom > 0.0 ? dot(z, a) / denom : 0.0;
      logits[l] = tau * cosines[l];
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - peak);
    const double log_z = peak + std::log(sum);
    const std::size_t target = position[labels[i]];
    out.loss += (log_z - logits[target]) * inv_rows;

    if (z_norm == 0.0) continue;
    auto g = out.grad.row(i);
    for (std::size_t l = 0; l < L; ++l) {
      auto a = attributes.row(seen_classes[l]);
      const double a_norm = l2_norm(a);
      const double prob = std::exp(logits[l] - log_z);
      const double g_logit = (prob - (l == target ? 1.0 : 0.0)) * tau * inv_rows;
      for (std::size_t c = 0; c < g.size(); ++c)
        g[c] += g_logit * (a[c] / (z_norm * a_norm) - cosines[l] * z[c] / (z_norm * z_norm));
    }
  }
  return out;
}

SofGradients sof_gradients(const RefinerParams& params, const Matrix& x,
                           std::span<const std::size_t> labels, const AttributeTable& attributes,
                           std::span<const std::size_t> seen_classes, double tau) {
  require(x.cols() == params.refiner.rows() && params.refiner.cols() == params.projection.rows(),
          ErrorKind::kShape, "features do not match the refiner");
  const Matrix refined = matmul(x, params.refiner);
  const SofLoss l = sof_loss(matmul(refined, params.projection), labels, attributes,
                             seen_classes, tau);
  SofGradients out;
  out.loss = l.loss;
  out.projection = matmul_tn(refined, l.grad);
  out.refiner = matmul_tn(x, matmul_nt(l.grad, params.projection));
  return out;
}

namespace {

double total_variance(const Matrix& x) {
  if (x.rows() == 0) return 0.0;
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(x.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) total += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
  return total / static_cast<double>(x.rows());
}

// The cosine objective never constrains the refiner's scale, and its
// gradients are orthogonal to the projected features, so the scale only
// grows. Rescale so refined training features keep the raw total variance;
// the projection absorbs the inverse factor, leaving every cosine unchanged.
void rescale_to_raw_spread(const TrainingView& view, RefinerParams& p) {
  const auto& idx = view.train_indices();
  Matrix raw(idx.size(), view.feature_dim());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto f = view.feature(idx[r]);
    std::copy(f.begin(), f.end(), raw.row(r).begin());
  }
  const double before = total_variance(raw);
  const double after = total_variance(matmul(raw, p.refiner));
  if (before <= 0.0 || after <= 0.0) return;
  const double s = std::sqrt(before / after);
  for (double& x : p.refiner.data()) x *= s;
  for (double& x : p.projection.data()) x /= s;
}

}  // namespace

SofResult train_sof(const TrainingView& view, const SofConfig& cfg) {
  cfg.validate();
  const std::size_t C = view.feature_dim();
  const std::size_t D = view.attribute_dim();
  const RngStream root(cfg.seed);
  RngStream init_rng = root.derive("sof-init");
  RngStream order_rng = root.derive("sof-order");

  SofResult result{RefinerParams::identity(C, D), {}};
  const double bound = 1.0 / std::sqrt(static_cast<double>(C));
  for (double& x : result.params.projection.data()) x = (2.0 * init_rng.uniform() - 1.0) * bound;

  // Only the seen attribute rows pass through the view; build a local table.
  const auto& seen = view.seen_classes();
  std::size_t max_id = 0;
  for (std::size_t k : seen) max_id = std::max(max_id, k);
  AttributeTable table{Matrix(max_id + 1, D)};
  for (std::size_t k : seen) {
    auto a = view.attribute(k);
    std::copy(a.begin(), a.end(), table.values.row(k).begin());
  }

  Optimizer optimizer(cfg.optimizer);
  std::vector<std::size_t> order = view.train_indices();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Matrix x(end - start, C);
      std::vector<std::size_t> labels;
      for (std::size_t b = start; b < end; ++b) {
        auto f = view.feature(order[b]);
        std::copy(f.begin(), f.end(), x.row(b - start).begin());
        labels.push_back(view.label(order[b]));
      }
      RefinerParams& p = result.params;
      SofGradients g;
      try {
        g = sof_gradients(p, x, labels, table, seen, cfg.tau);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        fail(ErrorKind::kTraining, "SoF diverged in epoch " + std::to_string(epoch + 1));
      }
      if (!std::isfinite(g.loss)) {
        fail(ErrorKind::kTraining, "SoF loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      std::array<Matrix*, 2> params{&p.refiner, &p.projection};
      std::array<const Matrix*, 2> grads{&g.refiner, &g.projection};
      optimizer.step(params, grads);
      epoch_loss += g.loss;
      ++batches;
    }
    const double mean = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    if (!std::isfinite(mean) || !result.params.refiner.all_finite() ||
        !result.params.projection.all_finite()) {
      fail(ErrorKind::kTraining, "SoF diverged in epoch " + std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(mean);
  }
  if (cfg.epochs > 0) rescale_to_raw_spread(view, result.params);
  return result;
}

SofResult train_sof(const SplitDataset& ds, const SofConfig& cfg) {
  TrainingView view(ds);
  return train_sof(view, cfg);
}

SplitDataset refine_features(const SplitDataset& ds, const RefinerParams& params) {
  require(params.refiner.rows() == ds.feature_dim() && params.refiner.cols() == ds.feature_dim(),
          ErrorKind::kShape,
          "refiner is " + std::to_string(params.refiner.rows()) + "x" +
              std::to_string(params.refiner.cols()) + " but features have " +
              std::to_string(ds.feature_dim()) + " columns");
  SplitDataset out = ds;
  if (params.refiner != Matrix::identity(ds.feature_dim())) {
    out.features = matmul(ds.features, params.refiner);
  }
  out.refined = true;
  return out;
}

void save_refiner(const SofResult& result, const SofConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create " + dir.string());
  write_lplf(dir / "sof_refiner.lplf", result.params.refiner);
  write_lplf(dir / "sof_projection.lplf", result.params.projection);
  nlohmann::ordered_json j;
  j["feat_dim"] = result.params.refiner.rows();
  j["attr_dim"] = result.params.projection.cols();
  j["seed"] = cfg.seed;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["optimizer"] = to_string(cfg.optimizer.kind);
  j["learning_rate"] = cfg.optimizer.learning_rate;
  j["momentum"] = cfg.optimizer.momentum;
  j["tau_sof"] = cfg.tau;
  j["loss_trace"] = result.loss_trace;
  write_file_bytes(dir / "sof.json", j.dump(2) + "\n");
}

bool has_refiner(const std::filesystem::path& dir) {
  return std::filesystem::exists(dir / "sof_refiner.lplf");
}

RefinerParams load_refiner(const std::filesystem::path& dir) {
  RefinerParams p{read_lplf(dir / "sof_refiner.lplf"), read_lplf(dir / "sof_projection.lplf")};
  require(p.refiner.rows() == p.refiner.cols() && p.projection.rows() == p.refiner.rows(),
          ErrorKind::kFormat, dir.string() + ": inconsistent refiner shapes");
  return p;
}

}  // namespace lpl
