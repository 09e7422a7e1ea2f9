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

#include "lpl/optimizer.hpp"

#include <cmath>
#include <string>

#include "lpl/error.hpp"

namespace lpl {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd_momentum";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::kSgdMomentum;
  fail(ErrorKind::kParameter, "unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kParameter,
          "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::kParameter, "momentum must be in [0,1)");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorKind::kParameter,
          "adam betas must be in (0,1)");
  require(eps > 0.0, ErrorKind::kParameter, "adam eps must be positive");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  require(params.size() == grads.size(), ErrorKind::kShape,
          "optimizer got " + std::to_string(params.size()) + " parameters and " +
              std::to_string(grads.size()) + " gradients");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->rows() == grads[i]->rows() && params[i]->cols() == grads[i]->cols(),
            ErrorKind::kShape, "gradient " + std::to_string(i) + " shape mismatch");
  }
  if (first_.empty()) {
    for (const Matrix* p : params) {
      first_.emplace_back(p->rows(), p->cols());
      if (config_.kind == OptimizerKind::kAdam) second_.emplace_back(p->rows(), p->cols());
    }
  }
  require(first_.size() == params.size(), ErrorKind::kShape,
          "parameter count changed between optimizer steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(first_[i].rows() == params[i]->rows() && first_[i].cols() == params[i]->cols(),
            ErrorKind::kShape, "parameter " + std::to_string(i) + " changed shape");
  }

  ++step_count_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgdMomentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      auto g = grads[i]->data();
      auto vel = first_[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        vel[k] = config_.momentum * vel[k] - lr * g[k];
        p[k] += vel[k];
      }
    }
    return;
  }

  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = first_[i].data();
    auto v = second_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace lpl
