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

#include <array>
#include <cstddef>
#include <cstdint>

#include "lpl/matrix.hpp"
#include "lpl/rng.hpp"

namespace lpl {

enum class Activation { kRelu, kIdentity };

/// Two affine layers with an activation in between:
///   y = W2 * act(W1 * x + b1) + b2
/// applied row-wise to a batch. Biases are stored as 1 x n matrices so that
/// every parameter is a Matrix and optimizers treat them uniformly.
class MappingNet {
 public:
  static constexpr std::size_t kParamCount = 4;

  MappingNet(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
             Activation activation);

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static MappingNet random(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                           Activation activation, RngStream& rng);

  std::size_t input_dim() const noexcept { return w1_.cols(); }
  std::size_t hidden_dim() const noexcept { return w1_.rows(); }
  std::size_t output_dim() const noexcept { return w2_.rows(); }
  Activation activation() const noexcept { return activation_; }

  const Matrix& w1() const noexcept { return w1_; }
  const Matrix& b1() const noexcept { return b1_; }
  const Matrix& w2() const noexcept { return w2_; }
  const Matrix& b2() const noexcept { return b2_; }

  /// Mutable access to {W1, b1, W2, b2}. Invalidates outstanding caches.
  std::array<Matrix*, kParamCount> parameters();
  std::array<const Matrix*, kParamCount> parameters() const;

  /// Replaces every parameter; shapes must match the current ones.
  void set_parameters(Matrix w1, Matrix b1, Matrix w2, Matrix b2);

  struct Cache {
    const MappingNet* owner = nullptr;
    std::uint64_t generation = 0;
    Matrix input;
    Matrix pre_activation;
    Matrix hidden;
  };

  struct Forward {
    Matrix output;
    Cache cache;
  };

  struct Gradients {
    Matrix w1, b1, w2, b2;
    Matrix input;
    std::array<const Matrix*, kParamCount> parameters() const { return {&w1, &b1, &w2, &b2}; }
  };

  Forward forward(const Matrix& input) const;
  /// Forward pass without keeping intermediates.
  Matrix apply(const Matrix& input) const;
  /// Exact gradients of sum(output_grad .* output) with respect to every
  /// parameter and the input. The cache must come from forward() on this
  /// very object with unchanged parameters.
  Gradients backward(const Cache& cache, const Matrix& output_grad) const;

  bool all_finite() const noexcept;

 private:
  void check_shapes() const;

  Matrix w1_, b1_, w2_, b2_;
  Activation activation_;
  std::uint64_t generation_ = 0;
};

}  // namespace lpl
