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

#include "lpl/mapping_net.hpp"

#include <cmath>
#include <string>

#include "lpl/error.hpp"

namespace lpl {

MappingNet::MappingNet(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                       Activation activation)
    : w1_(hidden_dim, input_dim),
      b1_(1, hidden_dim),
      w2_(output_dim, hidden_dim),
      b2_(1, output_dim),
      activation_(activation) {
  require(input_dim >= 1 && hidden_dim >= 1 && output_dim >= 1, ErrorKind::kParameter,
          "mapping net dimensions must be positive");
}

MappingNet MappingNet::random(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t output_dim, Activation activation, RngStream& rng) {
  MappingNet net(input_dim, hidden_dim, output_dim, activation);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (double& x : net.w1_.data()) x = (2.0 * rng.uniform() - 1.0) * bound1;
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (double& x : net.w2_.data()) x = (2.0 * rng.uniform() - 1.0) * bound2;
  return net;
}

std::array<Matrix*, MappingNet::kParamCount> MappingNet::parameters() {
  ++generation_;
  return {&w1_, &b1_, &w2_, &b2_};
}

std::array<const Matrix*, MappingNet::kParamCount> MappingNet::parameters() const {
  return {&w1_, &b1_, &w2_, &b2_};
}

void MappingNet::set_parameters(Matrix w1, Matrix b1, Matrix w2, Matrix b2) {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  require(same(w1, w1_) && same(b1, b1_) && same(w2, w2_) && same(b2, b2_), ErrorKind::kShape,
          "set_parameters shapes differ from the network's");
  w1_ = std::move(w1);
  b1_ = std::move(b1);
  w2_ = std::move(w2);
  b2_ = std::move(b2);
  ++generation_;
}

bool MappingNet::all_finite() const noexcept {
  return w1_.all_finite() && b1_.all_finite() && w2_.all_finite() && b2_.all_finite();
}

MappingNet::Forward MappingNet::forward(const Matrix& input) const {
  require(input.cols() == input_dim(), ErrorKind::kShape,
          "mapping net expects " + std::to_string(input_dim()) + " input columns, got " +
              std::to_string(input.cols()));
  Forward f;
  f.cache.owner = this;
  f.cache.generation = generation_;
  f.cache.input = input;
  f.cache.pre_activation = matmul_nt(input, w1_);
  for (std::size_t r = 0; r < input.rows(); ++r)
    for (std::size_t j = 0; j < hidden_dim(); ++j) f.cache.pre_activation(r, j) += b1_(0, j);
  f.cache.hidden = f.cache.pre_activation;
  if (activation_ == Activation::kRelu) {
    for (double& x : f.cache.hidden.data()) x = x > 0.0 ? x : 0.0;
  }
  f.output = matmul_nt(f.cache.hidden, w2_);
  for (std::size_t r = 0; r < input.rows(); ++r)
    for (std::size_t j = 0; j < output_dim(); ++j) f.output(r, j) += b2_(0, j);
  ensure_finite(f.output, "mapping net output");
  return f;
}

Matrix MappingNet::apply(const Matrix& input) const { return forward(input).output; }

MappingNet::Gradients MappingNet::backward(const Cache& cache, const Matrix& output_grad) const {
  require(cache.owner == this && cache.generation == generation_, ErrorKind::kUsage,
          "stale or foreign forward cache passed to backward");
  require(output_grad.rows() == cache.input.rows() && output_grad.cols() == output_dim(),
          ErrorKind::kShape, "output gradient shape does not match the forward output");
  Gradients g;
  g.w2 = matmul_tn(output_grad, cache.hidden);
  g.b2 = Matrix(1, output_dim());
  for (std::size_t r = 0; r < output_grad.rows(); ++r)
    for (std::size_t j = 0; j < output_dim(); ++j) g.b2(0, j) += output_grad(r, j);

  Matrix grad_pre = matmul(output_grad, w2_);
  if (activation_ == Activation::kRelu) {
    for (std::size_t i = 0; i < grad_pre.size(); ++i)
      if (!(cache.pre_activation.data()[i] > 0.0)) grad_pre.data()[i] = 0.0;
  }
  g.w1 = matmul_tn(grad_pre, cache.input);
  g.b1 = Matrix(1, hidden_dim());
  for (std::size_t r = 0; r < grad_pre.rows(); ++r)
    for (std::size_t j = 0; j < hidden_dim(); ++j) g.b1(0, j) += grad_pre(r, j);
  g.input = matmul(grad_pre, w1_);
  return g;
}

}  // namespace lpl
