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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "lpl/error.hpp"
#include "lpl/mapping_net.hpp"
#include "lpl/matrix.hpp"
#include "lpl/optimizer.hpp"
#include "lpl/rng.hpp"
#include "oracles.hpp"

using namespace lpl;

TEST_SUITE("matmul") {
  TEST_CASE("identity is a left unit") {
    const Matrix m{{1.5, -2.0}, {0.25, 4.0}, {3.0, 7.0}};
    CHECK(matmul(Matrix::identity(3), m) == m);
  }

  TEST_CASE("hand arithmetic") {
    const Matrix out = matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{1}, {1}});
    CHECK(out == Matrix{{3}, {7}});
  }

  TEST_CASE("agrees with the triple-loop oracle") {
    RngStream rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix a = oracle::random_matrix(5, 7, rng, 3.0);
      const Matrix b = oracle::random_matrix(7, 2, rng, 3.0);
      CHECK(max_abs_diff(matmul(a, b), oracle::triple_loop_matmul(a, b)) < 1e-12);
      CHECK(max_abs_diff(matmul_tn(transpose(a), b), oracle::triple_loop_matmul(a, b)) < 1e-12);
      CHECK(max_abs_diff(matmul_nt(a, transpose(b)), oracle::triple_loop_matmul(a, b)) < 1e-12);
    }
  }

  TEST_CASE("dimension mismatch is a shape error") {
    try {
      matmul(Matrix(2, 3), Matrix(2, 3));
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kShape);
    }
  }

  TEST_CASE("overflow is reported instead of returned") {
    const double big = std::numeric_limits<double>::max();
    CHECK_THROWS_AS(matmul(Matrix{{big, big}}, Matrix{{big}, {big}}), Error);
  }
}

TEST_SUITE("cosine") {
  TEST_CASE("closed-form values") {
    const std::vector<double> e0{1, 0}, e1{0, 1}, diag{1, 1};
    CHECK(cosine(e0, e0).value == 1.0);
    CHECK(cosine(e0, e1).value == 0.0);
    CHECK(cosine(diag, e0).value == doctest::Approx(0.7071067811865475).epsilon(1e-15));
  }

  TEST_CASE("zero norm is flagged, never NaN") {
    const std::vector<double> zero{0, 0}, e0{1, 0};
    const CosineResult r = cosine(zero, e0);
    CHECK(r.degenerate);
    CHECK(r.value == 0.0);
    CHECK_FALSE(cosine(e0, e0).degenerate);
  }

  TEST_CASE("scale invariance and range") {
    RngStream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix uv = oracle::random_matrix(2, 9, rng, 10.0);
      const double c = std::exp(8.0 * rng.uniform() - 4.0);
      std::vector<double> scaled(uv.row(0).begin(), uv.row(0).end());
      for (double& x : scaled) x *= c;
      const double base = cosine(uv.row(0), uv.row(1)).value;
      CHECK(std::abs(cosine(scaled, uv.row(1)).value - base) < 1e-12);
      CHECK(base >= -1.0);
      CHECK(base <= 1.0);
      CHECK(cosine(uv.row(0), uv.row(0)).value == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_SUITE("softmax") {
  TEST_CASE("equal scores give a uniform vector") {
    const std::vector<double> s(5, 0.3);
    for (double t : {0.01, 1.0, 50.0}) {
      for (double p : softmax(s, t)) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
    }
  }

  TEST_CASE("direct exp-ratio evaluation") {
    const std::vector<double> s{0.9, 0.1};
    const auto p = softmax(s, 0.2);
    CHECK(std::abs(p[0] - 0.9820137900379085) < 1e-15);
    CHECK(std::abs(p[1] - 0.01798620996209156) < 1e-15);
  }

  TEST_CASE("large ranges do not overflow") {
    const std::vector<double> s{3.0, 1003.0};
    const auto p = softmax(s, 1.0);
    CHECK(p[0] < 1e-300);
    CHECK(p[1] == 1.0);
  }

  TEST_CASE("sums to one for wide random inputs") {
    RngStream rng(99);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> s(1 + rng.uniform_index(30));
      for (double& x : s) x = 1500.0 * (rng.uniform() - 0.5);
      const double t = std::exp(6.0 * rng.uniform() - 3.0);
      double total = 0.0;
      for (double p : softmax(s, t)) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }

  TEST_CASE("non-positive temperature is rejected") {
    const std::vector<double> s{1.0, 2.0};
    CHECK_THROWS_AS(softmax(s, 0.0), Error);
    CHECK_THROWS_AS(softmax(s, -1.0), Error);
  }
}

namespace {

// Scalar recomputation of one output element of the mapping net.
double scalar_forward(const MappingNet& net, const Matrix& input, std::size_t row, std::size_t out) {
  double y = net.b2()(0, out);
  for (std::size_t h = 0; h < net.hidden_dim(); ++h) {
    double pre = net.b1()(0, h);
    for (std::size_t i = 0; i < net.input_dim(); ++i) pre += net.w1()(h, i) * input(row, i);
    if (net.activation() == Activation::kRelu && pre < 0.0) pre = 0.0;
    y += net.w2()(out, h) * pre;
  }
  return y;
}

double weighted_sum(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * weights.data()[i];
  return s;
}

}  // namespace

TEST_SUITE("mapping net") {
  TEST_CASE("identity network passes input through") {
    MappingNet net(3, 3, 3, Activation::kIdentity);
    net.set_parameters(Matrix::identity(3), Matrix(1, 3), Matrix::identity(3), Matrix(1, 3));
    const Matrix x{{1, -2, 3}, {0.5, 0, -7}};
    CHECK(net.apply(x) == x);
  }

  TEST_CASE("dead relu outputs the output bias") {
    MappingNet net(2, 3, 2, Activation::kRelu);
    Matrix w1(3, 2, 1.0);
    net.set_parameters(w1, Matrix(1, 3, -10.0), Matrix(2, 3, 4.0), Matrix{{0.25, -1.5}});
    const Matrix out = net.apply(Matrix{{1, 2}, {-3, 0.5}});
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(out(r, 0) == 0.25);
      CHECK(out(r, 1) == -1.5);
    }
  }

  TEST_CASE("forward matches scalar recomputation") {
    RngStream rng(21);
    for (Activation act : {Activation::kRelu, Activation::kIdentity}) {
      const MappingNet net = MappingNet::random(6, 9, 4, act, rng);
      const Matrix x = oracle::random_matrix(7, 6, rng, 2.0);
      const Matrix out = net.apply(x);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t o = 0; o < net.output_dim(); ++o)
          CHECK(std::abs(out(r, o) - scalar_forward(net, x, r, o)) < 1e-12);
    }
  }

  TEST_CASE("input shape mismatch") {
    RngStream rng(1);
    const MappingNet net = MappingNet::random(3, 4, 2, Activation::kRelu, rng);
    CHECK_THROWS_AS(net.forward(Matrix(2, 5)), Error);
  }

  TEST_CASE("zero output gradient gives zero gradients") {
    RngStream rng(2);
    const MappingNet net = MappingNet::random(3, 4, 2, Activation::kRelu, rng);
    const auto f = net.forward(oracle::random_matrix(5, 3, rng));
    const auto g = net.backward(f.cache, Matrix(5, 2));
    for (const Matrix* m : {&g.w1, &g.b1, &g.w2, &g.b2, &g.input})
      for (double x : m->data()) CHECK(x == 0.0);
  }

  TEST_CASE("identity net with sum loss has all-ones input gradient") {
    MappingNet net(4, 4, 4, Activation::kIdentity);
    net.set_parameters(Matrix::identity(4), Matrix(1, 4), Matrix::identity(4), Matrix(1, 4));
    RngStream rng(3);
    const auto f = net.forward(oracle::random_matrix(3, 4, rng));
    const auto g = net.backward(f.cache, Matrix(3, 4, 1.0));
    for (double x : g.input.data()) CHECK(x == 1.0);
  }

  TEST_CASE("stale cache is a usage error") {
    RngStream rng(4);
    MappingNet net = MappingNet::random(3, 4, 2, Activation::kRelu, rng);
    const auto f = net.forward(oracle::random_matrix(2, 3, rng));
    net.parameters()[0]->data()[0] += 1.0;
    try {
      net.backward(f.cache, Matrix(2, 2));
      FAIL("expected a usage error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
    }
    const MappingNet other = MappingNet::random(3, 4, 2, Activation::kRelu, rng);
    const auto f2 = net.forward(Matrix(2, 3));
    CHECK_THROWS_AS(other.backward(f2.cache, Matrix(2, 2)), Error);
  }

  TEST_CASE("analytic gradients match central differences over 20 configurations") {
    RngStream rng(2024);
    for (int config = 0; config < 20; ++config) {
      const std::size_t in = 1 + rng.uniform_index(6);
      const std::size_t hidden = 1 + rng.uniform_index(8);
      const std::size_t out = 1 + rng.uniform_index(5);
      const std::size_t batch = 1 + rng.uniform_index(6);
      const Activation act = config % 4 == 3 ? Activation::kIdentity : Activation::kRelu;
      MappingNet net = MappingNet::random(in, hidden, out, act, rng);
      for (double& b : net.parameters()[1]->data()) b = 0.3 * (rng.uniform() - 0.5);
      Matrix x = oracle::random_matrix(batch, in, rng, 2.0);
      const Matrix weights = oracle::random_matrix(batch, out, rng);

      const auto f = net.forward(x);
      const auto g = net.backward(f.cache, weights);
      auto loss = [&] { return weighted_sum(net.apply(x), weights); };

      const std::array<const Matrix*, 4> analytic{&g.w1, &g.b1, &g.w2, &g.b2};
      for (std::size_t p = 0; p < 4; ++p) {
        Matrix& param = *net.parameters()[p];
        const Matrix numeric = oracle::central_difference(param, loss);
        CHECK(oracle::relative_error(*analytic[p], numeric) < 1e-4);
      }
      const Matrix numeric_input = oracle::central_difference(x, loss);
      CHECK(oracle::relative_error(g.input, numeric_input) < 1e-4);
    }
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("zero gradient and zero velocity is a fixed point") {
    for (OptimizerKind kind : {OptimizerKind::kSgdMomentum, OptimizerKind::kAdam}) {
      Optimizer opt({kind, 0.1});
      Matrix p{{1.0, -2.0}};
      const Matrix g(1, 2);
      std::array<Matrix*, 1> params{&p};
      std::array<const Matrix*, 1> grads{&g};
      opt.step(params, grads);
      CHECK(p == Matrix{{1.0, -2.0}});
      CHECK(opt.step_count() == 1);
    }
  }

  TEST_CASE("plain descent step") {
    OptimizerConfig cfg{OptimizerKind::kSgdMomentum, 0.1};
    cfg.momentum = 0.0;
    Optimizer opt(cfg);
    Matrix p{{0.0}};
    const Matrix g{{1.0}};
    std::array<Matrix*, 1> params{&p};
    std::array<const Matrix*, 1> grads{&g};
    opt.step(params, grads);
    CHECK(p(0, 0) == doctest::Approx(-0.1).epsilon(1e-15));
  }

  TEST_CASE("momentum accumulates velocity") {
    Optimizer opt({OptimizerKind::kSgdMomentum, 0.1, 0.5});
    Matrix p{{0.0}};
    const Matrix g{{1.0}};
    std::array<Matrix*, 1> params{&p};
    std::array<const Matrix*, 1> grads{&g};
    opt.step(params, grads);
    opt.step(params, grads);
    // v1 = -0.1, v2 = 0.5 * -0.1 - 0.1
    CHECK(p(0, 0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(opt.step_count() == 2);
  }

  TEST_CASE("adam matches a hand-stepped trace on x^2") {
    // lr 0.1, betas (0.9, 0.999), eps 1e-8, starting from x = 1.
    const double expected[] = {0.9000000005, 0.8004122286917927, 0.70158627294603};
    Optimizer opt({OptimizerKind::kAdam, 0.1});
    Matrix x{{1.0}};
    for (double want : expected) {
      const Matrix g{{2.0 * x(0, 0)}};
      std::array<Matrix*, 1> params{&x};
      std::array<const Matrix*, 1> grads{&g};
      opt.step(params, grads);
      CHECK(std::abs(x(0, 0) - want) < 1e-12);
    }
    CHECK(opt.step_count() == 3);
  }

  TEST_CASE("shape mismatch") {
    Optimizer opt({OptimizerKind::kAdam, 0.1});
    Matrix p(2, 2);
    const Matrix g(2, 3);
    std::array<Matrix*, 1> params{&p};
    std::array<const Matrix*, 1> grads{&g};
    CHECK_THROWS_AS(opt.step(params, grads), Error);
  }

  TEST_CASE("invalid hyper-parameters") {
    CHECK_THROWS_AS(Optimizer({OptimizerKind::kAdam, -1.0}), Error);
    CHECK_THROWS_AS(Optimizer({OptimizerKind::kSgdMomentum, 0.1, 1.0}), Error);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("same seed, same draws") {
    RngStream a(77), b(77);
    for (int i = 0; i < 1000; ++i) CHECK(a.beta(5.0, 1.0) == b.beta(5.0, 1.0));
    RngStream c(78);
    RngStream d(77);
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += c.uniform() == d.uniform();
    CHECK(equal < 5);
  }

  TEST_CASE("derived streams are stable and distinct") {
    const RngStream root(3);
    RngStream x = root.derive("sof"), y = root.derive("sof"), z = root.derive("train");
    const double vx = x.uniform();
    CHECK(vx == y.uniform());
    CHECK(vx != z.uniform());
  }

  TEST_CASE("beta empirical means") {
    struct Case {
      double a1, a2;
    };
    for (Case c : {Case{1, 1}, Case{5, 1}, Case{2, 2}, Case{0.5, 0.5}}) {
      RngStream rng(12345);
      double total = 0.0;
      for (int i = 0; i < 100000; ++i) {
        const double x = rng.beta(c.a1, c.a2);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        total += x;
      }
      CHECK(std::abs(total / 100000.0 - c.a1 / (c.a1 + c.a2)) < 0.01);
    }
  }

  TEST_CASE("gamma mean and variance") {
    RngStream rng(8);
    for (double shape : {0.3, 1.0, 4.5}) {
      double s = 0, s2 = 0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        const double x = rng.gamma(shape);
        s += x;
        s2 += x * x;
      }
      const double mean = s / n;
      CHECK(std::abs(mean - shape) < 0.03 * std::max(1.0, shape));
      CHECK(std::abs(s2 / n - mean * mean - shape) < 0.06 * std::max(1.0, shape));
    }
  }

  TEST_CASE("non-positive shapes are rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(rng.beta(0.0, 1.0), Error);
    CHECK_THROWS_AS(rng.beta(1.0, -2.0), Error);
  }

  TEST_CASE("sampling without replacement") {
    RngStream rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const auto s = rng.sample_without_replacement(10, 7);
      std::vector<bool> seen(10, false);
      for (auto v : s) {
        CHECK(v < 10);
        CHECK_FALSE(seen[v]);
        seen[v] = true;
      }
    }
    CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), Error);
  }

  TEST_CASE("uniform index covers its range evenly") {
    RngStream rng(10);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  }
}
