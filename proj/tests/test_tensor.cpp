// Copyright 2026 The biff Authors
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
#include <numeric>

#include "biff/error.hpp"
#include "biff/gradcheck.hpp"
#include "biff/nn.hpp"
#include "biff/optim.hpp"
#include "support.hpp"

using namespace biff;
using namespace biff::ops;
using biff::test::random_tensor;
using biff::test::values;

TEST_CASE("matmul matches triple loop") {
  Rng rng(1);
  const Tensor a = random_tensor({4, 3}, rng), b = random_tensor({3, 5}, rng);
  const Tensor c = matmul(a, b);
  REQUIRE(c.shape() == Shape{4, 5});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("linear equals matmul plus bias") {
  Rng rng(2);
  const Tensor x = random_tensor({2, 3}, rng), w = random_tensor({3, 4}, rng), b = random_tensor({4}, rng);
  const Tensor y = linear(x, w, &b);
  const Tensor ref = matmul(x, w);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(y(i, j) == doctest::Approx(ref(i, j) + b.data()[j]));
}

TEST_CASE("softmax rows sum to one and reject NaN") {
  Rng rng(3);
  const Tensor x = random_tensor({5, 7}, rng, -30, 30);
  const Tensor s = softmax(x);
  for (std::size_t i = 0; i < 5; ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(s(i, j) >= 0.0);
      t += s(i, j);
    }
    CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Tensor bad({1, 2}, {0.0, std::nan("")});
  CHECK_THROWS_AS(softmax(bad), NumericError);
}

TEST_CASE("softmax over a middle axis normalizes that axis") {
  Rng rng(4);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  const auto s = values(softmax(x, 1));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t c = 0; c < 4; ++c) {
      double t = 0.0;
      for (std::size_t b = 0; b < 3; ++b) t += s[(a * 3 + b) * 4 + c];
      CHECK(t == doctest::Approx(1.0));
    }
}

TEST_CASE("layer_norm gives zero mean and unit variance with identity affine") {
  Rng rng(5);
  const Tensor x = random_tensor({3, 16}, rng, -4, 9);
  const Tensor y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}), 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < 16; ++j) m += y(i, j);
    m /= 16;
    for (std::size_t j = 0; j < 16; ++j) v += (y(i, j) - m) * (y(i, j) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 16 == doctest::Approx(1.0));
  }
}

TEST_CASE("max pooling: ties to lowest row, empty input rejected") {
  const Tensor x({3, 2}, {1.0, 5.0, 4.0, 5.0, 4.0, -1.0});
  const MaxPool p = max_pool_rows(x);
  CHECK(values(p.values) == std::vector<double>{4.0, 5.0});
  CHECK(p.argmax == std::vector<std::size_t>{1, 0});
  CHECK_THROWS_AS(max_pool_rows(Tensor::zeros({0, 2})), EmptyPolylineError);
  const std::vector<std::size_t> offs{0, 1, 1, 3};
  CHECK_THROWS_AS(segment_max(x, offs), EmptyPolylineError);
}

TEST_CASE("interleave_heads lays out per-head blocks") {
  const Tensor a({1, 4}, {1, 2, 3, 4}), b({1, 4}, {5, 6, 7, 8});
  CHECK(values(interleave_heads(a, b, 2)) == std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8});
}

TEST_CASE("neighbor attention weights form a distribution per query and head") {
  Rng rng(6);
  const Tensor q = random_tensor({3, 4}, rng), k = random_tensor({7, 4}, rng), v = random_tensor({7, 4}, rng);
  const std::vector<std::size_t> offs{0, 1, 4, 7};
  AttentionWeights w;
  const Tensor out = neighbor_attention(q, k, v, offs, 2, &w);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t h = 0; h < 2; ++h) {
      double t = 0.0;
      for (std::size_t p = offs[i]; p < offs[i + 1]; ++p) t += w.weights[p * 2 + h];
      CHECK(std::abs(t - 1.0) < 1e-12);
    }
  // A single neighbour returns its value row exactly.
  for (std::size_t j = 0; j < 4; ++j) CHECK(out(0, j) == v(0, j));
}

TEST_CASE("neighbor attention matches a direct per-head computation") {
  Rng rng(7);
  const Tensor q = random_tensor({2, 6}, rng), k = random_tensor({5, 6}, rng), v = random_tensor({5, 4}, rng);
  const std::vector<std::size_t> offs{0, 2, 5};
  const Tensor out = neighbor_attention(q, k, v, offs, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t h = 0; h < 2; ++h) {
      std::vector<double> s;
      for (std::size_t p = offs[i]; p < offs[i + 1]; ++p) {
        double d = 0.0;
        for (std::size_t j = 0; j < 3; ++j) d += q(i, h * 3 + j) * k(p, h * 3 + j);
        s.push_back(std::exp(d / std::sqrt(3.0)));
      }
      const double z = std::accumulate(s.begin(), s.end(), 0.0);
      for (std::size_t j = 0; j < 2; ++j) {
        double o = 0.0;
        for (std::size_t p = offs[i]; p < offs[i + 1]; ++p) o += s[p - offs[i]] / z * v(p, h * 2 + j);
        CHECK(out(i, h * 2 + j) == doctest::Approx(o).epsilon(1e-12));
      }
    }
}

TEST_CASE("backward contract") {
  const Tensor x({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(scale(x, 2.0)), DimensionError);
  CHECK_THROWS_AS(backward(Tensor::scalar(1.0)), Error);
  {
    NoGradGuard guard;
    const Tensor y = sum(mul(x, x));
    CHECK_FALSE(y.requires_grad());
  }
  const Tensor y = sum(mul(x, x));
  backward(y);
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
}

TEST_CASE("gradients accumulate across backward calls on leaves") {
  const Tensor x({1}, {3.0}, true);
  backward(sum(mul(x, x)));
  backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(12.0));
}

// The library checker is compared against an independent derivative here, so a
// bug shared by backward() and check_gradients() would still show up.
TEST_CASE("analytic gradients of a composite match independent central differences") {
  Rng rng(8);
  Tensor x = random_tensor({3, 4}, rng, -1, 1, true);
  Tensor w = random_tensor({4, 4}, rng, -1, 1, true);
  const Tensor g = Tensor::full({4}, 1.0), b = Tensor::zeros({4});
  auto f = [&] {
    const Tensor h = relu(layer_norm(matmul(x, w), g, b));
    return sum(mul(softmax(h), h));
  };
  const Tensor loss = f();
  backward(loss);
  const auto gx = std::vector<double>(x.grad().begin(), x.grad().end());
  const auto gw = std::vector<double>(w.grad().begin(), w.grad().end());
  NoGradGuard guard;
  auto scalar = [&] { return f().item(); };
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(gx[i] == doctest::Approx(biff::test::numeric_derivative(scalar, x, i)).epsilon(1e-6));
  for (std::size_t i = 0; i < w.numel(); ++i)
    CHECK(gw[i] == doctest::Approx(biff::test::numeric_derivative(scalar, w, i)).epsilon(1e-6));
}

TEST_CASE("check_gradients flags a wrong backward") {
  // mul with itself through gather: correct op, so it must pass...
  Rng rng(9);
  const Tensor x = random_tensor({3, 2}, rng, -1, 1, true);
  const std::vector<std::size_t> idx{0, 0, 2};
  auto good = check_gradients([&] { return sum(mul(gather_rows(x, idx), gather_rows(x, idx))); },
                              {{"x", x}});
  CHECK(good.passed);
  // ...while a loss evaluated without the tape link cannot match its numeric gradient.
  auto bad = check_gradients(
      [&] { return add(sum(x), Tensor::scalar(sum(mul(x, x)).item())); }, {{"x", x}});
  CHECK_FALSE(bad.passed);
}

TEST_CASE("smooth_l1 and cross_entropy values") {
  const Tensor p({1, 2}, {0.5, 3.0}), t({1, 2}, {0.0, 0.0});
  CHECK(smooth_l1(p, t).item() == doctest::Approx((0.125 + 2.5) / 2));
  const Tensor logits({1, 3}, {1.0, 2.0, 3.0});
  const std::vector<std::size_t> cls{2};
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(cross_entropy(logits, cls).item() == doctest::Approx(-std::log(std::exp(3.0) / z)));
}

TEST_CASE("AdamW step follows the decoupled update") {
  Parameter p("w", Tensor({2}, {1.0, -2.0}));
  p.value.mutable_grad()[0] = 0.5;
  p.value.mutable_grad()[1] = -1.0;
  AdamWOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.01;
  Parameter* ps[] = {&p};
  adamw_step(ps, o);
  // First step: m_hat = g, v_hat = g^2, so the step is lr*(sign(g)*|g|/(|g|+eps) + wd*w).
  const double e0 = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
  const double e1 = -2.0 - 0.1 * (-1.0 / (1.0 + 1e-8) + 0.01 * -2.0);
  CHECK(p.value.data()[0] == doctest::Approx(e0).epsilon(1e-14));
  CHECK(p.value.data()[1] == doctest::Approx(e1).epsilon(1e-14));
  o.lr = 0.0;
  CHECK_THROWS(adamw_step(ps, o));
}

TEST_CASE("clip_grad_norm rescales to the limit and reports the old norm") {
  Parameter p("w", Tensor({2}, {0.0, 0.0}));
  p.value.mutable_grad()[0] = 3.0;
  p.value.mutable_grad()[1] = 4.0;
  Parameter* ps[] = {&p};
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(grad_norm(ps) == doctest::Approx(1.0));
}

TEST_CASE("parameter store rejects duplicate names and keeps creation order") {
  ParamStore s;
  Rng rng(1);
  Linear a(s, "a", 2, 3, rng);
  CHECK_THROWS(Linear(s, "a", 2, 3, rng));
  const auto all = s.all();
  REQUIRE(all.size() == 2);
  CHECK(all[0]->name == "a.weight");
  CHECK(all[1]->name == "a.bias");
  CHECK(s.total_numel() == 9);
}

TEST_CASE("rng is reproducible and state round-trips") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  const auto st = a.state();
  const double x = a.uniform();
  Rng c;
  c.set_state(st);
  CHECK(c.uniform() == x);
}
