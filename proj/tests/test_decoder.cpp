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

#include <algorithm>
#include <cmath>

#include "biff/decoder.hpp"
#include "biff/model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace biff;
using biff::test::random_tensor;
using biff::test::values;

namespace {

// Copy of x with the listed rows overwritten by fresh random values.
Tensor perturb_rows(const Tensor& x, const std::vector<std::size_t>& rows, Rng& rng) {
  auto v = values(x);
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < x.cols(); ++c) v[r * x.cols() + c] = rng.uniform(-3, 3);
  return Tensor(x.shape(), v);
}

bool rows_equal(const Tensor& a, const Tensor& b, const std::vector<std::size_t>& rows) {
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (a(r, c) != b(r, c)) return false;
  return true;
}

bool rows_differ(const Tensor& a, const Tensor& b, const std::vector<std::size_t>& rows) {
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (a(r, c) != b(r, c)) return true;
  return false;
}

std::vector<std::size_t> range_rows(std::size_t n, auto pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (pred(i)) out.push_back(i);
  return out;
}

constexpr std::size_t kD = 8, kHeads = 2;

}  // namespace

TEST_CASE("decoder pair structures") {
  const std::vector<std::size_t> target_rows{4, 1, 6};
  SUBCASE("intention self-attention stays inside one agent") {
    const auto p = hfif_self_pairs(3, 4);
    REQUIRE(p.queries() == 12);
    for (std::size_t q = 0; q < 12; ++q) {
      CHECK(p.offsets[q + 1] - p.offsets[q] == 4);
      for (std::size_t i = p.offsets[q]; i < p.offsets[q + 1]; ++i) CHECK(p.keys[i] / 4 == q / 4);
    }
  }
  SUBCASE("behaviour self-attention stays inside one agent") {
    const auto p = lfbf_self_pairs(5, 3);
    REQUIRE(p.queries() == 15);
    for (std::size_t q = 0; q < 15; ++q)
      for (std::size_t i = p.offsets[q]; i < p.offsets[q + 1]; ++i) CHECK(p.keys[i] % 3 == q % 3);
  }
  SUBCASE("intention fusion keys exclude the querying agent") {
    const auto f = hfif_fusion_pairs(3, 4, 10, target_rows);
    REQUIRE(f.offsets.size() == 13);
    for (std::size_t q = 0; q < 12; ++q) {
      CHECK(f.offsets[q + 1] - f.offsets[q] == 8);
      for (std::size_t i = f.offsets[q]; i < f.offsets[q + 1]; ++i) {
        const std::size_t a = q / 4, b = f.key_rows[i] / 4;
        CHECK(b != a);
        CHECK(f.pos_rows[i] == a * 10 + target_rows[b]);
        CHECK(f.ex_rows[i] / 4 == cross_block(a, b, 3));
        CHECK(f.ex_rows[i] % 4 == f.key_rows[i] % 4);
      }
    }
  }
  SUBCASE("behaviour fusion pairs share the modality") {
    const auto f = lfbf_fusion_pairs(5, 3, 10, target_rows);
    for (std::size_t q = 0; q < 15; ++q) {
      CHECK(f.offsets[q + 1] - f.offsets[q] == 2);
      for (std::size_t i = f.offsets[q]; i < f.offsets[q + 1]; ++i) {
        CHECK(f.key_rows[i] / 3 == q / 3);
        CHECK(f.key_rows[i] % 3 != q % 3);
        CHECK(f.ex_rows[i] % 5 == q / 3);
      }
    }
  }
  CHECK(cross_block(0, 1, 2) == 0);
  CHECK(cross_block(1, 0, 2) == 1);
  CHECK_THROWS(cross_block(1, 1, 2));
}

TEST_CASE("zero-out probe: self-attention never mixes agents") {
  ParamStore store;
  Rng rng(51);
  const GroupSelfAttention block(store, "sa", kD, kHeads, rng);
  for (const bool behaviour : {false, true}) {
    // Intention rows a*S+s, or behaviour rows k*A+a; A = 2.
    const std::size_t A = 2, M = 3, n = A * M;
    const PairList pairs = behaviour ? lfbf_self_pairs(M, A) : hfif_self_pairs(A, M);
    auto agent_of = [&](std::size_t r) { return behaviour ? r % A : r / M; };
    const Tensor h = random_tensor({n, kD}, rng), e = random_tensor({n, kD}, rng);
    const Tensor base = block(h, e, pairs);
    const auto agent1 = range_rows(n, [&](std::size_t r) { return agent_of(r) == 1; });
    const auto agent0 = range_rows(n, [&](std::size_t r) { return agent_of(r) == 0; });
    const Tensor out = block(perturb_rows(h, agent1, rng), perturb_rows(e, agent1, rng), pairs);
    CHECK(rows_equal(base, out, agent0));
    CHECK(rows_differ(base, out, agent1));
  }
}

TEST_CASE("zero-out probe: intention fusion ignores the agent's own intentions") {
  ParamStore store;
  Rng rng(52);
  const FusionAttention block(store, "fu", kD, kHeads, rng);
  const std::size_t A = 2, S = 4, N = 5, n = A * S;
  const std::vector<std::size_t> target_rows{0, 1};
  const FusionPairs fp = hfif_fusion_pairs(A, S, N, target_rows);
  const Tensor h = random_tensor({n, kD}, rng), e = random_tensor({n, kD}, rng);
  const Tensor pe = random_tensor({A * N, kD}, rng), ex = random_tensor({A * (A - 1) * S, kD}, rng);
  const Tensor base = block(h, e, pe, ex, fp);
  // Query (agent 0, s = 0): change every other intention of agent 0.
  const std::vector<std::size_t> own{1, 2, 3};
  CHECK(rows_equal(base, block(perturb_rows(h, own, rng), e, pe, ex, fp), {0}));
  // Changing the other agent's intentions does reach it.
  const std::vector<std::size_t> other{4, 5, 6, 7};
  CHECK(rows_differ(base, block(perturb_rows(h, other, rng), e, pe, ex, fp), {0}));
  // The external embeddings of block (1, 0) belong to agent 1's queries only.
  const std::vector<std::size_t> ex_for_1{4, 5, 6, 7};
  const Tensor moved = block(h, e, pe, perturb_rows(ex, ex_for_1, rng), fp);
  CHECK(rows_equal(base, moved, {0, 1, 2, 3}));
  CHECK(rows_differ(base, moved, {4, 5, 6, 7}));
}

TEST_CASE("zero-out probe: behaviour fusion never mixes modalities") {
  ParamStore store;
  Rng rng(53);
  const FusionAttention block(store, "fu", kD, kHeads, rng);
  const std::size_t K = 3, A = 2, N = 5, n = K * A;
  const std::vector<std::size_t> target_rows{3, 0};
  const FusionPairs fp = lfbf_fusion_pairs(K, A, N, target_rows);
  const Tensor h = random_tensor({n, kD}, rng), e = random_tensor({n, kD}, rng);
  const Tensor pe = random_tensor({A * N, kD}, rng), ex = random_tensor({A * (A - 1) * K, kD}, rng);
  const Tensor base = block(h, e, pe, ex, fp);
  for (std::size_t k = 0; k < K; ++k) {
    const auto mine = range_rows(n, [&](std::size_t r) { return r / A == k; });
    const auto others = range_rows(n, [&](std::size_t r) { return r / A != k; });
    const auto others_ex = range_rows(ex.rows(), [&](std::size_t r) { return r % K != k; });
    const Tensor out = block(perturb_rows(h, others, rng), perturb_rows(e, others, rng), pe,
                             perturb_rows(ex, others_ex, rng), fp);
    CHECK(rows_equal(base, out, mine));
    CHECK(rows_differ(base, out, others));
  }
}

TEST_CASE("fusion with no partners passes content through") {
  ParamStore store;
  Rng rng(54);
  const FusionAttention block(store, "fu", kD, kHeads, rng);
  const Tensor h = random_tensor({3, kD}, rng);
  const Tensor out = block(h, h, h, h, FusionPairs{});
  CHECK(values(out) == values(h));
}

TEST_CASE("goal decoder contract on random head outputs") {
  Rng rng(55);
  const std::size_t A = 2, S = 7, K = 3;
  for (int rep = 0; rep < 1000 / int(A * K) + 1; ++rep) {
    std::vector<IntentionSet> sets(A);
    for (auto& set : sets)
      for (std::size_t s = 0; s < S; ++s) set.positions.push_back({rng.uniform(-60, 60), rng.uniform(-40, 40)});
    const Tensor logits = random_tensor({A, S, K}, rng, -8, 8);
    const Tensor gamma = ops::reshape(ops::softmax(logits, 1), {A * S, K});
    const Tensor goals = HfifDecoder::goals_from_gamma(gamma, sets, K);
    REQUIRE(goals.shape() == Shape{K * A, 2});
    for (std::size_t a = 0; a < A; ++a) {
      const auto hull = oracle::convex_hull(sets[a].positions);
      for (std::size_t k = 0; k < K; ++k) {
        double total = 0.0, gx = 0.0, gy = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          const double g = gamma(a * S + s, k);
          total += g;
          gx += g * sets[a].positions[s].x;
          gy += g * sets[a].positions[s].y;
        }
        CHECK(std::abs(total - 1.0) < 1e-7);
        CHECK(goals(k * A + a, 0) == doctest::Approx(gx).epsilon(1e-12));
        CHECK(goals(k * A + a, 1) == doctest::Approx(gy).epsilon(1e-12));
        CHECK(oracle::inside_hull(hull, {goals(k * A + a, 0), goals(k * A + a, 1)}, 1e-9));
      }
    }
  }
}

TEST_CASE("transform_trajectories agrees with pointwise frame changes") {
  Rng rng(56);
  const Pose2D from{3, -4, 0.8}, to{-10, 2, -2.5};
  const Tensor y = random_tensor({3, 10}, rng, -20, 20);
  const Tensor z = transform_trajectories(y, from, to);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t t = 0; t < 5; ++t) {
      const Vec2 p = to_frame(from_frame({y(r, 2 * t), y(r, 2 * t + 1)}, from), to);
      CHECK(z(r, 2 * t) == doctest::Approx(p.x).epsilon(1e-12));
      CHECK(z(r, 2 * t + 1) == doctest::Approx(p.y).epsilon(1e-12));
    }
}

TEST_CASE("full model: without fusion, agents decode independently") {
  auto world = biff::test::toy_world(5);
  world.config.model.hfif_fusion = false;
  world.config.model.lfbf_fusion = false;
  const BiffModel model(world.config.model, 9);
  NoGradGuard guard;
  const auto base = model.forward(world.prepared);
  const std::size_t A = base.A, S = world.prepared.intentions[0].size(), K = base.K;

  PreparedScene moved = world.prepared;
  for (auto& p : moved.intentions[1].positions) p = p + Vec2{3.0, -2.0};
  const auto out = model.forward(moved);
  CHECK(rows_equal(base.hfif.gamma, out.hfif.gamma, range_rows(A * S, [&](auto r) { return r / S == 0; })));
  const auto agent0 = range_rows(K * A, [&](auto r) { return r % A == 0; });
  const auto agent1 = range_rows(K * A, [&](auto r) { return r % A == 1; });
  CHECK(rows_equal(base.final_trajectories(), out.final_trajectories(), agent0));
  CHECK(rows_differ(base.final_trajectories(), out.final_trajectories(), agent1));

  // With fusion enabled, the same change reaches agent 0.
  world.config.model.hfif_fusion = true;
  world.config.model.lfbf_fusion = true;
  const BiffModel fused(world.config.model, 9);
  CHECK(rows_differ(fused.forward(world.prepared).final_trajectories(), fused.forward(moved).final_trajectories(),
                    agent0));
}

TEST_CASE("full model: output shapes and swapping target order swaps outputs") {
  auto world = biff::test::toy_world(6);
  const BiffModel model(world.config.model, 4);
  NoGradGuard guard;
  const auto out = model.forward(world.prepared);
  const auto& m = world.config.model;
  const std::size_t A = 2, K = m.k_modalities, T = m.t_future, S = m.s_intentions;
  CHECK(out.hfif.gamma.shape() == Shape{A * S, K});
  CHECK(out.hfif.goals.shape() == Shape{K * A, 2});
  CHECK(out.hfif.completed.shape() == Shape{K * A, T * 2});
  CHECK(out.lfbf.trajectories.size() == m.n_lfbf);
  CHECK(out.final_trajectories().shape() == Shape{K * A, T * 2});

  PreparedScene swapped = world.prepared;
  std::swap(swapped.target_ids[0], swapped.target_ids[1]);
  std::swap(swapped.intentions[0], swapped.intentions[1]);
  const auto sw = model.forward(swapped);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t c = 0; c < T * 2; ++c)
        CHECK(sw.final_trajectories()(k * A + (1 - a), c) ==
              doctest::Approx(out.final_trajectories()(k * A + a, c)).epsilon(1e-9));
}
