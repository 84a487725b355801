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
#include <limits>

#include "biff/error.hpp"
#include "biff/preprocess.hpp"
#include "biff/rng.hpp"
#include "oracles.hpp"

using namespace biff;

namespace {

AgentTrack random_track(int id, Rng& rng, std::size_t t, double invalid_prob = 0.2) {
  AgentTrack a;
  a.id = id;
  a.history = {AgentState{}};
  for (std::size_t i = 0; i < t; ++i)
    a.future.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30), !rng.bernoulli(invalid_prob)});
  a.future[rng.below(t)].valid = true;
  return a;
}

AgentTrack straight(int id, double y) {
  AgentTrack a;
  a.id = id;
  a.history = {AgentState{}};
  for (int t = 0; t < 20; ++t) a.future.push_back({double(t), y, true});
  return a;
}

}  // namespace

TEST_CASE("closest_future_distance matches the full cross-product scan") {
  Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_track(0, rng, 1 + rng.below(30)), b = random_track(1, rng, 1 + rng.below(30));
    CHECK(closest_future_distance(a, b) == oracle::closest_future_distance(a, b));
    CHECK(closest_future_distance(a, b) == closest_future_distance(b, a));
  }
}

TEST_CASE("closest_future_distance simple cases and errors") {
  const auto a = straight(0, 0.0), b = straight(1, 5.0);
  CHECK(closest_future_distance(a, a) == 0.0);
  CHECK(closest_future_distance(a, b) == doctest::Approx(5.0));
  AgentTrack empty = straight(2, 0.0);
  for (auto& f : empty.future) f.valid = false;
  CHECK_THROWS_AS(closest_future_distance(a, empty), DataError);
}

TEST_CASE("interactive pairs: greedy by distance then id") {
  SUBCASE("two agents") {
    const auto p = select_interactive_pairs({straight(4, 0), straight(9, 50)});
    REQUIRE(p.size() == 1);
    CHECK(p[0] == std::pair{4, 9});
  }
  SUBCASE("two mutually close pairs") {
    const auto p = select_interactive_pairs({straight(0, 0), straight(1, 100), straight(2, 2), straight(3, 103)});
    CHECK(p == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}});
  }
  SUBCASE("ties resolve to the lower ids") {
    const auto p = select_interactive_pairs({straight(5, 0), straight(3, 4), straight(7, 8)});
    REQUIRE(p.size() == 1);
    CHECK(p[0] == std::pair{3, 5});
  }
}

TEST_CASE("interactive pairs equal an independent greedy oracle on random scenes") {
  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<AgentTrack> agents;
    const int n = 2 + int(rng.below(6));
    for (int i = 0; i < n; ++i) agents.push_back(random_track(i * 3 + 1, rng, 8, 0.0));
    std::vector<bool> used(n, false);
    std::vector<std::pair<int, int>> expect;
    for (;;) {
      double best = std::numeric_limits<double>::infinity();
      int bi = -1, bj = -1;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          if (used[i] || used[j]) continue;
          const double d = oracle::closest_future_distance(agents[i], agents[j]);
          if (d < best) best = d, bi = i, bj = j;  // ids increase with index, so strict < keeps lowest ids
        }
      if (bi < 0) break;
      used[bi] = used[bj] = true;
      expect.emplace_back(agents[bi].id, agents[bj].id);
    }
    CHECK(select_interactive_pairs(agents) == expect);
  }
}

TEST_CASE("prune region membership equals the analytic oracle") {
  Rng rng(23);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Vec2> anchors;
    const auto s = 1 + rng.below(6);
    for (std::size_t i = 0; i < s; ++i) anchors.push_back({rng.uniform(-40, 60), rng.uniform(-30, 30)});
    const PruneRegion region = prune_region(anchors);
    for (int i = 0; i < 100; ++i, ++checked) {
      const Vec2 p{rng.uniform(-120, 120), rng.uniform(-120, 120)};
      CHECK(region.contains(p) == oracle::prune_inside(p, anchors));
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("prune region margins and boundary") {
  SUBCASE("front-dominant anchors") {
    const std::vector<Vec2> a{{40, 0}, {-5, 0}};
    const PruneRegion r = prune_region(a);
    CHECK(r.disc_in_front);
    CHECK(r.radius == 70.0);
    CHECK(r.semi_minor == 25.0);
    CHECK(r.contains({70.0 - 1e-9, 0}));
    CHECK_FALSE(r.contains({70.0 + 1e-9, 0}));
    CHECK(r.contains({-25.0 + 1e-9, 0}));
    CHECK_FALSE(r.contains({-25.0 - 1e-9, 0}));
  }
  SUBCASE("single anchor at the origin") {
    // d_f == d_r == 0, so the tie branch applies: 30 m half disc behind, 20 m ellipse ahead.
    const std::vector<Vec2> a{{0, 0}};
    const PruneRegion r = prune_region(a);
    CHECK_FALSE(r.disc_in_front);
    CHECK(r.radius == 30.0);
    CHECK(r.semi_minor == 20.0);
    CHECK(r.contains({-29.9, 0}));
    CHECK(r.contains({19.9, 0}));
    CHECK_FALSE(r.contains({20.1, 0}));
    CHECK(r.contains({0, 29.9}));
  }
}

TEST_CASE("prune region only grows when added anchors keep the dominant side") {
  Rng rng(24);
  int compared = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Vec2> a;
    for (int i = 0; i < 3; ++i) a.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
    std::vector<Vec2> more = a;
    for (int i = 0; i < 3; ++i) more.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
    const PruneRegion small = prune_region(a), big = prune_region(more);
    if (small.disc_in_front != big.disc_in_front) continue;
    ++compared;
    for (int i = 0; i < 200; ++i) {
      const Vec2 p{rng.uniform(-90, 90), rng.uniform(-90, 90)};
      if (small.contains(p)) CHECK(big.contains(p));
    }
  }
  CHECK(compared > 50);
}

TEST_CASE("a dominant-side flip can shrink the region") {
  // The old front disc reaches 40 m ahead; after a far rear anchor the front
  // becomes an ellipse with semi-minor 10 + 20 = 30 m.
  const std::vector<Vec2> a{{10, 0}};
  const std::vector<Vec2> more{{10, 0}, {-15, 0}};
  CHECK(prune_region(a).contains({35, 0}));
  CHECK_FALSE(prune_region(more).contains({35, 0}));
}

TEST_CASE("prune_map keeps points inside either target region and splits polylines") {
  RoadPolyline road;
  for (int i = 0; i < 10; ++i) road.points.push_back({25.0 + i, 0.0, 0.0, RoadType::kLane});
  // Target 0 at the origin sees 30 m behind and 20 m ahead; target 1 sits at x = 40 facing +x.
  std::vector<PruneTarget> targets{{Pose2D{0, 0, 0}, {{0, 0}}}};
  auto kept = prune_map({road}, targets);
  CHECK(kept.empty());

  targets.push_back({Pose2D{40, 0, 0}, {{0, 0}}});
  kept = prune_map({road}, targets);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].points.front().x == 25.0);

  // A gap in the middle yields two fragments.
  std::vector<PruneTarget> split{{Pose2D{0, 0, 0}, {{0, 0}}}, {Pose2D{60, 0, 0}, {{0, 0}}}};
  RoadPolyline longer;
  for (int i = 0; i < 10; ++i) longer.points.push_back({16.0 + 3 * i, 0.0, 0.0, RoadType::kLane});
  kept = prune_map({longer}, split);
  REQUIRE(kept.size() == 2);
  const auto mask = prune_mask({longer}, split);
  std::size_t n = 0;
  for (bool b : mask[0]) n += b;
  CHECK(kept[0].points.size() + kept[1].points.size() == n);
}
