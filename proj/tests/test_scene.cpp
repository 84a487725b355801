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
#include <numbers>
#include <set>
#include <sstream>

#include "biff/error.hpp"
#include "biff/preprocess.hpp"
#include "biff/scene_io.hpp"
#include "biff/synthetic.hpp"

using namespace biff;

namespace {

std::string serialize(const std::vector<Scene>& scenes) {
  std::ostringstream os;
  write_scenes(os, scenes);
  return os.str();
}

std::size_t parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_scenes(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("JSON-lines round trip is lossless") {
  GeneratorConfig gen;
  const auto scenes = generate_dataset(gen, synthetic_templates(), 6, 99);
  const std::string text = serialize(scenes);
  std::istringstream in(text);
  const auto back = read_scenes(in);
  REQUIRE(back.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) CHECK(back[i] == scenes[i]);
  CHECK(serialize(back) == text);
}

TEST_CASE("empty input reads as no scenes") {
  std::istringstream in("");
  CHECK(read_scenes(in).empty());
}

TEST_CASE("parse errors carry the offending line number") {
  GeneratorConfig gen;
  const auto scenes = generate_dataset(gen, {"crossing"}, 3, 5);
  const std::string good = scene_to_json_line(scenes[0]);

  SUBCASE("truncated line") {
    const std::string text = good + "\n" + good + "\n" + good.substr(0, good.size() / 2) + "\n";
    CHECK(parse_error_line(text) == 3);
  }
  SUBCASE("unknown key") {
    std::string bad = good;
    bad.insert(1, "\"colour\":\"red\",");
    CHECK(parse_error_line(good + "\n" + bad + "\n") == 2);
  }
  SUBCASE("wrong schema string") {
    std::string bad = good;
    const auto pos = bad.find("biff-scene/1");
    bad.replace(pos, 12, "biff-scene/9");
    CHECK(parse_error_line(bad + "\n") == 1);
  }
  SUBCASE("road spacing violation") {
    Scene s = scenes[0];
    s.roads[0].points.resize(3);
    s.roads[0].points[1].x += 0.5;
    CHECK(parse_error_line(good + "\n" + scene_to_json_line(s) + "\n") == 2);
  }
}

TEST_CASE("scene validation") {
  GeneratorConfig gen;
  Scene s = generate_synthetic(gen, 1);
  CHECK_NOTHROW(validate(s));
  SUBCASE("current state must be valid") {
    s.agents[0].history.back().valid = false;
    CHECK_THROWS_AS(validate(s), DataError);
  }
  SUBCASE("target ids must be distinct") {
    s.target_pair = {0, 0};
    CHECK_THROWS_AS(validate(s), DataError);
  }
  SUBCASE("road point count bounded by ten") {
    RoadPolyline r;
    for (int i = 0; i < 11; ++i) r.points.push_back({double(i), 0.0, 0.0, RoadType::kLane});
    CHECK_THROWS_AS(validate(r), DataError);
    r.points.clear();
    CHECK_THROWS_AS(validate(r), DataError);
  }
  SUBCASE("final segment may be short") {
    RoadPolyline r;
    r.points = {{0, 0, 0, RoadType::kLane}, {1, 0, 0, RoadType::kLane}, {1.4, 0, 0, RoadType::kLane}};
    CHECK_NOTHROW(validate(r));
  }
}

TEST_CASE("resampling keeps 1 m chords along a curve") {
  std::vector<Vec2> arc;
  for (int i = 0; i <= 200; ++i) {
    const double t = i * std::numbers::pi / 400.0;
    arc.push_back({25.0 * std::cos(t), 25.0 * std::sin(t)});
  }
  const auto polys = make_road_polylines(arc, RoadType::kLane);
  REQUIRE(!polys.empty());
  std::vector<Vec2> all;
  for (const auto& p : polys) {
    CHECK(p.points.size() <= kMaxRoadPoints);
    CHECK_NOTHROW(validate(p));
    for (const auto& q : p.points) all.push_back(q.position());
  }
  for (std::size_t i = 0; i + 2 < all.size(); ++i)
    CHECK(std::abs(distance(all[i], all[i + 1]) - 1.0) < 1e-6);
  // Chord 1 on a radius-25 quarter arc: about 25*pi/2 / 1 points.
  CHECK(all.size() == doctest::Approx(40).epsilon(0.05));
}

TEST_CASE("generator is deterministic and honours its contracts") {
  GeneratorConfig gen;
  for (const auto& tmpl : synthetic_templates()) {
    gen.template_name = tmpl;
    for (std::uint64_t seed : {7ull, 8ull, 31ull}) {
      const Scene a = generate_synthetic(gen, seed), b = generate_synthetic(gen, seed);
      CHECK(scene_to_json_line(a) == scene_to_json_line(b));
      CHECK_NOTHROW(validate(a));
      CHECK(a.template_name == tmpl);
      const auto* t0 = a.find_agent(a.target_pair.first);
      const auto* t1 = a.find_agent(a.target_pair.second);
      REQUIRE(t0);
      REQUIRE(t1);
      CHECK(t0->history.size() == gen.t_history);
      CHECK(t0->future.size() == gen.t_future);
      CHECK(closest_future_distance(*t0, *t1) < gen.interaction_dist);
      for (const auto& r : a.roads) CHECK(r.points.size() <= kMaxRoadPoints);
    }
  }
  gen.template_name = "roundabout";
  CHECK_THROWS_AS(generate_synthetic(gen, 1), DataError);
}

TEST_CASE("different seeds give different scenes") {
  GeneratorConfig gen;
  CHECK(scene_to_json_line(generate_synthetic(gen, 1)) != scene_to_json_line(generate_synthetic(gen, 2)));
}

TEST_CASE("dataset mixes templates and is reproducible") {
  GeneratorConfig gen;
  const auto a = generate_dataset(gen, {"crossing", "merge"}, 10, 4);
  const auto b = generate_dataset(gen, {"crossing", "merge"}, 10, 4);
  CHECK(serialize(a) == serialize(b));
  std::set<std::string> seen;
  for (const auto& s : a) seen.insert(s.template_name);
  CHECK(seen == std::set<std::string>{"crossing", "merge"});
  CHECK(generate_dataset(gen, {"crossing"}, 0, 4).empty());
  CHECK_THROWS_AS(generate_dataset(gen, {"nope"}, 1, 4), DataError);
}

TEST_CASE("rigid motion of a scene leaves local geometry unchanged") {
  GeneratorConfig gen;
  const Scene s = generate_synthetic(gen, 3);
  const RigidTransform t{1.1, {40.0, -12.0}};
  const Scene m = transform_scene(s, t);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const Pose2D f0 = s.agents[i].frame(), f1 = m.agents[i].frame();
    for (std::size_t k = 0; k < s.agents[i].future.size(); ++k) {
      const Vec2 a = to_frame(s.agents[i].future[k].position(), f0);
      const Vec2 b = to_frame(m.agents[i].future[k].position(), f1);
      CHECK(std::abs(a.x - b.x) < 1e-9);
      CHECK(std::abs(a.y - b.y) < 1e-9);
    }
  }
}
