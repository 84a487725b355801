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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biff/geometry.hpp"

namespace biff {

enum class AgentType { kVehicle = 0, kPedestrian = 1, kCyclist = 2 };
enum class RoadType { kLane = 0, kEdge = 1, kCrosswalk = 2 };

inline constexpr std::size_t kNumAgentTypes = 3;
inline constexpr std::size_t kNumRoadTypes = 3;
inline constexpr std::size_t kMaxRoadPoints = 10;
inline constexpr double kRoadPointSpacing = 1.0;

std::string_view to_string(AgentType t);
std::string_view to_string(RoadType t);
AgentType parse_agent_type(std::string_view s);
RoadType parse_road_type(std::string_view s);

// Disc footprint defaults used by the collision metric.
double default_footprint_radius(AgentType t);

struct AgentState {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double heading = 0.0;
  bool valid = true;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct FuturePoint {
  double x = 0.0, y = 0.0;
  bool valid = true;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const FuturePoint&, const FuturePoint&) = default;
};

struct AgentTrack {
  int id = 0;
  AgentType type = AgentType::kVehicle;
  std::vector<AgentState> history;  // oldest first; back() is the current step
  std::vector<FuturePoint> future;
  double footprint_radius = 1.0;

  const AgentState& current() const { return history.back(); }
  // Agent-centric frame at the current step.
  Pose2D frame() const;
  friend bool operator==(const AgentTrack&, const AgentTrack&) = default;
};

struct RoadPoint {
  double x = 0.0, y = 0.0;
  double direction = 0.0;
  RoadType type = RoadType::kLane;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const RoadPoint&, const RoadPoint&) = default;
};

struct RoadPolyline {
  std::vector<RoadPoint> points;

  // Frame at the polyline center: mean point position, mean direction.
  Pose2D frame() const;
  friend bool operator==(const RoadPolyline&, const RoadPolyline&) = default;
};

struct Scene {
  std::string scene_id;
  std::string template_name;
  std::uint64_t seed = 0;
  std::vector<AgentTrack> agents;
  std::vector<RoadPolyline> roads;
  std::pair<int, int> target_pair{0, 1};

  const AgentTrack* find_agent(int id) const;
  // Index into `agents` of each target, in target_pair order.
  std::array<std::size_t, 2> target_indices() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

// Throws DataError when a structural invariant is broken.
void validate(const AgentTrack& track);
void validate(const RoadPolyline& road);
void validate(const Scene& scene);

// Applies a global rigid motion to every position, heading and velocity.
Scene transform_scene(const Scene& scene, const RigidTransform& t);

// Splits a dense path into consecutive polylines of at most `max_points`
// points, resampled so consecutive points are exactly `spacing` apart.
std::vector<RoadPolyline> make_road_polylines(const std::vector<Vec2>& path, RoadType type,
                                              std::size_t max_points = kMaxRoadPoints,
                                              double spacing = kRoadPointSpacing);

// Resamples a polyline so that consecutive output points lie exactly
// `spacing` apart (Euclidean), keeping the final input point when it is
// farther than a small tolerance from the last sample.
std::vector<Vec2> resample_chord(const std::vector<Vec2>& path, double spacing);

}  // namespace biff
