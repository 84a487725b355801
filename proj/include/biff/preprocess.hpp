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

#include <span>
#include <utility>
#include <vector>

#include "biff/geometry.hpp"
#include "biff/scene.hpp"

namespace biff {

// Minimum Euclidean distance between any valid future point of `a` and any
// valid future point of `b`, over all (t1, t2) pairs. Throws DataError when
// either future has no valid step.
double closest_future_distance(const AgentTrack& a, const AgentTrack& b);

// Greedy interactive pairing: repeatedly takes the pair with the smallest
// closest_future_distance among agents not yet paired. Equal distances are
// resolved by (lower id, higher id). Agents without valid future are skipped.
std::vector<std::pair<int, int>> select_interactive_pairs(const std::vector<AgentTrack>& agents);

// Local region kept around one target agent. Coordinates are in the agent
// frame; x >= 0 is the front half-plane.
struct PruneRegion {
  bool disc_in_front = true;  // half disc in front, half ellipse behind; else mirrored
  double radius = 30.0;       // half-disc radius, also the ellipse semi-major axis (along y)
  double semi_minor = 20.0;   // ellipse semi-axis along x

  bool contains(Vec2 local) const;
};

inline constexpr double kPruneDiscMargin = 30.0;
inline constexpr double kPruneEllipseMargin = 20.0;

// Region from the agent-frame anchor positions. Anchors with x >= 0 are front.
PruneRegion prune_region(std::span<const Vec2> anchors_local);

struct PruneTarget {
  Pose2D frame;
  std::vector<Vec2> anchors_local;
};

// Keep flag per road point: inside the region of at least one target.
std::vector<std::vector<bool>> prune_mask(const std::vector<RoadPolyline>& roads,
                                          std::span<const PruneTarget> targets);

// Roads restricted to kept points. A polyline whose kept points are not
// contiguous is split, so every output polyline keeps the 1 m sampling.
std::vector<RoadPolyline> prune_map(const std::vector<RoadPolyline>& roads,
                                    std::span<const PruneTarget> targets);

}  // namespace biff
