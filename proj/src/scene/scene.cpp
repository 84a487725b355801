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

#include "biff/scene.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "biff/error.hpp"

namespace biff {

std::string_view to_string(AgentType t) {
  switch (t) {
    case AgentType::kVehicle: return "vehicle";
    case AgentType::kPedestrian: return "pedestrian";
    case AgentType::kCyclist: return "cyclist";
  }
  return "vehicle";
}

std::string_view to_string(RoadType t) {
  switch (t) {
    case RoadType::kLane: return "lane";
    case RoadType::kEdge: return "edge";
    case RoadType::kCrosswalk: return "crosswalk";
  }
  return "lane";
}

AgentType parse_agent_type(std::string_view s) {
  if (s == "vehicle") return AgentType::kVehicle;
  if (s == "pedestrian") return AgentType::kPedestrian;
  if (s == "cyclist") return AgentType::kCyclist;
  throw DataError("unknown agent type '" + std::string(s) + "'");
}

RoadType parse_road_type(std::string_view s) {
  if (s == "lane") return RoadType::kLane;
  if (s == "edge") return RoadType::kEdge;
  if (s == "crosswalk") return RoadType::kCrosswalk;
  throw DataError("unknown road type '" + std::string(s) + "'");
}

double default_footprint_radius(AgentType t) {
  switch (t) {
    case AgentType::kVehicle: return 1.0;
    case AgentType::kPedestrian: return 0.35;
    case AgentType::kCyclist: return 0.5;
  }
  return 1.0;
}

Pose2D AgentTrack::frame() const {
  const auto& c = current();
  return {c.x, c.y, c.heading};
}

Pose2D RoadPolyline::frame() const {
  if (points.empty()) throw EmptyPolylineError("frame of an empty road polyline");
  double sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
  for (const auto& p : points) {
    sx += p.x;
    sy += p.y;
    sc += std::cos(p.direction);
    ss += std::sin(p.direction);
  }
  const double n = static_cast<double>(points.size());
  const double heading = (std::abs(sc) + std::abs(ss) < 1e-9) ? points.front().direction
                                                              : std::atan2(ss, sc);
  return {sx / n, sy / n, heading};
}

const AgentTrack* Scene::find_agent(int id) const {
  for (const auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

std::array<std::size_t, 2> Scene::target_indices() const {
  std::array<std::size_t, 2> out{};
  const int ids[2] = {target_pair.first, target_pair.second};
  for (int t = 0; t < 2; ++t) {
    bool found = false;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (agents[i].id == ids[t]) {
        out[t] = i;
        found = true;
        break;
      }
    }
    if (!found) throw DataError("scene " + scene_id + ": target agent " + std::to_string(ids[t]) + " missing");
  }
  return out;
}

namespace {

bool wrapped(double theta) {
  return std::isfinite(theta) && theta > -std::numbers::pi && theta <= std::numbers::pi;
}

}  // namespace

void validate(const AgentTrack& track) {
  const std::string who = "agent " + std::to_string(track.id);
  if (track.history.empty()) throw DataError(who + ": empty history");
  if (!track.current().valid) throw DataError(who + ": current state is not valid");
  if (!(track.footprint_radius > 0.0)) throw DataError(who + ": footprint radius must be positive");
  for (const auto& s : track.history) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.vx) || !std::isfinite(s.vy))
      throw DataError(who + ": non-finite history state");
    if (!wrapped(s.heading)) throw DataError(who + ": heading not wrapped into (-pi, pi]");
  }
  for (const auto& f : track.future) {
    if (!std::isfinite(f.x) || !std::isfinite(f.y)) throw DataError(who + ": non-finite future point");
  }
}

void validate(const RoadPolyline& road) {
  const auto n = road.points.size();
  if (n == 0 || n > kMaxRoadPoints) {
    throw DataError("road polyline with " + std::to_string(n) + " points (expected 1.." +
                    std::to_string(kMaxRoadPoints) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = road.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !wrapped(p.direction))
      throw DataError("road point with non-finite position or unwrapped direction");
    if (i + 1 < n) {
      const double d = distance(p.position(), road.points[i + 1].position());
      const bool last = i + 2 == n;
      if (last ? d > kRoadPointSpacing + 1e-6 : std::abs(d - kRoadPointSpacing) > 1e-6)
        throw DataError("road point spacing " + std::to_string(d) + " m violates the 1 m sampling");
    }
  }
}

void validate(const Scene& scene) {
  std::set<int> ids;
  for (const auto& a : scene.agents) {
    validate(a);
    if (!ids.insert(a.id).second) throw DataError("scene " + scene.scene_id + ": duplicate agent id");
  }
  if (scene.target_pair.first == scene.target_pair.second)
    throw DataError("scene " + scene.scene_id + ": target agents must be distinct");
  scene.target_indices();
  for (const auto& r : scene.roads) validate(r);
}

Scene transform_scene(const Scene& scene, const RigidTransform& t) {
  Scene out = scene;
  for (auto& a : out.agents) {
    for (auto& s : a.history) {
      const Vec2 p = t.apply(Vec2{s.x, s.y});
      const Vec2 v = t.apply_vector(Vec2{s.vx, s.vy});
      s.x = p.x;
      s.y = p.y;
      s.vx = v.x;
      s.vy = v.y;
      s.heading = t.apply_heading(s.heading);
    }
    for (auto& f : a.future) {
      const Vec2 p = t.apply(Vec2{f.x, f.y});
      f.x = p.x;
      f.y = p.y;
    }
  }
  for (auto& r : out.roads) {
    for (auto& p : r.points) {
      const Vec2 q = t.apply(Vec2{p.x, p.y});
      p.x = q.x;
      p.y = q.y;
      p.direction = t.apply_heading(p.direction);
    }
  }
  return out;
}

std::vector<Vec2> resample_chord(const std::vector<Vec2>& path, double spacing) {
  std::vector<Vec2> out;
  if (path.empty()) return out;
  out.push_back(path.front());
  std::size_t seg = 0;
  Vec2 c = path.front();
  while (seg + 1 < path.size()) {
    bool found = false;
    for (std::size_t j = seg; j + 1 < path.size(); ++j) {
      const Vec2 a = path[j], b = path[j + 1];
      if (distance(b, c) < spacing) continue;
      // First exit of the segment from the circle of radius `spacing` about c.
      const Vec2 d = b - a, f = a - c;
      const double qa = d.x * d.x + d.y * d.y;
      const double qb = 2.0 * (f.x * d.x + f.y * d.y);
      const double qc = f.x * f.x + f.y * f.y - spacing * spacing;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (qa == 0.0 || disc < 0.0) continue;
      const double tpar = (-qb + std::sqrt(disc)) / (2.0 * qa);
      if (tpar < 0.0 || tpar > 1.0) continue;
      Vec2 p{a.x + tpar * d.x, a.y + tpar * d.y};
      // One Newton refinement on the radial distance.
      const double r = distance(p, c);
      if (r > 0.0) {
        const Vec2 u = (1.0 / r) * (p - c);
        p = c + spacing * u;
      }
      out.push_back(p);
      c = p;
      seg = j;
      found = true;
      break;
    }
    if (!found) break;
  }
  if (distance(path.back(), out.back()) > 1e-3) out.push_back(path.back());
  return out;
}

std::vector<RoadPolyline> make_road_polylines(const std::vector<Vec2>& path, RoadType type,
                                              std::size_t max_points, double spacing) {
  const auto pts = resample_chord(path, spacing);
  std::vector<RoadPolyline> out;
  if (pts.empty()) return out;
  std::vector<double> dir(pts.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 d = i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - (i > 0 ? 1 : 0)];
    dir[i] = (d.x == 0.0 && d.y == 0.0) ? (i > 0 ? dir[i - 1] : 0.0) : wrap_angle(std::atan2(d.y, d.x));
  }
  for (std::size_t b = 0; b < pts.size(); b += max_points) {
    RoadPolyline poly;
    for (std::size_t i = b; i < std::min(pts.size(), b + max_points); ++i) {
      poly.points.push_back({pts[i].x, pts[i].y, dir[i], type});
    }
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace biff
