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

#include "biff/preprocess.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "biff/error.hpp"

namespace biff {
namespace {

std::vector<Vec2> valid_future(const AgentTrack& t) {
  std::vector<Vec2> pts;
  for (const auto& f : t.future) {
    if (f.valid) pts.push_back(f.position());
  }
  if (pts.empty()) throw DataError("agent " + std::to_string(t.id) + " has no valid future step");
  return pts;
}

}  // namespace

double closest_future_distance(const AgentTrack& a, const AgentTrack& b) {
  const auto pa = valid_future(a);
  auto pb = valid_future(b);
  std::sort(pb.begin(), pb.end(), [](Vec2 l, Vec2 r) { return std::tie(l.x, l.y) < std::tie(r.x, r.y); });
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2 p : pa) {
    const auto mid = std::lower_bound(pb.begin(), pb.end(), p.x, [](Vec2 q, double x) { return q.x < x; });
    // Scan outward in x; stop a direction once the x gap alone exceeds the best.
    for (auto it = mid; it != pb.end() && it->x - p.x <= best; ++it) best = std::min(best, distance(p, *it));
    for (auto it = mid; it != pb.begin();) {
      --it;
      if (p.x - it->x > best) break;
      best = std::min(best, distance(p, *it));
    }
  }
  return best;
}

std::vector<std::pair<int, int>> select_interactive_pairs(const std::vector<AgentTrack>& agents) {
  std::vector<const AgentTrack*> usable;
  for (const auto& a : agents) {
    if (std::any_of(a.future.begin(), a.future.end(), [](const FuturePoint& f) { return f.valid; }))
      usable.push_back(&a);
  }
  struct Candidate {
    double d;
    int lo, hi;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    for (std::size_t j = i + 1; j < usable.size(); ++j) {
      const int lo = std::min(usable[i]->id, usable[j]->id);
      const int hi = std::max(usable[i]->id, usable[j]->id);
      cands.push_back({closest_future_distance(*usable[i], *usable[j]), lo, hi});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
    return std::tie(l.d, l.lo, l.hi) < std::tie(r.d, r.lo, r.hi);
  });
  std::vector<int> taken;
  std::vector<std::pair<int, int>> pairs;
  auto is_taken = [&](int id) { return std::find(taken.begin(), taken.end(), id) != taken.end(); };
  for (const auto& c : cands) {
    if (is_taken(c.lo) || is_taken(c.hi)) continue;
    pairs.emplace_back(c.lo, c.hi);
    taken.push_back(c.lo);
    taken.push_back(c.hi);
  }
  return pairs;
}

bool PruneRegion::contains(Vec2 p) const {
  const bool front = p.x >= 0.0;
  const bool in_disc_half = front == disc_in_front;
  if (in_disc_half) return p.x * p.x + p.y * p.y <= radius * radius;
  const double u = p.x / semi_minor, v = p.y / radius;
  return u * u + v * v <= 1.0;
}

PruneRegion prune_region(std::span<const Vec2> anchors) {
  double d_front = 0.0, d_rear = 0.0;
  for (const Vec2 a : anchors) {
    const double d = a.norm();
    if (a.x >= 0.0) d_front = std::max(d_front, d);
    else d_rear = std::max(d_rear, d);
  }
  PruneRegion r;
  if (d_front > d_rear) {
    r.disc_in_front = true;
    r.radius = d_front + kPruneDiscMargin;
    r.semi_minor = d_rear + kPruneEllipseMargin;
  } else {
    r.disc_in_front = false;
    r.radius = d_rear + kPruneDiscMargin;
    r.semi_minor = d_front + kPruneEllipseMargin;
  }
  return r;
}

std::vector<std::vector<bool>> prune_mask(const std::vector<RoadPolyline>& roads,
                                          std::span<const PruneTarget> targets) {
  std::vector<PruneRegion> regions;
  for (const auto& t : targets) regions.push_back(prune_region(t.anchors_local));
  std::vector<std::vector<bool>> mask;
  mask.reserve(roads.size());
  for (const auto& r : roads) {
    std::vector<bool> keep(r.points.size(), false);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      for (std::size_t t = 0; t < targets.size() && !keep[i]; ++t) {
        keep[i] = regions[t].contains(to_frame(r.points[i].position(), targets[t].frame));
      }
    }
    mask.push_back(std::move(keep));
  }
  return mask;
}

std::vector<RoadPolyline> prune_map(const std::vector<RoadPolyline>& roads,
                                    std::span<const PruneTarget> targets) {
  const auto mask = prune_mask(roads, targets);
  std::vector<RoadPolyline> out;
  for (std::size_t r = 0; r < roads.size(); ++r) {
    RoadPolyline cur;
    for (std::size_t i = 0; i < roads[r].points.size(); ++i) {
      if (mask[r][i]) {
        cur.points.push_back(roads[r].points[i]);
      } else if (!cur.points.empty()) {
        out.push_back(std::move(cur));
        cur = RoadPolyline{};
      }
    }
    if (!cur.points.empty()) out.push_back(std::move(cur));
  }
  return out;
}

}  // namespace biff
