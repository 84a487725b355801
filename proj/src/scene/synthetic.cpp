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

#include "biff/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "biff/error.hpp"
#include "biff/rng.hpp"

namespace biff {
namespace {

constexpr double kPi = std::numbers::pi;

// Arc-length parameterized dense path.
class Path {
 public:
  explicit Path(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    s_.push_back(0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) s_.push_back(s_.back() + distance(pts_[i - 1], pts_[i]));
  }

  double length() const { return s_.back(); }
  const std::vector<Vec2>& points() const { return pts_; }

  // Position and heading at arc length s; extrapolates linearly past the ends.
  std::pair<Vec2, double> at(double s) const {
    std::size_t i;
    if (s <= 0.0) i = 0;
    else if (s >= length()) i = pts_.size() - 2;
    else i = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin()) - 1;
    i = std::min(i, pts_.size() - 2);
    const Vec2 a = pts_[i], b = pts_[i + 1];
    const double seg = s_[i + 1] - s_[i];
    const double u = (s - s_[i]) / seg;
    return {a + u * (b - a), std::atan2(b.y - a.y, b.x - a.x)};
  }

  // Arc length of the point on the path closest to p (dense-point search).
  double project(Vec2 p) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double d = distance(p, pts_[i]);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return s_[best];
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<double> s_;
};

std::vector<Vec2> straight(Vec2 a, Vec2 b, double step = 0.5) {
  const double len = distance(a, b);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / step)));
  std::vector<Vec2> out;
  for (std::size_t i = 0; i <= n; ++i) out.push_back(a + (static_cast<double>(i) / n) * (b - a));
  return out;
}

void append(std::vector<Vec2>& dst, const std::vector<Vec2>& src) {
  for (const auto& p : src) {
    if (!dst.empty() && distance(dst.back(), p) < 1e-9) continue;
    dst.push_back(p);
  }
}

struct Actor {
  const Path* path = nullptr;
  AgentType type = AgentType::kVehicle;
  double radius = 1.0;
  double s = 0.0;
  double v = 0.0;
  double v_cruise = 5.0;
  std::vector<AgentState> states;
};

struct Idm {
  double a_max = 2.0;
  double b_comf = 2.5;
  double headway = 1.0;
  double min_gap = 2.0;
  double max_brake = 7.0;

  double accel(double v, double v0, std::optional<std::pair<double, double>> leader) const {
    double a = a_max * (1.0 - std::pow(v / std::max(v0, 0.1), 4));
    if (leader) {
      const auto [gap, lead_v] = *leader;
      const double dv = v - lead_v;
      const double s_star = min_gap + std::max(0.0, v * headway + v * dv / (2.0 * std::sqrt(a_max * b_comf)));
      a -= a_max * std::pow(s_star / std::max(gap, 0.1), 2);
    }
    return std::max(a, -max_brake);
  }
};

double speed_for(AgentType t, Rng& rng) {
  switch (t) {
    case AgentType::kVehicle: return rng.uniform(4.0, 7.0);
    case AgentType::kCyclist: return rng.uniform(3.0, 5.0);
    case AgentType::kPedestrian: return rng.uniform(1.0, 1.8);
  }
  return 5.0;
}

AgentType pick_type(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.7) return AgentType::kVehicle;
  if (u < 0.9) return AgentType::kCyclist;
  return AgentType::kPedestrian;
}

// Leader callback: (gap to leader or stop line, leader speed), or nothing.
using LeaderFn = std::function<std::optional<std::pair<double, double>>(std::size_t self, std::size_t step)>;

void simulate(std::vector<Actor>& actors, std::size_t steps, double dt, const LeaderFn& leader) {
  const Idm idm;
  for (auto& a : actors) a.states.clear();
  auto record = [&](Actor& a) {
    const auto [p, h] = a.path->at(a.s);
    a.states.push_back({p.x, p.y, a.v * std::cos(h), a.v * std::sin(h), wrap_angle(h), true});
  };
  for (auto& a : actors) record(a);
  for (std::size_t k = 1; k < steps; ++k) {
    std::vector<double> acc(actors.size());
    for (std::size_t i = 0; i < actors.size(); ++i) {
      acc[i] = idm.accel(actors[i].v, actors[i].v_cruise, leader(i, k));
    }
    for (std::size_t i = 0; i < actors.size(); ++i) {
      auto& a = actors[i];
      const double v_next = std::max(0.0, a.v + acc[i] * dt);
      a.s += 0.5 * (a.v + v_next) * dt;
      a.v = v_next;
      record(a);
    }
  }
}

struct Layout {
  std::vector<Path> paths;                 // agent paths
  std::vector<std::vector<Vec2>> lanes;    // lane center lines
  std::vector<std::vector<Vec2>> edges;    // road edges
  std::vector<std::vector<Vec2>> crosswalks;
};

// Yield logic shared by templates: agent `yielder` holds before its conflict
// arc length until `passer` is past its own conflict arc length by a margin.
// When `shared_after` is set both paths continue together and the yielder
// then follows the passer.
struct YieldRule {
  std::size_t yielder = 0, passer = 1;
  double yielder_conflict = 0.0, passer_conflict = 0.0;
  double stop_margin = 6.0, clear_margin = 4.0;
  bool shared_after = false;
};

std::optional<std::pair<double, double>> yield_leader(const std::vector<Actor>& actors, const YieldRule& r,
                                                      std::size_t self) {
  if (self != r.yielder) return std::nullopt;
  const auto& me = actors[r.yielder];
  const auto& other = actors[r.passer];
  const double other_progress = other.s - r.passer_conflict;
  const double my_progress = me.s - r.yielder_conflict;
  const double radii = me.radius + other.radius;
  if (other_progress < r.clear_margin + radii) {
    const double stop = -(r.stop_margin + radii);
    if (my_progress < stop + 0.5) return std::make_pair(stop - my_progress + 0.1, 0.0);
    return std::nullopt;
  }
  if (r.shared_after) {
    const double gap = other_progress - my_progress - radii;
    if (gap > 0.0) return std::make_pair(gap, other.v);
  }
  return std::nullopt;
}

Scene assemble(const std::string& name, std::uint64_t seed, const GeneratorConfig& cfg,
               std::vector<Actor>& actors, const Layout& layout, Rng& rng) {
  Scene scene;
  scene.scene_id = name + "-" + std::to_string(seed);
  scene.template_name = name;
  scene.seed = seed;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    AgentTrack t;
    t.id = static_cast<int>(i);
    t.type = actors[i].type;
    t.footprint_radius = actors[i].radius;
    const auto& st = actors[i].states;
    t.history.assign(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(cfg.t_history));
    for (std::size_t k = 0; k + 1 < t.history.size(); ++k) {
      if (rng.bernoulli(cfg.invalid_history_prob)) t.history[k].valid = false;
    }
    for (std::size_t k = cfg.t_history; k < st.size(); ++k) t.future.push_back({st[k].x, st[k].y, true});
    scene.agents.push_back(std::move(t));
  }
  scene.target_pair = {0, 1};
  auto add_roads = [&](const std::vector<std::vector<Vec2>>& lines, RoadType type) {
    for (const auto& l : lines) {
      for (auto& poly : make_road_polylines(l, type)) scene.roads.push_back(std::move(poly));
    }
  };
  add_roads(layout.lanes, RoadType::kLane);
  add_roads(layout.edges, RoadType::kEdge);
  add_roads(layout.crosswalks, RoadType::kCrosswalk);
  if (cfg.random_global_pose) {
    const RigidTransform g{rng.uniform(-kPi, kPi), {rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0)}};
    scene = transform_scene(scene, g);
  }
  validate(scene);
  return scene;
}

// Start far enough back that the yield stop line is still ahead.
double initial_s(double conflict_s, const Actor& a, double arrival_from_start, double stop_margin) {
  return conflict_s - std::max(a.v * arrival_from_start, stop_margin + 2.0 * a.radius + 4.0);
}

Scene crossing(const GeneratorConfig& cfg, std::uint64_t seed, std::uint64_t attempt) {
  Rng rng(mix_seed(seed, 1 + 8 * attempt));
  const double w = 1.75 + rng.uniform(-0.2, 0.2);
  const double ext = 60.0 + rng.uniform(0.0, 5.0);
  Layout L;
  L.lanes = {straight({-ext, -w}, {ext, -w}), straight({ext, w}, {-ext, w}),
             straight({w, -ext}, {w, ext}), straight({-w, ext}, {-w, -ext})};
  L.paths = {Path(L.lanes[0]), Path(L.lanes[2]), Path(L.lanes[1])};
  const Vec2 conflict{w, -w};
  std::vector<Actor> actors(2 + std::min<std::size_t>(cfg.n_distractors, 1));
  actors[0].type = AgentType::kVehicle;
  actors[1].type = pick_type(rng);
  for (std::size_t i = 0; i < actors.size(); ++i) {
    actors[i].path = &L.paths[i];
    if (i >= 2) actors[i].type = AgentType::kVehicle;
    actors[i].radius = default_footprint_radius(actors[i].type);
    actors[i].v = actors[i].v_cruise = speed_for(actors[i].type, rng);
  }
  YieldRule rule;
  rule.yielder = rng.bernoulli(0.5) ? 0 : 1;
  rule.passer = 1 - rule.yielder;
  const double c0 = L.paths[0].project(conflict), c1 = L.paths[1].project(conflict);
  const double t_arrive = rng.uniform(3.0, 5.0);
  actors[0].s = initial_s(c0, actors[0], t_arrive, rule.stop_margin + actors[1].radius);
  actors[1].s = initial_s(c1, actors[1], t_arrive + rng.uniform(-0.8, 0.8),
                          rule.stop_margin + actors[0].radius);
  if (actors.size() > 2) actors[2].s = rng.uniform(10.0, 40.0);
  rule.yielder_conflict = rule.yielder == 0 ? c0 : c1;
  rule.passer_conflict = rule.yielder == 0 ? c1 : c0;
  simulate(actors, cfg.t_history + cfg.t_future, cfg.dt,
           [&](std::size_t self, std::size_t) { return yield_leader(actors, rule, self); });
  return assemble("crossing", seed, cfg, actors, L, rng);
}

Scene merge(const GeneratorConfig& cfg, std::uint64_t seed, std::uint64_t attempt) {
  Rng rng(mix_seed(seed, 2 + 8 * attempt));
  const double radius = rng.uniform(40.0, 60.0);
  const double phi0 = rng.uniform(0.4, 0.55);
  const double ext = 60.0 + rng.uniform(0.0, 5.0);
  Layout L;
  std::vector<Vec2> main = straight({-ext, 0.0}, {ext, 0.0});
  std::vector<Vec2> arc;
  const std::size_t n_arc = 80;
  for (std::size_t i = 0; i <= n_arc; ++i) {
    const double phi = -phi0 + phi0 * static_cast<double>(i) / n_arc;
    arc.push_back({radius * std::sin(phi), -radius + radius * std::cos(phi)});
  }
  const Vec2 arc_start = arc.front();
  const Vec2 back_dir{-std::cos(phi0), -std::sin(phi0)};
  std::vector<Vec2> ramp = straight(arc_start + 30.0 * back_dir, arc_start);
  append(ramp, arc);
  std::vector<Vec2> ramp_path = ramp;
  append(ramp_path, straight({0.0, 0.0}, {ext, 0.0}));
  L.lanes = {main, ramp, straight({ext, 3.6}, {-ext, 3.6})};
  L.edges = {straight({-ext, 5.5}, {ext, 5.5})};
  L.paths = {Path(main), Path(ramp_path), Path(L.lanes[2])};
  std::vector<Actor> actors(2 + std::min<std::size_t>(cfg.n_distractors, 1));
  for (std::size_t i = 0; i < actors.size(); ++i) {
    actors[i].path = &L.paths[i];
    actors[i].type = AgentType::kVehicle;
    actors[i].radius = default_footprint_radius(actors[i].type);
    actors[i].v = actors[i].v_cruise = speed_for(actors[i].type, rng);
  }
  const double c0 = L.paths[0].project({0.0, 0.0}), c1 = L.paths[1].project({0.0, 0.0});
  YieldRule rule;
  rule.yielder = rng.bernoulli(0.5) ? 0 : 1;
  rule.passer = 1 - rule.yielder;
  rule.shared_after = true;
  rule.stop_margin = 5.0;
  const double t_arrive = rng.uniform(3.0, 5.0);
  actors[0].s = initial_s(c0, actors[0], t_arrive, rule.stop_margin + actors[1].radius);
  actors[1].s = initial_s(c1, actors[1], t_arrive + rng.uniform(-0.8, 0.8),
                          rule.stop_margin + actors[0].radius);
  if (actors.size() > 2) actors[2].s = rng.uniform(10.0, 40.0);
  rule.yielder_conflict = rule.yielder == 0 ? c0 : c1;
  rule.passer_conflict = rule.yielder == 0 ? c1 : c0;
  simulate(actors, cfg.t_history + cfg.t_future, cfg.dt,
           [&](std::size_t self, std::size_t) { return yield_leader(actors, rule, self); });
  return assemble("merge", seed, cfg, actors, L, rng);
}

Scene follow(const GeneratorConfig& cfg, std::uint64_t seed, std::uint64_t attempt) {
  Rng rng(mix_seed(seed, 3 + 8 * attempt));
  const double w = 1.75 + rng.uniform(-0.2, 0.2);
  const double ext = 60.0 + rng.uniform(0.0, 5.0);
  Layout L;
  L.lanes = {straight({-ext, -w}, {ext, -w}), straight({ext, w}, {-ext, w})};
  L.edges = {straight({-ext, -2.0 * w}, {ext, -2.0 * w}), straight({ext, 2.0 * w}, {-ext, 2.0 * w})};
  L.paths = {Path(L.lanes[0]), Path(L.lanes[0]), Path(L.lanes[1])};
  std::vector<Actor> actors(2 + std::min<std::size_t>(cfg.n_distractors, 1));
  const double v = rng.uniform(4.5, 7.0);
  for (std::size_t i = 0; i < actors.size(); ++i) {
    actors[i].path = &L.paths[i];
    actors[i].type = i == 1 && rng.bernoulli(0.2) ? AgentType::kCyclist : AgentType::kVehicle;
    actors[i].radius = default_footprint_radius(actors[i].type);
    actors[i].v = actors[i].v_cruise = i < 2 ? v + rng.uniform(-0.5, 0.5) : speed_for(actors[i].type, rng);
  }
  // Leader (id 0) yields at a crosswalk, follower (id 1) keeps its gap.
  const double lead_s = rng.uniform(20.0, 35.0);
  const double gap = rng.uniform(12.0, 22.0);
  actors[0].s = lead_s;
  actors[1].s = lead_s - gap;
  if (actors.size() > 2) actors[2].s = rng.uniform(10.0, 40.0);
  const double stop_s = lead_s + actors[0].v * (1.0 + rng.uniform(2.0, 4.0));
  const double wait = rng.uniform(1.0, 3.0);
  const auto t_hist = cfg.t_history;
  const double dt = cfg.dt;
  const auto [cw_pos, cw_heading] = L.paths[0].at(stop_s + 3.0);
  const Vec2 normal{-std::sin(cw_heading), std::cos(cw_heading)};
  L.crosswalks = {straight(cw_pos - 4.0 * normal, cw_pos + 4.0 * normal)};
  std::optional<std::size_t> stopped_at;
  simulate(actors, cfg.t_history + cfg.t_future, cfg.dt,
           [&](std::size_t self, std::size_t k) -> std::optional<std::pair<double, double>> {
             (void)t_hist;
             if (self == 0) {
               if (!stopped_at && actors[0].v < 0.05 && stop_s - actors[0].s < 6.0) stopped_at = k;
               const bool released = stopped_at && static_cast<double>(k - *stopped_at) * dt > wait;
               if (!released) return std::make_pair(std::max(stop_s - actors[0].s, 0.1), 0.0);
               return std::nullopt;
             }
             if (self == 1) {
               const double g = actors[0].s - actors[1].s - actors[0].radius - actors[1].radius;
               return std::make_pair(g, actors[0].v);
             }
             return std::nullopt;
           });
  return assemble("follow", seed, cfg, actors, L, rng);
}

bool acceptable(const Scene& s, const GeneratorConfig& cfg) {
  const auto& a = s.agents[0];
  const auto& b = s.agents[1];
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& p : a.future) {
    for (const auto& q : b.future) closest = std::min(closest, distance(p.position(), q.position()));
  }
  if (!(closest < cfg.interaction_dist)) return false;
  for (std::size_t t = 0; t < a.future.size(); ++t) {
    if (distance(a.future[t].position(), b.future[t].position()) < a.footprint_radius + b.footprint_radius + 0.5)
      return false;
  }
  return true;
}

}  // namespace

const std::vector<std::string>& synthetic_templates() {
  static const std::vector<std::string> names{"crossing", "merge", "follow"};
  return names;
}

Scene generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
  if (config.t_history < 1 || config.t_future < 1 || !(config.dt > 0.0))
    throw DataError("generator: invalid horizon configuration");
  Scene (*make)(const GeneratorConfig&, std::uint64_t, std::uint64_t) = nullptr;
  if (config.template_name == "crossing") make = crossing;
  else if (config.template_name == "merge") make = merge;
  else if (config.template_name == "follow") make = follow;
  else throw DataError("unknown scenario template '" + config.template_name + "'");
  // Rejection sampling keeps only interactive, collision-free ground truth.
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Scene s = make(config, seed, attempt);
    if (acceptable(s, config)) return s;
  }
  throw DataError("generator could not produce an interactive scene for seed " + std::to_string(seed));
}

std::vector<Scene> generate_dataset(const GeneratorConfig& config,
                                    const std::vector<std::string>& templates, std::size_t count,
                                    std::uint64_t seed) {
  if (templates.empty()) throw DataError("no scenario templates given");
  for (const auto& t : templates) {
    if (std::find(synthetic_templates().begin(), synthetic_templates().end(), t) ==
        synthetic_templates().end())
      throw DataError("unknown scenario template '" + t + "'");
  }
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    GeneratorConfig c = config;
    c.template_name = templates[i % templates.size()];
    out.push_back(generate_synthetic(c, mix_seed(seed, i)));
  }
  return out;
}

}  // namespace biff
