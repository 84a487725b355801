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

#include "biff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "biff/error.hpp"

namespace biff {

Vec2 JointPrediction::local_at(std::size_t k, std::size_t a, std::size_t t) const {
  const std::size_t i = ((k * A + a) * T + t) * 2;
  return {local[i], local[i + 1]};
}

Vec2 JointPrediction::world_at(std::size_t k, std::size_t a, std::size_t t) const {
  return from_frame(local_at(k, a, t), frames[a]);
}

JointTruth truth_of(const PreparedScene& scene) {
  JointTruth gt;
  gt.world = scene.gt_world;
  gt.valid = scene.gt_valid;
  for (std::size_t a = 0; a < scene.target_ids.size(); ++a) {
    gt.radii.push_back(scene.target(a).footprint_radius);
    gt.types.push_back(scene.target(a).type);
  }
  return gt;
}

std::size_t nearest_anchor(const IntentionSet& set, Vec2 p) {
  if (set.positions.empty()) throw DataError("empty intention set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.positions.size(); ++i) {
    const double d = distance(p, set.positions[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<double> score_modalities(const JointPrediction& pred,
                                     std::span<const IntentionSet> intentions) {
  if (intentions.size() != pred.A) throw DimensionError("one intention set per agent expected");
  std::vector<double> out(pred.K, 1.0);
  for (std::size_t k = 0; k < pred.K; ++k)
    for (std::size_t a = 0; a < pred.A; ++a)
      out[k] *= intentions[a].scores[nearest_anchor(intentions[a], pred.endpoint(k, a))];
  return out;
}

namespace {

std::size_t last_valid(const std::vector<bool>& v) {
  for (std::size_t t = v.size(); t-- > 0;)
    if (v[t]) return t;
  throw DataError("ground truth has no valid step");
}

double agent_ade(const JointPrediction& p, const JointTruth& gt, std::size_t k, std::size_t a) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < p.T; ++t) {
    if (!gt.valid[a][t]) continue;
    s += distance(p.world_at(k, a, t), gt.world[a][t]);
    ++n;
  }
  if (n == 0) throw DataError("ground truth has no valid step");
  return s / static_cast<double>(n);
}

double agent_fde(const JointPrediction& p, const JointTruth& gt, std::size_t k, std::size_t a) {
  const std::size_t t = last_valid(gt.valid[a]);
  return distance(p.world_at(k, a, t), gt.world[a][t]);
}

template <typename F>
double combine(const JointPrediction& p, bool sum_agents, F per_agent) {
  double s = 0.0;
  for (std::size_t a = 0; a < p.A; ++a) s += per_agent(a);
  return sum_agents ? s : s / static_cast<double>(p.A);
}

}  // namespace

double modality_ade(const JointPrediction& p, const JointTruth& gt, std::size_t k, bool sum) {
  return combine(p, sum, [&](std::size_t a) { return agent_ade(p, gt, k, a); });
}

double modality_fde(const JointPrediction& p, const JointTruth& gt, std::size_t k, bool sum) {
  return combine(p, sum, [&](std::size_t a) { return agent_fde(p, gt, k, a); });
}

double min_ade(const JointPrediction& p, const JointTruth& gt, bool sum) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.K; ++k) best = std::min(best, modality_ade(p, gt, k, sum));
  return best;
}

double min_fde(const JointPrediction& p, const JointTruth& gt, bool sum) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.K; ++k) best = std::min(best, modality_fde(p, gt, k, sum));
  return best;
}

bool is_miss(const JointPrediction& p, const JointTruth& gt, double threshold) {
  for (std::size_t k = 0; k < p.K; ++k) {
    bool hit = true;
    for (std::size_t a = 0; a < p.A && hit; ++a) hit = agent_fde(p, gt, k, a) <= threshold;
    if (hit) return false;
  }
  return true;
}

double cross_collision_rate(const JointPrediction& p, std::span<const double> radii) {
  if (radii.size() != p.A) throw DimensionError("one radius per agent expected");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < p.K; ++k) {
    bool hit = false;
    for (std::size_t a = 0; a < p.A && !hit; ++a)
      for (std::size_t b = a + 1; b < p.A && !hit; ++b)
        for (std::size_t t = 0; t < p.T && !hit; ++t)
          hit = distance(p.world_at(k, a, t), p.world_at(k, b, t)) < radii[a] + radii[b];
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(p.K);
}

SceneMetrics scene_metrics(const JointPrediction& pred, const JointTruth& gt,
                           const EvalConfig& config) {
  SceneMetrics m;
  m.ade = min_ade(pred, gt, config.metric_sum_agents);
  m.fde = min_fde(pred, gt, config.metric_sum_agents);
  m.miss = is_miss(pred, gt, config.miss_threshold) ? 1.0 : 0.0;
  m.ccr = cross_collision_rate(pred, gt.radii);
  std::vector<std::string> names;
  for (auto t : gt.types) names.emplace_back(to_string(t));
  std::sort(names.begin(), names.end());
  for (std::size_t i = 0; i < names.size(); ++i) m.type_key += (i ? "+" : "") + names[i];
  return m;
}

namespace {

void accumulate(MetricSummary& s, const SceneMetrics& m) {
  s.min_ade += m.ade;
  s.min_fde += m.fde;
  s.miss_rate += m.miss;
  s.ccr += m.ccr;
  ++s.count;
}

void finish(MetricSummary& s) {
  if (s.count == 0) return;
  const double n = static_cast<double>(s.count);
  s.min_ade /= n;
  s.min_fde /= n;
  s.miss_rate /= n;
  s.ccr /= n;
}

}  // namespace

MetricReport aggregate(std::span<const SceneMetrics> scenes) {
  MetricReport r;
  // Scene order is fixed, so the sums are reproducible regardless of threads.
  for (const auto& m : scenes) {
    accumulate(r.all, m);
    accumulate(r.per_type[m.type_key], m);
  }
  finish(r.all);
  for (auto& [_, s] : r.per_type) finish(s);
  return r;
}

JointPrediction predict(const BiffModel& model, const PreparedScene& scene) {
  NoGradGuard guard;
  const ForwardOutput out = model.forward(scene);
  JointPrediction p;
  p.scene_id = scene.scene_id;
  p.K = out.K;
  p.A = out.A;
  p.T = out.T;
  p.frames = out.target_frames;
  p.agent_ids = scene.target_ids;
  const auto d = out.final_trajectories().data();
  p.local.assign(d.begin(), d.end());
  p.likelihood = score_modalities(p, scene.intentions);
  return p;
}

MetricReport evaluate(const BiffModel& model, std::span<const PreparedScene> scenes,
                      const EvalConfig& config, std::size_t threads,
                      std::vector<JointPrediction>* predictions) {
  if (scenes.empty()) throw DataError("no scenes to evaluate");
  std::vector<JointPrediction> preds(scenes.size());
  std::vector<SceneMetrics> metrics(scenes.size());
  std::vector<char> used(scenes.size(), 0);
  threads = std::max<std::size_t>(1, std::min(threads, scenes.size()));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < scenes.size(); i += threads) {
      if (!scenes[i].endpoints_valid()) continue;
      preds[i] = predict(model, scenes[i]);
      metrics[i] = scene_metrics(preds[i], truth_of(scenes[i]), config);
      used[i] = 1;
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex m;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          std::lock_guard lock(m);
          if (!err) err = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
  }
  std::vector<SceneMetrics> kept;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (used[i]) kept.push_back(metrics[i]);
    else ++skipped;
  }
  if (kept.empty()) throw DataError("no scene has valid ground-truth endpoints");
  MetricReport r = aggregate(kept);
  r.skipped = skipped;
  if (predictions) *predictions = std::move(preds);
  return r;
}

namespace {

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  return {{"minADE", s.min_ade}, {"minFDE", s.min_fde}, {"MR", s.miss_rate},
          {"CCR", s.ccr}, {"count", s.count}};
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j = summary_json(all);
  j["skipped"] = skipped;
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (const auto& [k, s] : per_type) types[k] = summary_json(s);
  j["per_type"] = types;
  return j.dump(2);
}

void MetricReport::write_csv(std::ostream& os) const {
  os << "group,count,minADE,minFDE,MR,CCR\n";
  const auto row = [&](const std::string& g, const MetricSummary& s) {
    os << g << ',' << s.count << ',' << std::setprecision(17) << s.min_ade << ',' << s.min_fde
       << ',' << s.miss_rate << ',' << s.ccr << '\n';
  };
  row("all", all);
  for (const auto& [k, s] : per_type) row(k, s);
}

std::string prediction_to_json_line(const JointPrediction& p) {
  nlohmann::ordered_json j;
  j["scene_id"] = p.scene_id;
  j["agent_ids"] = p.agent_ids;
  j["K"] = p.K;
  j["A"] = p.A;
  j["T"] = p.T;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : p.frames) frames.push_back({f.x, f.y, f.theta});
  j["frames"] = frames;
  j["likelihood"] = p.likelihood;
  // [K][A][T][2] in each agent's frame.
  nlohmann::json traj = nlohmann::json::array();
  for (std::size_t k = 0; k < p.K; ++k) {
    nlohmann::json per_agent = nlohmann::json::array();
    for (std::size_t a = 0; a < p.A; ++a) {
      nlohmann::json pts = nlohmann::json::array();
      for (std::size_t t = 0; t < p.T; ++t) {
        const Vec2 v = p.local_at(k, a, t);
        pts.push_back({v.x, v.y});
      }
      per_agent.push_back(pts);
    }
    traj.push_back(per_agent);
  }
  j["trajectories"] = traj;
  return j.dump();
}

}  // namespace biff
