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

#include "biff/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "biff/error.hpp"

namespace biff {

using namespace ops;

Tensor agent_step_features(const AgentTrack& track, const Pose2D& frame, double cs) {
  const std::size_t n = track.history.size();
  if (n == 0) throw EmptyPolylineError("agent " + std::to_string(track.id) + " has no history");
  std::vector<double> out(n * kAgentFeatureDim, 0.0);
  const double c = std::cos(frame.theta), s = std::sin(frame.theta);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& st = track.history[t];
    double* row = out.data() + t * kAgentFeatureDim;
    if (st.valid) {
      const Vec2 p = to_frame(st.position(), frame);
      const double h = heading_to_frame(st.heading, frame);
      row[0] = p.x / cs;
      row[1] = p.y / cs;
      row[2] = (c * st.vx + s * st.vy) / cs;
      row[3] = (-s * st.vx + c * st.vy) / cs;
      row[4] = std::cos(h);
      row[5] = std::sin(h);
      row[6 + kNumAgentTypes] = 1.0;
    }
    row[6 + static_cast<std::size_t>(track.type)] = 1.0;
    row[7 + kNumAgentTypes] = static_cast<double>(t + 1) / static_cast<double>(n);
  }
  return Tensor({n, kAgentFeatureDim}, std::move(out));
}

Tensor road_point_features(const RoadPolyline& road, const Pose2D& frame, double cs) {
  const std::size_t n = road.points.size();
  if (n == 0) throw EmptyPolylineError("road polyline has no points");
  std::vector<double> out(n * kRoadFeatureDim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pt = road.points[i];
    double* row = out.data() + i * kRoadFeatureDim;
    const Vec2 p = to_frame(pt.position(), frame);
    const double dir = heading_to_frame(pt.direction, frame);
    row[0] = p.x / cs;
    row[1] = p.y / cs;
    row[2] = std::cos(dir);
    row[3] = std::sin(dir);
    row[4 + static_cast<std::size_t>(pt.type)] = 1.0;
  }
  return Tensor({n, kRoadFeatureDim}, std::move(out));
}

std::vector<double> rel_pose_features(const Pose2D& fi, const Pose2D& fj, double cs) {
  const RelPose r = rel_pose(fi, fj);
  return {r.dx / cs, r.dy / cs, r.cos_dtheta, r.sin_dtheta};
}

long long quantize_distance(double d) { return std::llround(d * 1e6); }

std::vector<std::size_t> knn_neighbors(const Pose2D& query, std::span<const Pose2D> frames,
                                       std::size_t k, std::span<const std::size_t> rank) {
  struct Cand {
    long long d, lx, ly;
    std::size_t r, j;
  };
  std::vector<Cand> cand;
  cand.reserve(frames.size());
  const Vec2 q{query.x, query.y};
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const Vec2 p{frames[j].x, frames[j].y};
    const Vec2 local = to_frame(p, query);
    cand.push_back({quantize_distance(distance(q, p)), quantize_distance(local.x),
                    quantize_distance(local.y), rank.empty() ? j : rank[j], j});
  }
  const auto less = [](const Cand& a, const Cand& b) {
    return std::tie(a.d, a.lx, a.ly, a.r) < std::tie(b.d, b.lx, b.ly, b.r);
  };
  const std::size_t m = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end(), less);
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = cand[i].j;
  return out;
}

PolylineEncoder::PolylineEncoder(ParamStore& store, const std::string& name, std::size_t in,
                                 std::size_t hidden, std::size_t layers, std::size_t out,
                                 Rng& rng) {
  std::vector<std::size_t> dims{in};
  for (std::size_t i = 0; i < layers; ++i) dims.push_back(hidden);
  mlp_ = Mlp(store, name + ".mlp", dims, rng, /*relu_last=*/true);
  out_ = Linear(store, name + ".out", hidden, out, rng);
}

Tensor PolylineEncoder::operator()(const Tensor& features) const {
  return reshape(out_(max_pool_rows(mlp_(features)).values), {out_.out_features()});
}

Tensor PolylineEncoder::batch(const Tensor& features, std::span<const std::size_t> offsets) const {
  return out_(segment_max(mlp_(features), offsets).values);
}

std::size_t EncodedScene::row_of_agent(int id) const {
  const auto it = std::find(agent_ids.begin(), agent_ids.end(), id);
  if (it == agent_ids.end()) throw DataError("agent id " + std::to_string(id) + " not encoded");
  return static_cast<std::size_t>(it - agent_ids.begin());
}

SceneEncoder::SceneEncoder(ParamStore& store, const ModelConfig& config, Rng& rng)
    : config_(config) {
  const std::size_t d = config.d_model;
  agent_enc_ = PolylineEncoder(store, "enc.agent", kAgentFeatureDim, config.agent_mlp_dim, 3, d, rng);
  road_enc_ = PolylineEncoder(store, "enc.road", kRoadFeatureDim, config.road_mlp_dim, 5, d, rng);
  pos_mlp_ = Mlp(store, "enc.pos", {4, d, d}, rng);
  for (std::size_t l = 0; l < config.n_enc; ++l) {
    const std::string p = "enc.layer" + std::to_string(l);
    layers_.push_back({Linear(store, p + ".wq", d, d, rng), Linear(store, p + ".wk", d, d, rng),
                       Linear(store, p + ".wv", d, d, rng), Linear(store, p + ".wpos", d, d, rng),
                       Linear(store, p + ".wo", d, d, rng), LayerNorm(store, p + ".norm", d),
                       FeedForward(store, p + ".ffn", d, 4 * d, rng)});
  }
}

Tensor SceneEncoder::encode_agent(const AgentTrack& track) const {
  return agent_enc_(agent_step_features(track, track.frame(), config_.coord_scale));
}

Tensor SceneEncoder::encode_road(const RoadPolyline& road) const {
  return road_enc_(road_point_features(road, road.frame(), config_.coord_scale));
}

namespace {

// Stacks per-polyline feature tensors and records row offsets.
Tensor stack(const std::vector<Tensor>& parts, std::vector<std::size_t>& offsets) {
  offsets.assign(1, 0);
  for (const auto& p : parts) offsets.push_back(offsets.back() + p.rows());
  return concat_rows(parts);
}

}  // namespace

EncodedScene SceneEncoder::encode(std::span<const AgentTrack> agents,
                                  std::span<const RoadPolyline> roads, EncoderTrace* trace) const {
  EncodedScene out;
  out.n_agents = agents.size();
  out.n_roads = roads.size();
  const double cs = config_.coord_scale;

  std::vector<Tensor> parts;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (i > 0 && agents[i].id <= agents[i - 1].id)
      throw DataError("encoder expects agents sorted by unique id");
    const Pose2D f = agents[i].frame();
    out.frames.push_back(f);
    out.agent_ids.push_back(agents[i].id);
    parts.push_back(agent_step_features(agents[i], f, cs));
  }
  std::vector<std::size_t> offsets;
  std::vector<Tensor> blocks;
  if (!parts.empty()) {
    const Tensor x = stack(parts, offsets);
    blocks.push_back(agent_enc_.batch(x, offsets));
  }

  parts.clear();
  for (const auto& r : roads) {
    const Pose2D f = r.frame();
    out.frames.push_back(f);
    parts.push_back(road_point_features(r, f, cs));
  }
  if (!parts.empty()) {
    const Tensor x = stack(parts, offsets);
    blocks.push_back(road_enc_.batch(x, offsets));
  }
  if (blocks.empty()) throw DataError("scene has no polylines");
  Tensor h = blocks.size() == 1 ? blocks[0] : concat_rows(blocks);

  const std::size_t n = out.frames.size();
  std::vector<std::size_t> nbr, nbr_offsets{0};
  std::vector<double> rel;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ns = knn_neighbors(out.frames[i], out.frames, config_.k_neighbors);
    for (std::size_t j : ns) {
      nbr.push_back(j);
      const auto f = rel_pose_features(out.frames[i], out.frames[j], cs);
      rel.insert(rel.end(), f.begin(), f.end());
    }
    nbr_offsets.push_back(nbr.size());
    if (trace) trace->neighbors.push_back(ns);
  }
  const Tensor pe = pos_mlp_(Tensor({nbr.size(), 4}, std::move(rel)));

  for (const auto& layer : layers_) {
    const Tensor q = layer.wq(h);
    const Tensor k = add(gather_rows(layer.wk(h), nbr), layer.wpos(pe));
    const Tensor v = gather_rows(layer.wv(h), nbr);
    ops::AttentionWeights w;
    const Tensor att = neighbor_attention(q, k, v, nbr_offsets, config_.n_heads, trace ? &w : nullptr);
    if (trace) trace->layers.push_back(std::move(w));
    h = layer.ffn(layer.norm(add(h, layer.wo(att))));
  }
  out.features = h;
  return out;
}

std::vector<AgentTrack> agents_sorted_by_id(const Scene& scene) {
  std::vector<AgentTrack> agents = scene.agents;
  std::sort(agents.begin(), agents.end(),
            [](const AgentTrack& a, const AgentTrack& b) { return a.id < b.id; });
  return agents;
}

EncodedScene SceneEncoder::encode(const Scene& scene, EncoderTrace* trace) const {
  const auto agents = agents_sorted_by_id(scene);
  return encode(agents, scene.roads, trace);
}

}  // namespace biff
