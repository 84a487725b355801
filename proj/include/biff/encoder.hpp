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

#include <cstddef>
#include <span>
#include <vector>

#include "biff/config.hpp"
#include "biff/geometry.hpp"
#include "biff/nn.hpp"
#include "biff/scene.hpp"

namespace biff {

inline constexpr std::size_t kAgentFeatureDim = 6 + kNumAgentTypes + 2;
inline constexpr std::size_t kRoadFeatureDim = 4 + kNumRoadTypes;

// Per-step history features in `frame`: x, y, vx, vy, cos h, sin h, one-hot
// type, valid, time index. Invalid steps keep only type, valid=0 and time.
Tensor agent_step_features(const AgentTrack& track, const Pose2D& frame, double coord_scale);
// Per-point road features in `frame`: x, y, cos dir, sin dir, one-hot type.
Tensor road_point_features(const RoadPolyline& road, const Pose2D& frame, double coord_scale);

// (dx, dy, cos, sin) of frame j seen from frame i; translations divided by scale.
std::vector<double> rel_pose_features(const Pose2D& frame_i, const Pose2D& frame_j,
                                      double coord_scale);

// Distances compared after rounding to a micrometre so that tiny float
// differences from a rigid motion cannot reorder neighbours.
long long quantize_distance(double d);

// The k frames whose origins are nearest `query`, nearest first. Equal
// (quantized) distances are ordered by position in the query frame, x then y,
// which a rigid motion of the scene cannot change; coincident origins fall
// back to `rank[j]` when given, else j.
std::vector<std::size_t> knn_neighbors(const Pose2D& query, std::span<const Pose2D> frames,
                                       std::size_t k, std::span<const std::size_t> rank = {});

// MLP over rows, max-pool per polyline, linear to d.
class PolylineEncoder {
 public:
  PolylineEncoder() = default;
  PolylineEncoder(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                  std::size_t layers, std::size_t out, Rng& rng);

  // features [n, in] -> [d]
  Tensor operator()(const Tensor& features) const;
  // Several polylines stacked row-wise; segment i is rows [offsets[i], offsets[i+1]).
  Tensor batch(const Tensor& features, std::span<const std::size_t> offsets) const;

 private:
  Mlp mlp_;
  Linear out_;
};

struct EncoderTrace {
  std::vector<ops::AttentionWeights> layers;
  std::vector<std::vector<std::size_t>> neighbors;
};

struct EncodedScene {
  Tensor features;  // [agents + roads, d]; agents by id, then roads in input order
  std::vector<Pose2D> frames;
  std::vector<int> agent_ids;
  std::size_t n_agents = 0;
  std::size_t n_roads = 0;

  std::size_t row_of_agent(int id) const;
};

class SceneEncoder {
 public:
  SceneEncoder() = default;
  SceneEncoder(ParamStore& store, const ModelConfig& config, Rng& rng);

  // `agents` must be sorted by id.
  EncodedScene encode(std::span<const AgentTrack> agents, std::span<const RoadPolyline> roads,
                      EncoderTrace* trace = nullptr) const;
  EncodedScene encode(const Scene& scene, EncoderTrace* trace = nullptr) const;

  Tensor encode_agent(const AgentTrack& track) const;
  Tensor encode_road(const RoadPolyline& road) const;

  const PolylineEncoder& agent_encoder() const { return agent_enc_; }
  const PolylineEncoder& road_encoder() const { return road_enc_; }

 private:
  struct Layer {
    Linear wq, wk, wv, wpos, wo;
    LayerNorm norm;
    FeedForward ffn;
  };

  ModelConfig config_;
  PolylineEncoder agent_enc_, road_enc_;
  Mlp pos_mlp_;
  std::vector<Layer> layers_;
};

std::vector<AgentTrack> agents_sorted_by_id(const Scene& scene);

}  // namespace biff
