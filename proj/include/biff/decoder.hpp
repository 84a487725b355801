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

#include "biff/anchors.hpp"
#include "biff/attention.hpp"
#include "biff/config.hpp"

namespace biff {

struct DecoderTrace {
  std::vector<ops::AttentionWeights> self, cross, fuse;
};

// Rows of the HFIF stage are (agent a, intention s) -> a * S + s.
// Rows of goals, trajectories and the LFBF stage are (modality k, agent a) -> k * A + a.
struct HfifOutput {
  Tensor content;    // [A*S, d]
  Tensor gamma;      // [A*S, K], softmax over s for each (a, k)
  Tensor goals;      // [K*A, 2], metres in the agent frame
  Tensor completed;  // [K*A, T*2], metres in the agent frame
};

class HfifDecoder {
 public:
  HfifDecoder() = default;
  HfifDecoder(ParamStore& store, const ModelConfig& config, Rng& rng);

  HfifOutput forward(const DecoderContext& ctx, std::span<const IntentionSet> intentions,
                     DecoderTrace* trace = nullptr) const;

  // Anchor embedding input rows: x/scale, y/scale (and score when enabled).
  Tensor anchor_inputs(std::span<const Vec2> positions, std::span<const double> scores) const;
  Tensor embed(const Tensor& inputs) const { return query_mlp_(inputs); }
  // Goals from assignment scores: gamma [A*S, K], anchors [A][S] -> [K*A, 2].
  static Tensor goals_from_gamma(const Tensor& gamma, std::span<const IntentionSet> intentions,
                                 std::size_t k);

 private:
  struct Layer {
    GroupSelfAttention self;
    DecoupledCrossAttention cross;
    FusionAttention fuse;
    FeedForward ffn;
  };
  ModelConfig config_;
  Mlp query_mlp_;
  std::vector<Layer> layers_;
  Linear goal_heads_;
  Mlp completion_;
};

struct LfbfOutput {
  std::vector<Tensor> trajectories;  // per layer, [K*A, T*2]
  Tensor content;                    // [K*A, d]
};

class LfbfDecoder {
 public:
  LfbfDecoder() = default;
  LfbfDecoder(ParamStore& store, const ModelConfig& config, Rng& rng);

  LfbfOutput forward(const DecoderContext& ctx, const Tensor& initial,
                     DecoderTrace* trace = nullptr) const;

  // trajectories [n, T*2] metres -> whole-trajectory and endpoint embeddings [n, d].
  Tensor embed_behavior(const Tensor& trajectories) const;
  Tensor embed_endpoint(const Tensor& trajectories) const;

 private:
  struct Layer {
    GroupSelfAttention self;
    DecoupledCrossAttention cross;
    FusionAttention fuse;
    FeedForward ffn;
    Mlp traj;
  };
  ModelConfig config_;
  PolylineEncoder behavior_enc_;
  Mlp endpoint_mlp_;
  std::vector<Layer> layers_;
};

// Pair structures used by the decoder blocks. Fusion blocks index their
// external rows by (a, b != a) block, see cross_block.
std::size_t cross_block(std::size_t a, std::size_t b, std::size_t agents);
PairList hfif_self_pairs(std::size_t agents, std::size_t s);
FusionPairs hfif_fusion_pairs(std::size_t agents, std::size_t s, std::size_t polylines,
                              std::span<const std::size_t> target_rows);
PairList lfbf_self_pairs(std::size_t k, std::size_t agents);
FusionPairs lfbf_fusion_pairs(std::size_t k, std::size_t agents, std::size_t polylines,
                              std::span<const std::size_t> target_rows);

// Points of trajectory rows [n, T*2] re-expressed from frame `from` into `to`.
Tensor transform_trajectories(const Tensor& trajectories, const Pose2D& from, const Pose2D& to);

}  // namespace biff
