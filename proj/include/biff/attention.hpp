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

#include "biff/encoder.hpp"
#include "biff/nn.hpp"

namespace biff {

// Scene-level inputs shared by every decoder block.
struct DecoderContext {
  const EncodedScene* enc = nullptr;
  std::vector<std::size_t> target_rows;  // row of each target in enc->features
  std::vector<Pose2D> target_frames;
  // Decoder positional encodings, row a * N + j: polyline j seen from target a.
  Tensor pe;
  // Road frame origins seen from each target: [A][roads].
  std::vector<std::vector<Vec2>> road_centers;
  std::size_t l_roads = 256;

  std::size_t targets() const { return target_rows.size(); }
  std::size_t polylines() const { return enc->n_agents + enc->n_roads; }
  // Every agent plus the l_roads roads nearest `point` (target a's frame).
  std::vector<std::size_t> neighbors(std::size_t a, Vec2 point) const;
};

DecoderContext make_decoder_context(const EncodedScene& enc, std::span<const int> target_ids,
                                    const Mlp& pos_mlp, double coord_scale, std::size_t l_roads);

// Row lists for attention restricted to groups: each query attends to
// every row of its own group (including itself).
struct PairList {
  std::vector<std::size_t> keys;
  std::vector<std::size_t> offsets{0};

  void close_query() { offsets.push_back(keys.size()); }
  std::size_t queries() const { return offsets.size() - 1; }
};

PairList group_pairs(std::span<const std::vector<std::size_t>> groups, std::size_t rows);

// Self attention within groups over content + embedding (the embedding is
// part of the query content in every layer).
class GroupSelfAttention {
 public:
  GroupSelfAttention() = default;
  GroupSelfAttention(ParamStore& store, const std::string& name, std::size_t d, std::size_t heads,
                     Rng& rng);
  Tensor operator()(const Tensor& content, const Tensor& emb, const PairList& pairs,
                    ops::AttentionWeights* trace = nullptr) const;

 private:
  Linear wq_, wk_, wv_, wo_;
  LayerNorm norm_;
  std::size_t heads_ = 1;
};

// Cross attention into encoder polylines with the query split into a content
// half and an embedding half, and keys split into content and relative pose.
// Agent and road keys/values use separate projections.
class DecoupledCrossAttention {
 public:
  DecoupledCrossAttention() = default;
  DecoupledCrossAttention(ParamStore& store, const std::string& name, std::size_t d,
                          std::size_t heads, Rng& rng);
  // query_target[i]: target slot of query i. neighbors: polyline rows per query.
  Tensor operator()(const Tensor& content, const Tensor& emb, const DecoderContext& ctx,
                    std::span<const std::size_t> query_target,
                    std::span<const std::vector<std::size_t>> neighbors,
                    ops::AttentionWeights* trace = nullptr) const;

 private:
  Linear wq_, wqe_, wk_agent_, wk_road_, wv_agent_, wv_road_, wpos_agent_, wpos_road_, wo_;
  LayerNorm norm_;
  std::size_t heads_ = 1;
};

// Cross-agent fusion. For pair p of query i: key content = W_k h[key_row[p]] +
// W_pos pe[pos_row[p]], key embedding = W_ke ex[ex_row[p]], value = W_v h[key_row[p]].
struct FusionPairs {
  std::vector<std::size_t> key_rows, pos_rows, ex_rows;
  std::vector<std::size_t> offsets{0};
  bool empty() const { return key_rows.empty(); }
};

class FusionAttention {
 public:
  FusionAttention() = default;
  FusionAttention(ParamStore& store, const std::string& name, std::size_t d, std::size_t heads,
                  Rng& rng);
  // Returns `content` untouched when there are no pairs.
  Tensor operator()(const Tensor& content, const Tensor& emb, const Tensor& pe,
                    const Tensor& ex, const FusionPairs& pairs,
                    ops::AttentionWeights* trace = nullptr) const;

 private:
  Linear wq_, wqe_, wk_, wke_, wv_, wpos_, wo_;
  LayerNorm norm_;
  std::size_t heads_ = 1;
};

}  // namespace biff
