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

#include "biff/decoder.hpp"

#include "biff/error.hpp"

namespace biff {

using namespace ops;

namespace {

std::string layer_name(const char* stage, std::size_t l) {
  return std::string(stage) + ".layer" + std::to_string(l);
}

}  // namespace

std::size_t cross_block(std::size_t a, std::size_t b, std::size_t agents) {
  if (a == b || a >= agents || b >= agents) throw DimensionError("cross_block needs two distinct agents");
  return a * (agents - 1) + (b < a ? b : b - 1);
}

PairList hfif_self_pairs(std::size_t agents, std::size_t s) {
  std::vector<std::vector<std::size_t>> groups(agents);
  for (std::size_t a = 0; a < agents; ++a)
    for (std::size_t i = 0; i < s; ++i) groups[a].push_back(a * s + i);
  return group_pairs(groups, agents * s);
}

FusionPairs hfif_fusion_pairs(std::size_t agents, std::size_t s, std::size_t polylines,
                              std::span<const std::size_t> target_rows) {
  FusionPairs fp;
  for (std::size_t a = 0; a < agents; ++a)
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t b = 0; b < agents; ++b) {
        if (b == a) continue;
        for (std::size_t j = 0; j < s; ++j) {
          fp.key_rows.push_back(b * s + j);
          fp.pos_rows.push_back(a * polylines + target_rows[b]);
          fp.ex_rows.push_back(cross_block(a, b, agents) * s + j);
        }
      }
      fp.offsets.push_back(fp.key_rows.size());
    }
  return fp;
}

PairList lfbf_self_pairs(std::size_t k, std::size_t agents) {
  std::vector<std::vector<std::size_t>> groups(agents);
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t a = 0; a < agents; ++a) groups[a].push_back(m * agents + a);
  return group_pairs(groups, k * agents);
}

FusionPairs lfbf_fusion_pairs(std::size_t k, std::size_t agents, std::size_t polylines,
                              std::span<const std::size_t> target_rows) {
  FusionPairs fp;
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t a = 0; a < agents; ++a) {
      for (std::size_t b = 0; b < agents; ++b) {
        if (b == a) continue;
        fp.key_rows.push_back(m * agents + b);
        fp.pos_rows.push_back(a * polylines + target_rows[b]);
        fp.ex_rows.push_back(cross_block(a, b, agents) * k + m);
      }
      fp.offsets.push_back(fp.key_rows.size());
    }
  return fp;
}

HfifDecoder::HfifDecoder(ParamStore& store, const ModelConfig& c, Rng& rng) : config_(c) {
  const std::size_t d = c.d_model;
  query_mlp_ = Mlp(store, "hfif.query", {c.use_anchor_scores ? 3u : 2u, d, d}, rng);
  for (std::size_t l = 0; l < c.n_hfif; ++l) {
    const auto p = layer_name("hfif", l);
    layers_.push_back({GroupSelfAttention(store, p + ".self", d, c.n_heads, rng),
                       DecoupledCrossAttention(store, p + ".cross", d, c.n_heads, rng),
                       FusionAttention(store, p + ".fuse", d, c.n_heads, rng),
                       FeedForward(store, p + ".ffn", d, 4 * d, rng)});
  }
  goal_heads_ = Linear(store, "hfif.goal_heads", d, c.k_modalities, rng);
  completion_ = Mlp(store, "hfif.completion",
                    {2 + d, c.completion_mlp_dim, c.completion_mlp_dim, c.t_future * 2}, rng);
}

Tensor HfifDecoder::anchor_inputs(std::span<const Vec2> positions,
                                  std::span<const double> scores) const {
  const std::size_t w = config_.use_anchor_scores ? 3 : 2;
  std::vector<double> out;
  out.reserve(positions.size() * w);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.push_back(positions[i].x / config_.coord_scale);
    out.push_back(positions[i].y / config_.coord_scale);
    if (w == 3) out.push_back(scores[i]);
  }
  return Tensor({positions.size(), w}, std::move(out));
}

Tensor HfifDecoder::goals_from_gamma(const Tensor& gamma, std::span<const IntentionSet> intentions,
                                     std::size_t k) {
  const std::size_t A = intentions.size();
  const std::size_t S = gamma.rows() / A;
  std::vector<Tensor> per_agent;
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<double> xy;
    for (const Vec2& p : intentions[a].positions) {
      xy.push_back(p.x);
      xy.push_back(p.y);
    }
    per_agent.push_back(
        matmul(transpose(slice_rows(gamma, a * S, (a + 1) * S)), Tensor({S, 2}, std::move(xy))));
  }
  const Tensor ak = A == 1 ? per_agent[0] : concat_rows(per_agent);  // rows a * K + k
  std::vector<std::size_t> order;
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t a = 0; a < A; ++a) order.push_back(a * k + m);
  return gather_rows(ak, order);
}

HfifOutput HfifDecoder::forward(const DecoderContext& ctx, std::span<const IntentionSet> intentions,
                                DecoderTrace* trace) const {
  const std::size_t A = ctx.targets();
  if (intentions.size() != A) throw DimensionError("one intention set per target expected");
  const std::size_t S = intentions[0].size();
  for (const auto& s : intentions)
    if (s.size() != S) throw DimensionError("intention sets differ in size");
  const std::size_t K = config_.k_modalities, N = ctx.polylines();
  const Tensor& h_enc = ctx.enc->features;

  // Static embeddings of own anchors, rows a * S + s.
  std::vector<Vec2> own;
  std::vector<double> own_scores;
  for (const auto& set : intentions) {
    own.insert(own.end(), set.positions.begin(), set.positions.end());
    own_scores.insert(own_scores.end(), set.scores.begin(), set.scores.end());
  }
  const Tensor own_in = anchor_inputs(own, own_scores);

  // Anchors of agent b seen from agent a, stacked in cross_block order.
  std::vector<Vec2> cross_pts;
  std::vector<double> cross_scores;
  FusionPairs fp;
  if (config_.hfif_fusion && A > 1) {
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < A; ++b) {
        if (a == b) continue;
        for (std::size_t s = 0; s < S; ++s) {
          cross_pts.push_back(
              to_frame(from_frame(intentions[b].positions[s], ctx.target_frames[b]), ctx.target_frames[a]));
          cross_scores.push_back(intentions[b].scores[s]);
        }
      }
    fp = hfif_fusion_pairs(A, S, N, ctx.target_rows);
  }

  std::vector<std::size_t> query_target;
  std::vector<std::vector<std::size_t>> neighbors;
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t s = 0; s < S; ++s) {
      query_target.push_back(a);
      neighbors.push_back(ctx.neighbors(a, intentions[a].positions[s]));
    }
  const PairList self_pairs = hfif_self_pairs(A, S);

  std::vector<std::size_t> seed_rows;
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t s = 0; s < S; ++s) seed_rows.push_back(ctx.target_rows[a]);
  Tensor h = gather_rows(h_enc, seed_rows);

  for (const auto& layer : layers_) {
    const Tensor e = query_mlp_(own_in);
    ops::AttentionWeights w_self, w_cross, w_fuse;
    h = layer.self(h, e, self_pairs, trace ? &w_self : nullptr);
    h = layer.cross(h, e, ctx, query_target, neighbors, trace ? &w_cross : nullptr);
    if (!fp.empty()) {
      const Tensor ex = query_mlp_(anchor_inputs(cross_pts, cross_scores));
      h = layer.fuse(h, e, ctx.pe, ex, fp, trace ? &w_fuse : nullptr);
    }
    h = layer.ffn(h);
    if (trace) {
      trace->self.push_back(std::move(w_self));
      trace->cross.push_back(std::move(w_cross));
      trace->fuse.push_back(std::move(w_fuse));
    }
  }

  HfifOutput out;
  out.content = h;
  out.gamma = reshape(softmax(reshape(goal_heads_(h), {A, S, K}), 1), {A * S, K});
  out.goals = goals_from_gamma(out.gamma, intentions, K);

  std::vector<std::size_t> agent_rows;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t a = 0; a < A; ++a) agent_rows.push_back(ctx.target_rows[a]);
  const Tensor in = concat_cols({scale(out.goals, 1.0 / config_.coord_scale), gather_rows(h_enc, agent_rows)});
  out.completed = scale(completion_(in), config_.coord_scale);
  return out;
}

LfbfDecoder::LfbfDecoder(ParamStore& store, const ModelConfig& c, Rng& rng) : config_(c) {
  const std::size_t d = c.d_model;
  behavior_enc_ = PolylineEncoder(store, "lfbf.behavior", 3, c.behavior_mlp_dim, 2, d, rng);
  endpoint_mlp_ = Mlp(store, "lfbf.endpoint", {2, d, d}, rng);
  for (std::size_t l = 0; l < c.n_lfbf; ++l) {
    const auto p = layer_name("lfbf", l);
    layers_.push_back({GroupSelfAttention(store, p + ".self", d, c.n_heads, rng),
                       DecoupledCrossAttention(store, p + ".cross", d, c.n_heads, rng),
                       FusionAttention(store, p + ".fuse", d, c.n_heads, rng),
                       FeedForward(store, p + ".ffn", d, 4 * d, rng),
                       Mlp(store, p + ".traj", {d, c.traj_mlp_dim, c.traj_mlp_dim, c.t_future * 2}, rng)});
  }
}

Tensor LfbfDecoder::embed_behavior(const Tensor& traj) const {
  const std::size_t n = traj.rows(), T = traj.cols() / 2;
  const Tensor pts = scale(reshape(traj, {n * T, 2}), 1.0 / config_.coord_scale);
  std::vector<double> time(n * T);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t)
      time[i * T + t] = static_cast<double>(t + 1) / static_cast<double>(T);
  std::vector<std::size_t> offsets(n + 1);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i * T;
  return behavior_enc_.batch(concat_cols({pts, Tensor({n * T, 1}, std::move(time))}), offsets);
}

Tensor LfbfDecoder::embed_endpoint(const Tensor& traj) const {
  const std::size_t n = traj.rows(), T = traj.cols() / 2;
  std::vector<std::size_t> last(n);
  for (std::size_t i = 0; i < n; ++i) last[i] = i * T + T - 1;
  const Tensor end = gather_rows(reshape(traj, {n * T, 2}), last);
  return endpoint_mlp_(scale(end, 1.0 / config_.coord_scale));
}

Tensor transform_trajectories(const Tensor& traj, const Pose2D& from, const Pose2D& to) {
  const std::size_t n = traj.rows(), T = traj.cols() / 2;
  const double dth = from.theta - to.theta;
  const double c = std::cos(dth), s = std::sin(dth);
  const Vec2 t = to_frame({from.x, from.y}, to);
  // Row vector times R^T.
  const Tensor rt({2, 2}, {c, s, -s, c});
  const Tensor moved = add_bias(matmul(reshape(traj, {n * T, 2}), rt), Tensor({2}, {t.x, t.y}));
  return reshape(moved, {n, T * 2});
}

LfbfOutput LfbfDecoder::forward(const DecoderContext& ctx, const Tensor& initial,
                                DecoderTrace* trace) const {
  const std::size_t A = ctx.targets(), K = config_.k_modalities, T = config_.t_future;
  const std::size_t N = ctx.polylines();
  if (initial.rows() != K * A || initial.cols() != T * 2)
    throw DimensionError("LFBF expects [K*A, T*2] initial trajectories, got " + shape_str(initial.shape()));

  std::vector<std::size_t> query_target, seed_rows;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t a = 0; a < A; ++a) {
      query_target.push_back(a);
      seed_rows.push_back(ctx.target_rows[a]);
    }
  const PairList self_pairs = lfbf_self_pairs(K, A);

  // Fusion partners: same modality, other agents. Transformed copies are
  // stacked in cross_block order, each block holding K rows.
  const bool fuse = config_.lfbf_fusion && A > 1;
  FusionPairs fp;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  if (fuse) {
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < A; ++b)
        if (a != b) blocks.emplace_back(a, b);
    fp = lfbf_fusion_pairs(K, A, N, ctx.target_rows);
  }

  LfbfOutput out;
  Tensor h = gather_rows(ctx.enc->features, seed_rows);
  Tensor y = config_.detach_queries ? initial.detach() : initial;
  for (const auto& layer : layers_) {
    const Tensor e_qb = embed_behavior(y);
    const Tensor e_qeb = embed_endpoint(y);

    std::vector<std::vector<std::size_t>> neighbors;
    const auto Y = y.data();
    for (std::size_t r = 0; r < K * A; ++r) {
      Vec2 c{0.0, 0.0};
      for (std::size_t t = 0; t < T; ++t) c = c + Vec2{Y[r * T * 2 + 2 * t], Y[r * T * 2 + 2 * t + 1]};
      neighbors.push_back(ctx.neighbors(r % A, (1.0 / static_cast<double>(T)) * c));
    }

    ops::AttentionWeights w_self, w_cross, w_fuse;
    h = layer.self(h, e_qeb, self_pairs, trace ? &w_self : nullptr);
    h = layer.cross(h, e_qb, ctx, query_target, neighbors, trace ? &w_cross : nullptr);
    if (fuse) {
      std::vector<Tensor> moved;
      for (const auto& [a, b] : blocks) {
        std::vector<std::size_t> rows;
        for (std::size_t k = 0; k < K; ++k) rows.push_back(k * A + b);
        moved.push_back(transform_trajectories(gather_rows(y, rows), ctx.target_frames[b],
                                               ctx.target_frames[a]));
      }
      const Tensor ex = embed_behavior(moved.size() == 1 ? moved[0] : concat_rows(moved));
      h = layer.fuse(h, e_qb, ctx.pe, ex, fp, trace ? &w_fuse : nullptr);
    }
    h = layer.ffn(h);
    if (trace) {
      trace->self.push_back(std::move(w_self));
      trace->cross.push_back(std::move(w_cross));
      trace->fuse.push_back(std::move(w_fuse));
    }
    const Tensor pred = scale(layer.traj(h), config_.coord_scale);
    out.trajectories.push_back(pred);
    y = config_.detach_queries ? pred.detach() : pred;
  }
  out.content = h;
  return out;
}

}  // namespace biff
