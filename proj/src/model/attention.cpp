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

#include "biff/attention.hpp"

#include <algorithm>
#include <tuple>

#include "biff/error.hpp"

namespace biff {

using namespace ops;

std::vector<std::size_t> DecoderContext::neighbors(std::size_t a, Vec2 point) const {
  std::vector<std::size_t> out(enc->n_agents);
  for (std::size_t j = 0; j < enc->n_agents; ++j) out[j] = j;
  const auto& centers = road_centers[a];
  struct Cand {
    long long d, lx, ly;
    std::size_t r;
  };
  std::vector<Cand> cand(centers.size());
  for (std::size_t r = 0; r < centers.size(); ++r)
    cand[r] = {quantize_distance(distance(point, centers[r])), quantize_distance(centers[r].x),
               quantize_distance(centers[r].y), r};
  const std::size_t m = std::min(l_roads, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end(),
                    [](const Cand& x, const Cand& y) {
                      return std::tie(x.d, x.lx, x.ly, x.r) < std::tie(y.d, y.lx, y.ly, y.r);
                    });
  for (std::size_t i = 0; i < m; ++i) out.push_back(enc->n_agents + cand[i].r);
  return out;
}

DecoderContext make_decoder_context(const EncodedScene& enc, std::span<const int> target_ids,
                                    const Mlp& pos_mlp, double cs, std::size_t l_roads) {
  DecoderContext ctx;
  ctx.enc = &enc;
  ctx.l_roads = l_roads;
  const std::size_t n = enc.n_agents + enc.n_roads;
  std::vector<double> rel;
  rel.reserve(target_ids.size() * n * 4);
  for (int id : target_ids) {
    const std::size_t row = enc.row_of_agent(id);
    const Pose2D& f = enc.frames[row];
    ctx.target_rows.push_back(row);
    ctx.target_frames.push_back(f);
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = rel_pose_features(f, enc.frames[j], cs);
      rel.insert(rel.end(), r.begin(), r.end());
    }
    std::vector<Vec2> centers;
    for (std::size_t r = 0; r < enc.n_roads; ++r) {
      const Pose2D& rf = enc.frames[enc.n_agents + r];
      centers.push_back(to_frame({rf.x, rf.y}, f));
    }
    ctx.road_centers.push_back(std::move(centers));
  }
  ctx.pe = pos_mlp(Tensor({target_ids.size() * n, 4}, std::move(rel)));
  return ctx;
}

PairList group_pairs(std::span<const std::vector<std::size_t>> groups, std::size_t rows) {
  std::vector<const std::vector<std::size_t>*> of_row(rows, nullptr);
  for (const auto& g : groups)
    for (std::size_t r : g) of_row.at(r) = &g;
  PairList out;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!of_row[r]) throw DimensionError("group_pairs: row without group");
    out.keys.insert(out.keys.end(), of_row[r]->begin(), of_row[r]->end());
    out.close_query();
  }
  return out;
}

GroupSelfAttention::GroupSelfAttention(ParamStore& store, const std::string& name, std::size_t d,
                                       std::size_t heads, Rng& rng)
    : wq_(store, name + ".wq", d, d, rng),
      wk_(store, name + ".wk", d, d, rng),
      wv_(store, name + ".wv", d, d, rng),
      wo_(store, name + ".wo", d, d, rng),
      norm_(store, name + ".norm", d),
      heads_(heads) {}

Tensor GroupSelfAttention::operator()(const Tensor& content, const Tensor& emb,
                                      const PairList& pairs, AttentionWeights* trace) const {
  const Tensor x = add(content, emb);
  const Tensor q = wq_(x);
  const Tensor k = gather_rows(wk_(x), pairs.keys);
  const Tensor v = gather_rows(wv_(x), pairs.keys);
  const Tensor att = neighbor_attention(q, k, v, pairs.offsets, heads_, trace);
  return norm_(add(x, wo_(att)));
}

DecoupledCrossAttention::DecoupledCrossAttention(ParamStore& store, const std::string& name,
                                                 std::size_t d, std::size_t heads, Rng& rng)
    : wq_(store, name + ".wq", d, d, rng),
      wqe_(store, name + ".wqe", d, d, rng),
      wk_agent_(store, name + ".wk_agent", d, d, rng),
      wk_road_(store, name + ".wk_road", d, d, rng),
      wv_agent_(store, name + ".wv_agent", d, d, rng),
      wv_road_(store, name + ".wv_road", d, d, rng),
      wpos_agent_(store, name + ".wpos_agent", d, d, rng),
      wpos_road_(store, name + ".wpos_road", d, d, rng),
      wo_(store, name + ".wo", d, d, rng),
      norm_(store, name + ".norm", d),
      heads_(heads) {}

Tensor DecoupledCrossAttention::operator()(const Tensor& content, const Tensor& emb,
                                           const DecoderContext& ctx,
                                           std::span<const std::size_t> query_target,
                                           std::span<const std::vector<std::size_t>> neighbors,
                                           AttentionWeights* trace) const {
  const EncodedScene& enc = *ctx.enc;
  const std::size_t na = enc.n_agents, nr = enc.n_roads, n = na + nr;
  const std::size_t A = ctx.targets();

  // Content keys/values: agents then roads, each with its own projections.
  std::vector<Tensor> kparts, vparts;
  const Tensor agents = slice_rows(enc.features, 0, na);
  kparts.push_back(wk_agent_(agents));
  vparts.push_back(wv_agent_(agents));
  if (nr > 0) {
    const Tensor roads = slice_rows(enc.features, na, n);
    kparts.push_back(wk_road_(roads));
    vparts.push_back(wv_road_(roads));
  }
  const Tensor kc = kparts.size() == 1 ? kparts[0] : concat_rows(kparts);
  const Tensor vc = vparts.size() == 1 ? vparts[0] : concat_rows(vparts);

  // Positional keys: agent rows of pe through the agent projection, road rows
  // through the road projection; stacked as [agent part; road part].
  std::vector<std::size_t> agent_pe, road_pe;
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t j = 0; j < n; ++j) (j < na ? agent_pe : road_pe).push_back(a * n + j);
  std::vector<Tensor> pparts{wpos_agent_(gather_rows(ctx.pe, agent_pe))};
  if (!road_pe.empty()) pparts.push_back(wpos_road_(gather_rows(ctx.pe, road_pe)));
  const Tensor kp = pparts.size() == 1 ? pparts[0] : concat_rows(pparts);

  std::vector<std::size_t> rows, prow, offsets{0};
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const std::size_t a = query_target[i];
    for (std::size_t j : neighbors[i]) {
      rows.push_back(j);
      prow.push_back(j < na ? a * na + j : A * na + a * nr + (j - na));
    }
    offsets.push_back(rows.size());
  }
  const Tensor q = interleave_heads(wq_(content), wqe_(emb), heads_);
  const Tensor k = interleave_heads(gather_rows(kc, rows), gather_rows(kp, prow), heads_);
  const Tensor v = gather_rows(vc, rows);
  const Tensor att = neighbor_attention(q, k, v, offsets, heads_, trace);
  return norm_(add(content, wo_(att)));
}

FusionAttention::FusionAttention(ParamStore& store, const std::string& name, std::size_t d,
                                 std::size_t heads, Rng& rng)
    : wq_(store, name + ".wq", d, d, rng),
      wqe_(store, name + ".wqe", d, d, rng),
      wk_(store, name + ".wk", d, d, rng),
      wke_(store, name + ".wke", d, d, rng),
      wv_(store, name + ".wv", d, d, rng),
      wpos_(store, name + ".wpos", d, d, rng),
      wo_(store, name + ".wo", d, d, rng),
      norm_(store, name + ".norm", d),
      heads_(heads) {}

Tensor FusionAttention::operator()(const Tensor& content, const Tensor& emb, const Tensor& pe,
                                   const Tensor& ex, const FusionPairs& pairs,
                                   AttentionWeights* trace) const {
  if (pairs.empty()) return content;
  if (pairs.offsets.size() != content.rows() + 1)
    throw DimensionError("fusion pairs do not cover every query");
  const Tensor q = interleave_heads(wq_(content), wqe_(emb), heads_);
  const Tensor kc = add(gather_rows(wk_(content), pairs.key_rows),
                        gather_rows(wpos_(pe), pairs.pos_rows));
  const Tensor k = interleave_heads(kc, gather_rows(wke_(ex), pairs.ex_rows), heads_);
  const Tensor v = gather_rows(wv_(content), pairs.key_rows);
  const Tensor att = neighbor_attention(q, k, v, pairs.offsets, heads_, trace);
  return norm_(add(content, wo_(att)));
}

}  // namespace biff
