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

#include "biff/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biff/error.hpp"
#include "biff/optim.hpp"

namespace biff {

using namespace ops;

std::size_t GridSpec::nx() const {
  return static_cast<std::size_t>(std::llround(2.0 * half_long / cell));
}
std::size_t GridSpec::ny() const {
  return static_cast<std::size_t>(std::llround(2.0 * half_lat / cell));
}

Vec2 GridSpec::center(std::size_t index) const {
  const std::size_t ix = index / ny(), iy = index % ny();
  return {-half_long + (static_cast<double>(ix) + 0.5) * cell,
          -half_lat + (static_cast<double>(iy) + 0.5) * cell};
}

std::size_t GridSpec::cell_of(Vec2 p, bool* clamped) const {
  const auto axis = [&](double v, double half, std::size_t n, bool& out) {
    const double f = std::floor((v + half) / cell);
    if (f < 0.0) {
      out = true;
      return std::size_t{0};
    }
    if (f >= static_cast<double>(n)) {
      out = true;
      return n - 1;
    }
    return static_cast<std::size_t>(f);
  };
  bool c = false;
  const std::size_t ix = axis(p.x, half_long, nx(), c);
  const std::size_t iy = axis(p.y, half_lat, ny(), c);
  if (clamped) *clamped = c;
  return ix * ny() + iy;
}

IntentionSet top_s(std::span<const double> scores, std::size_t s, const GridSpec& grid) {
  if (scores.size() != grid.cells())
    throw DimensionError("score count does not match the grid");
  if (s == 0 || s > scores.size())
    throw DimensionError("requested " + std::to_string(s) + " intentions from " +
                         std::to_string(scores.size()) + " cells");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  IntentionSet out;
  out.grid = grid;
  for (std::size_t i = 0; i < s; ++i) {
    out.cells.push_back(idx[i]);
    out.positions.push_back(grid.center(idx[i]));
    out.scores.push_back(scores[idx[i]]);
  }
  return out;
}

std::vector<double> softmax_scores(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += out[i] = std::exp(logits[i] - m);
  for (double& v : out) v /= z;
  return out;
}

AnchorModel::AnchorModel(const AnchorConfig& config, double coord_scale, std::uint64_t seed)
    : config_(config), grid_(GridSpec::from(config)), coord_scale_(coord_scale) {
  Rng rng(mix_seed(seed, 0xA11C));
  const std::size_t h = config.hidden;
  encoder_ = PolylineEncoder(store_, "anchor.agent", kAgentFeatureDim, h, 3, h, rng);
  head_ = Mlp(store_, "anchor.head", {h, h, grid_.cells()}, rng);
}

Tensor AnchorModel::agent_feature(const AgentTrack& track) const {
  return encoder_(agent_step_features(track, track.frame(), coord_scale_));
}

Tensor AnchorModel::logits(const AgentTrack& track) const {
  return head_(reshape(agent_feature(track), {1, config_.hidden}));
}

std::vector<double> AnchorModel::score_grid(const AgentTrack& track) const {
  NoGradGuard guard;
  const Tensor l = logits(track);
  return softmax_scores(l.data());
}

IntentionSet AnchorModel::intentions(const AgentTrack& track, std::size_t s) const {
  IntentionSet out = top_s(score_grid(track), s, grid_);
  out.agent_id = track.id;
  return out;
}

namespace {

struct Sample {
  const AgentTrack* track;
  std::size_t cell;
};

}  // namespace

AnchorTrainReport train_anchor_head(AnchorModel& model, std::span<const Scene> scenes,
                                    std::size_t epochs, std::uint64_t seed) {
  AnchorTrainReport report;
  std::vector<Sample> samples;
  for (const auto& scene : scenes) {
    for (std::size_t idx : scene.target_indices()) {
      const AgentTrack& a = scene.agents[idx];
      const FuturePoint* last = nullptr;
      for (const auto& f : a.future)
        if (f.valid) last = &f;
      if (!last) {
        ++report.skipped_agents;
        continue;
      }
      bool clamped = false;
      const std::size_t cell = model.grid().cell_of(to_frame(last->position(), a.frame()), &clamped);
      if (clamped) ++report.clamped_targets;
      samples.push_back({&a, cell});
    }
  }
  if (samples.empty()) throw DataError("no anchor training samples");

  Rng rng(mix_seed(seed, 0xA7C4));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  AdamWOptions opt;
  opt.lr = model.config().lr;
  auto params = model.params().all();
  const std::size_t batch = model.config().batch;

  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t end = std::min(order.size(), b + batch);
      std::vector<Tensor> rows;
      std::vector<std::size_t> targets;
      for (std::size_t i = b; i < end; ++i) {
        rows.push_back(model.logits(*samples[order[i]].track));
        targets.push_back(samples[order[i]].cell);
      }
      const Tensor loss = cross_entropy(concat_rows(rows), targets);
      model.params().zero_grad();
      backward(loss);
      adamw_step(params, opt);
      total += loss.item() * static_cast<double>(end - b);
    }
    report.epoch_loss.push_back(total / static_cast<double>(samples.size()));
  }
  return report;
}

}  // namespace biff
