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
#include "biff/encoder.hpp"
#include "biff/nn.hpp"
#include "biff/scene.hpp"

namespace biff {

// Rectangular grid in the agent frame: x in [-long, long], y in [-lat, lat].
struct GridSpec {
  double half_long = 60.0;
  double half_lat = 40.0;
  double cell = 2.0;

  std::size_t nx() const;
  std::size_t ny() const;
  std::size_t cells() const { return nx() * ny(); }
  // Cell index = ix * ny + iy.
  Vec2 center(std::size_t index) const;
  // Cell containing p; points outside are clamped and `clamped` is set.
  std::size_t cell_of(Vec2 p, bool* clamped = nullptr) const;

  static GridSpec from(const AnchorConfig& c) { return {c.grid_long, c.grid_lat, c.cell}; }
};

struct IntentionSet {
  int agent_id = 0;
  std::vector<Vec2> positions;  // agent frame, metres
  std::vector<double> scores;
  std::vector<std::size_t> cells;
  GridSpec grid;

  std::size_t size() const { return positions.size(); }
};

// S highest scores, descending; equal scores in grid index order.
IntentionSet top_s(std::span<const double> grid_scores, std::size_t s, const GridSpec& grid);

// Frozen stand-in for an external marginal heatmap model: a history encoder
// followed by a two-layer head with one logit per grid cell.
class AnchorModel {
 public:
  AnchorModel() = default;
  AnchorModel(const AnchorConfig& config, double coord_scale, std::uint64_t seed);
  AnchorModel(AnchorModel&&) = default;
  AnchorModel& operator=(AnchorModel&&) = default;

  const GridSpec& grid() const { return grid_; }
  const AnchorConfig& config() const { return config_; }
  double coord_scale() const { return coord_scale_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  Tensor agent_feature(const AgentTrack& track) const;  // [hidden]
  Tensor logits(const AgentTrack& track) const;         // [1, cells]
  // Softmax over the full grid.
  std::vector<double> score_grid(const AgentTrack& track) const;
  IntentionSet intentions(const AgentTrack& track, std::size_t s) const;

 private:
  AnchorConfig config_;
  GridSpec grid_;
  double coord_scale_ = 10.0;
  ParamStore store_;
  PolylineEncoder encoder_;
  Mlp head_;
};

// Softmax of a logit row; equal logits give a uniform distribution.
std::vector<double> softmax_scores(std::span<const double> logits);

struct AnchorTrainReport {
  std::vector<double> epoch_loss;
  std::size_t clamped_targets = 0;
  std::size_t skipped_agents = 0;
};

// Cross-entropy to the cell holding each target's last valid future point.
AnchorTrainReport train_anchor_head(AnchorModel& model, std::span<const Scene> scenes,
                                    std::size_t epochs, std::uint64_t seed);

}  // namespace biff
