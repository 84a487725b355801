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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace biff {

struct ModelConfig {
  std::size_t d_model = 256;
  std::size_t n_heads = 8;
  std::size_t n_enc = 6;
  std::size_t k_neighbors = 16;
  std::size_t agent_mlp_dim = 256;
  std::size_t road_mlp_dim = 64;
  std::size_t n_hfif = 1;
  std::size_t n_lfbf = 3;
  std::size_t s_intentions = 100;
  std::size_t k_modalities = 6;
  std::size_t l_roads = 256;
  std::size_t t_future = 80;
  std::size_t t_history = 11;
  std::size_t completion_mlp_dim = 256;
  std::size_t traj_mlp_dim = 512;
  std::size_t behavior_mlp_dim = 64;
  // Metric inputs are divided by this before entering any MLP; trajectory
  // outputs are multiplied by it.
  double coord_scale = 10.0;
  bool hfif_fusion = true;
  bool lfbf_fusion = true;
  bool use_anchor_scores = false;
  // Cut gradients through the trajectories that seed each LFBF layer.
  bool detach_queries = true;
};

struct AnchorConfig {
  double grid_long = 60.0;  // half extent along the agent heading
  double grid_lat = 40.0;   // half extent across it
  double cell = 2.0;
  std::size_t hidden = 64;
  std::size_t epochs = 20;
  double lr = 1e-3;
  std::size_t batch = 16;
};

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-4;
  std::size_t batch = 80;
  double weight_decay = 0.01;
  std::size_t lr_halve_start = 20;
  std::size_t lr_halve_period = 2;
  std::uint64_t seed = 0;
  double grad_clip = 10.0;  // 0 disables clipping
  bool supervise_completion = true;
  bool loss_sum_steps = false;
  double smooth_l1_beta = 1.0;
  std::size_t eval_every = 0;  // epochs between evaluations; 0 = only at the end
};

struct EvalConfig {
  double miss_threshold = 2.0;
  bool metric_sum_agents = false;
};

struct RunConfig {
  ModelConfig model;
  AnchorConfig anchor;
  TrainConfig train;
  EvalConfig eval;
  std::size_t threads = 1;
};

// Named starting points: "default" (full-scale hyperparameters), "ablation"
// (15 epochs, halving from epoch 10), "desk" (d=64 acceptance scale),
// "smoke" (d=32, a few minutes), "toy" (d=8, gradient checks).
RunConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

// Flat "key = value" text with '#' comments. Unknown keys are rejected.
void apply_config_text(RunConfig& config, std::string_view text);
RunConfig parse_config(std::string_view text, std::string_view base_preset = "default");
RunConfig load_config(const std::filesystem::path& path);
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
// Canonical form: every key, fixed order, round-trip exact numbers.
std::string serialize_config(const RunConfig& config);
std::vector<std::string> config_keys();

// Throws ConfigError when values are out of range.
void validate(const RunConfig& config);

}  // namespace biff
