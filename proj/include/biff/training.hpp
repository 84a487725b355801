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
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "biff/config.hpp"
#include "biff/metrics.hpp"
#include "biff/model.hpp"

namespace biff {

// argmin over k of the summed endpoint error; ties go to the lowest k.
// endpoints: rows (k, a) -> k * A + a.
std::size_t select_wta_modality(std::span<const Vec2> endpoints, std::span<const Vec2> gt_endpoints,
                                std::size_t K);
std::size_t select_wta_modality(const ForwardOutput& out, const PreparedScene& scene);

struct LossTerms {
  Tensor total;
  double goal = 0.0;
  double trajectory = 0.0;   // summed over LFBF layers
  double completion = 0.0;
  std::size_t k_star = 0;
};

// Winner-takes-all loss on modality k*: goal term plus one trajectory term
// per LFBF layer (plus the completed trajectory when enabled).
LossTerms compute_loss(const ForwardOutput& out, const PreparedScene& scene,
                       const TrainConfig& config);

// Learning rate used during `epoch` (0-based).
double learning_rate(const TrainConfig& config, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::size_t skipped = 0;
  bool evaluated = false;
  MetricSummary eval;
};

struct TrainResult {
  std::vector<EpochLog> curve;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  double best_min_fde = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;  // values at best_epoch, store order
  std::string rng_state;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
};

TrainResult train(BiffModel& model, std::span<const PreparedScene> train_set,
                  std::span<const PreparedScene> eval_set, const RunConfig& config,
                  const TrainHooks& hooks = {});

void write_loss_curve_csv(std::ostream& os, const TrainResult& result);

// Parameter snapshots for best-epoch bookkeeping.
std::vector<std::vector<double>> snapshot_params(const ParamStore& store);
void restore_params(ParamStore& store, const std::vector<std::vector<double>>& values);

}  // namespace biff
