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
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "biff/anchors.hpp"
#include "biff/config.hpp"
#include "biff/geometry.hpp"
#include "biff/model.hpp"

namespace biff {

// K joint futures for A agents, stored in each agent's own frame.
struct JointPrediction {
  std::string scene_id;
  std::size_t K = 0, A = 0, T = 0;
  std::vector<double> local;  // [K][A][T][2]
  std::vector<Pose2D> frames;
  std::vector<int> agent_ids;
  std::vector<double> likelihood;  // [K]

  Vec2 local_at(std::size_t k, std::size_t a, std::size_t t) const;
  Vec2 world_at(std::size_t k, std::size_t a, std::size_t t) const;
  Vec2 endpoint(std::size_t k, std::size_t a) const { return local_at(k, a, T - 1); }
};

// Ground truth in the scene frame.
struct JointTruth {
  std::vector<std::vector<Vec2>> world;  // [A][T]
  std::vector<std::vector<bool>> valid;
  std::vector<double> radii;
  std::vector<AgentType> types;
};

JointTruth truth_of(const PreparedScene& scene);

// Index of the anchor closest to `p`; equal distances go to the lower index.
std::size_t nearest_anchor(const IntentionSet& set, Vec2 p);
// Product over agents of the score of the anchor nearest each endpoint.
std::vector<double> score_modalities(const JointPrediction& pred,
                                     std::span<const IntentionSet> intentions);

// Per modality: ADE/FDE of each agent, combined by mean (or sum) over agents.
double modality_ade(const JointPrediction& pred, const JointTruth& gt, std::size_t k,
                    bool sum_agents = false);
double modality_fde(const JointPrediction& pred, const JointTruth& gt, std::size_t k,
                    bool sum_agents = false);
double min_ade(const JointPrediction& pred, const JointTruth& gt, bool sum_agents = false);
double min_fde(const JointPrediction& pred, const JointTruth& gt, bool sum_agents = false);
// True when no modality puts every agent's endpoint within `threshold`.
bool is_miss(const JointPrediction& pred, const JointTruth& gt, double threshold);
// Fraction of modalities in which some pair of agents overlaps at a shared step.
double cross_collision_rate(const JointPrediction& pred, std::span<const double> radii);

struct MetricSummary {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
  double ccr = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  MetricSummary all;
  std::map<std::string, MetricSummary> per_type;  // keyed by target type pair
  std::size_t skipped = 0;

  std::string to_json() const;
  void write_csv(std::ostream& os) const;
};

struct SceneMetrics {
  double ade = 0.0, fde = 0.0, miss = 0.0, ccr = 0.0;
  std::string type_key;
};

SceneMetrics scene_metrics(const JointPrediction& pred, const JointTruth& gt,
                           const EvalConfig& config);
MetricReport aggregate(std::span<const SceneMetrics> scenes);

// Inference: last-layer trajectories plus joint likelihoods.
JointPrediction predict(const BiffModel& model, const PreparedScene& scene);

// Runs inference on every scene (across `threads` workers) and aggregates.
MetricReport evaluate(const BiffModel& model, std::span<const PreparedScene> scenes,
                      const EvalConfig& config, std::size_t threads = 1,
                      std::vector<JointPrediction>* predictions = nullptr);

std::string prediction_to_json_line(const JointPrediction& pred);

}  // namespace biff
