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

#include <cstdint>
#include <string>
#include <vector>

#include "biff/scene.hpp"

namespace biff {

struct GeneratorConfig {
  std::string template_name = "crossing";
  std::size_t t_history = 11;
  std::size_t t_future = 80;
  double dt = 0.1;
  // Target futures are guaranteed to come closer than this (closest future distance).
  double interaction_dist = 10.0;
  std::size_t n_distractors = 1;
  double invalid_history_prob = 0.05;
  bool random_global_pose = true;
};

// Template family: "crossing", "merge", "follow".
const std::vector<std::string>& synthetic_templates();

// Deterministic interactive scenario. Same config and seed produce the same
// scene bit for bit. Throws DataError for an unknown template.
Scene generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

// `count` scenes, cycling through `templates`, seeds derived from `seed`.
std::vector<Scene> generate_dataset(const GeneratorConfig& config,
                                    const std::vector<std::string>& templates, std::size_t count,
                                    std::uint64_t seed);

}  // namespace biff
