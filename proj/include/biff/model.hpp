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
#include <span>
#include <vector>

#include "biff/anchors.hpp"
#include "biff/decoder.hpp"
#include "biff/encoder.hpp"

namespace biff {

// A scene with its frozen anchors and pruned map resolved once, plus the
// ground truth of the targets in their own frames.
struct PreparedScene {
  std::string scene_id;
  std::vector<AgentTrack> agents;  // sorted by id
  std::vector<RoadPolyline> roads;  // pruned
  std::vector<int> target_ids;
  std::vector<IntentionSet> intentions;  // one per target
  std::vector<std::vector<Vec2>> gt;        // per target, T points in the target frame
  std::vector<std::vector<Vec2>> gt_world;  // same points in the scene frame
  std::vector<std::vector<bool>> gt_valid;

  const AgentTrack& target(std::size_t a) const;
  bool endpoints_valid() const;
};

PreparedScene prepare_scene(const Scene& scene, const AnchorModel& anchors,
                            const ModelConfig& config, bool prune = true);
std::vector<PreparedScene> prepare_scenes(std::span<const Scene> scenes,
                                          const AnchorModel& anchors, const ModelConfig& config,
                                          std::size_t threads = 1);

struct ForwardTrace {
  EncoderTrace encoder;
  DecoderTrace hfif, lfbf;
};

struct ForwardOutput {
  EncodedScene enc;
  std::vector<Pose2D> target_frames;
  HfifOutput hfif;
  LfbfOutput lfbf;
  std::size_t K = 0, A = 0, T = 0;

  const Tensor& final_trajectories() const { return lfbf.trajectories.back(); }
};

class BiffModel {
 public:
  BiffModel(const ModelConfig& config, std::uint64_t seed);
  BiffModel(const BiffModel&) = delete;
  BiffModel& operator=(const BiffModel&) = delete;

  ForwardOutput forward(const PreparedScene& scene, ForwardTrace* trace = nullptr) const;

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const SceneEncoder& encoder() const { return encoder_; }
  const HfifDecoder& hfif() const { return hfif_; }
  const LfbfDecoder& lfbf() const { return lfbf_; }
  DecoderContext context(const EncodedScene& enc, std::span<const int> target_ids) const;

 private:
  ModelConfig config_;
  ParamStore store_;
  SceneEncoder encoder_;
  Mlp dec_pos_;
  HfifDecoder hfif_;
  LfbfDecoder lfbf_;
};

}  // namespace biff
