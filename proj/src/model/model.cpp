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

#include "biff/model.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "biff/error.hpp"
#include "biff/preprocess.hpp"

namespace biff {

const AgentTrack& PreparedScene::target(std::size_t a) const {
  for (const auto& t : agents)
    if (t.id == target_ids.at(a)) return t;
  throw DataError("target agent missing");
}

bool PreparedScene::endpoints_valid() const {
  for (const auto& v : gt_valid)
    if (v.empty() || !v.back()) return false;
  return true;
}

PreparedScene prepare_scene(const Scene& scene, const AnchorModel& anchors,
                            const ModelConfig& config, bool prune) {
  PreparedScene out;
  out.scene_id = scene.scene_id;
  out.agents = agents_sorted_by_id(scene);
  out.target_ids = {scene.target_pair.first, scene.target_pair.second};
  std::vector<PruneTarget> targets;
  for (int id : out.target_ids) {
    const AgentTrack* t = scene.find_agent(id);
    if (!t) throw DataError("scene " + scene.scene_id + ": target " + std::to_string(id) + " missing");
    IntentionSet set = anchors.intentions(*t, config.s_intentions);
    const Pose2D f = t->frame();
    targets.push_back({f, set.positions});
    std::vector<Vec2> gt(config.t_future), world(config.t_future);
    std::vector<bool> valid(config.t_future, false);
    for (std::size_t k = 0; k < config.t_future && k < t->future.size(); ++k) {
      world[k] = t->future[k].position();
      gt[k] = to_frame(world[k], f);
      valid[k] = t->future[k].valid;
    }
    out.gt.push_back(std::move(gt));
    out.gt_world.push_back(std::move(world));
    out.gt_valid.push_back(std::move(valid));
    out.intentions.push_back(std::move(set));
  }
  out.roads = prune ? prune_map(scene.roads, targets) : scene.roads;
  return out;
}

std::vector<PreparedScene> prepare_scenes(std::span<const Scene> scenes, const AnchorModel& anchors,
                                          const ModelConfig& config, std::size_t threads) {
  std::vector<PreparedScene> out(scenes.size());
  threads = std::max<std::size_t>(1, std::min(threads, scenes.size()));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < scenes.size(); i += threads)
      out[i] = prepare_scene(scenes[i], anchors, config);
  };
  if (threads == 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        std::lock_guard lock(m);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

namespace {

Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed, 0xB1FF)); }

}  // namespace

BiffModel::BiffModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng = make_rng(seed);
  encoder_ = SceneEncoder(store_, config, rng);
  dec_pos_ = Mlp(store_, "dec.pos", {4, config.d_model, config.d_model}, rng);
  hfif_ = HfifDecoder(store_, config, rng);
  lfbf_ = LfbfDecoder(store_, config, rng);
}

DecoderContext BiffModel::context(const EncodedScene& enc, std::span<const int> target_ids) const {
  return make_decoder_context(enc, target_ids, dec_pos_, config_.coord_scale, config_.l_roads);
}

ForwardOutput BiffModel::forward(const PreparedScene& scene, ForwardTrace* trace) const {
  ForwardOutput out;
  out.enc = encoder_.encode(scene.agents, scene.roads, trace ? &trace->encoder : nullptr);
  const DecoderContext ctx = context(out.enc, scene.target_ids);
  out.target_frames = ctx.target_frames;
  out.hfif = hfif_.forward(ctx, scene.intentions, trace ? &trace->hfif : nullptr);
  out.lfbf = lfbf_.forward(ctx, out.hfif.completed, trace ? &trace->lfbf : nullptr);
  out.K = config_.k_modalities;
  out.A = scene.target_ids.size();
  out.T = config_.t_future;
  return out;
}

}  // namespace biff
