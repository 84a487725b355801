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

#include "biff/training.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "biff/error.hpp"
#include "biff/optim.hpp"

namespace biff {

using namespace ops;

std::size_t select_wta_modality(std::span<const Vec2> endpoints, std::span<const Vec2> gt,
                                std::size_t K) {
  const std::size_t A = gt.size();
  if (K == 0 || endpoints.size() != K * A) throw DimensionError("select_wta_modality: bad sizes");
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    double e = 0.0;
    for (std::size_t a = 0; a < A; ++a) e += distance(endpoints[k * A + a], gt[a]);
    if (e < best_err) {
      best_err = e;
      best = k;
    }
  }
  return best;
}

std::size_t select_wta_modality(const ForwardOutput& out, const PreparedScene& scene) {
  const auto d = out.final_trajectories().data();
  const std::size_t T = out.T;
  std::vector<Vec2> ends(out.K * out.A), gt(out.A);
  for (std::size_t r = 0; r < ends.size(); ++r)
    ends[r] = {d[(r * T + T - 1) * 2], d[(r * T + T - 1) * 2 + 1]};
  for (std::size_t a = 0; a < out.A; ++a) gt[a] = scene.gt[a][T - 1];
  return select_wta_modality(ends, gt, out.K);
}

namespace {

// smooth-L1 between the valid steps of row `row` of a [K*A, T*2] tensor and
// the agent's ground truth; returns the per-element mean (times the step
// count when summing over steps).
Tensor trajectory_term(const Tensor& traj, std::size_t row, std::size_t T,
                       const std::vector<Vec2>& gt, const std::vector<bool>& valid,
                       const TrainConfig& cfg) {
  std::vector<std::size_t> rows;
  std::vector<double> target;
  for (std::size_t t = 0; t < T; ++t) {
    if (!valid[t]) continue;
    rows.push_back(row * T + t);
    target.push_back(gt[t].x);
    target.push_back(gt[t].y);
  }
  const std::size_t n = rows.size();
  const Tensor pred = gather_rows(reshape(traj, {traj.rows() * T, 2}), rows);
  Tensor l = smooth_l1(pred, Tensor({n, 2}, std::move(target)), cfg.smooth_l1_beta);
  return cfg.loss_sum_steps ? scale(l, static_cast<double>(n)) : l;
}

}  // namespace

LossTerms compute_loss(const ForwardOutput& out, const PreparedScene& scene,
                       const TrainConfig& cfg) {
  if (!scene.endpoints_valid()) throw DataError("scene " + scene.scene_id + " lacks valid endpoints");
  LossTerms terms;
  const std::size_t A = out.A, T = out.T;
  terms.k_star = select_wta_modality(out, scene);
  const std::size_t k = terms.k_star;

  std::vector<Tensor> parts;
  std::vector<std::size_t> goal_rows;
  std::vector<double> goal_target;
  for (std::size_t a = 0; a < A; ++a) {
    goal_rows.push_back(k * A + a);
    goal_target.push_back(scene.gt[a][T - 1].x);
    goal_target.push_back(scene.gt[a][T - 1].y);
  }
  // Summed over agents: mean over x/y times A.
  const Tensor goal = scale(smooth_l1(gather_rows(out.hfif.goals, goal_rows),
                                      Tensor({A, 2}, std::move(goal_target)), cfg.smooth_l1_beta),
                            static_cast<double>(A));
  terms.goal = goal.item();
  parts.push_back(goal);

  for (const auto& traj : out.lfbf.trajectories)
    for (std::size_t a = 0; a < A; ++a) {
      const Tensor l = trajectory_term(traj, k * A + a, T, scene.gt[a], scene.gt_valid[a], cfg);
      terms.trajectory += l.item();
      parts.push_back(l);
    }
  if (cfg.supervise_completion)
    for (std::size_t a = 0; a < A; ++a) {
      const Tensor l = trajectory_term(out.hfif.completed, k * A + a, T, scene.gt[a],
                                       scene.gt_valid[a], cfg);
      terms.completion += l.item();
      parts.push_back(l);
    }

  Tensor total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, parts[i]);
  terms.total = total;
  return terms;
}

double learning_rate(const TrainConfig& c, std::size_t epoch) {
  if (epoch < c.lr_halve_start) return c.lr;
  const std::size_t halvings = (epoch - c.lr_halve_start) / c.lr_halve_period + 1;
  return c.lr * std::pow(0.5, static_cast<double>(halvings));
}

std::vector<std::vector<double>> snapshot_params(const ParamStore& store) {
  std::vector<std::vector<double>> out;
  for (const Parameter* p : store.all()) {
    const auto d = p->value.data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

void restore_params(ParamStore& store, const std::vector<std::vector<double>>& values) {
  auto params = store.all();
  if (params.size() != values.size()) throw DimensionError("parameter snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto d = params[i]->value.mutable_data();
    if (d.size() != values[i].size()) throw DimensionError("parameter snapshot shape mismatch");
    std::copy(values[i].begin(), values[i].end(), d.begin());
  }
}

namespace {

std::string norm_report(const ParamStore& store) {
  std::ostringstream os;
  for (const Parameter* p : store.all()) {
    double v = 0.0, g = 0.0;
    for (double x : p->value.data()) v += x * x;
    if (p->value.requires_grad() && !p->value.grad().empty())
      for (double x : p->value.grad()) g += x * x;
    os << "\n  " << p->name << " |w|=" << std::sqrt(v) << " |g|=" << std::sqrt(g);
  }
  return os.str();
}

}  // namespace

TrainResult train(BiffModel& model, std::span<const PreparedScene> train_set,
                  std::span<const PreparedScene> eval_set, const RunConfig& config,
                  const TrainHooks& hooks) {
  const TrainConfig& tc = config.train;
  std::vector<std::size_t> usable;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set[i].endpoints_valid()) usable.push_back(i);
    else ++skipped;
  }
  if (usable.empty()) throw DataError("no training scene has valid ground-truth endpoints");

  Rng rng(mix_seed(tc.seed, 0x7A1E));
  auto params = model.params().all();
  AdamWOptions opt;
  opt.weight_decay = tc.weight_decay;
  TrainResult result;
  std::size_t batch_id = 0;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    rng.shuffle(usable.begin(), usable.end());
    opt.lr = learning_rate(tc, epoch);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < usable.size(); b += tc.batch, ++batch_id) {
      const std::size_t end = std::min(usable.size(), b + tc.batch);
      model.params().zero_grad();
      double batch_loss = 0.0;
      const double w = 1.0 / static_cast<double>(end - b);
      // Scenes are independent graphs; accumulate gradients scene by scene.
      for (std::size_t i = b; i < end; ++i) {
        const PreparedScene& scene = train_set[usable[i]];
        const ForwardOutput out = model.forward(scene);
        const LossTerms terms = compute_loss(out, scene, tc);
        const double v = terms.total.item();
        if (!std::isfinite(v)) {
          throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_id) + ", scene " + scene.scene_id +
                             norm_report(model.params()));
        }
        backward(scale(terms.total, w));
        batch_loss += v * w;
      }
      if (tc.grad_clip > 0.0) clip_grad_norm(params, tc.grad_clip);
      adamw_step(params, opt);
      result.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss * static_cast<double>(end - b);
    }
    EpochLog log;
    log.epoch = epoch;
    log.lr = opt.lr;
    log.train_loss = epoch_loss / static_cast<double>(usable.size());
    log.skipped = skipped;
    const bool last = epoch + 1 == tc.epochs;
    if (!eval_set.empty() && (last || (tc.eval_every > 0 && (epoch + 1) % tc.eval_every == 0))) {
      log.evaluated = true;
      log.eval = evaluate(model, eval_set, config.eval, config.threads).all;
      if (log.eval.min_fde < result.best_min_fde) {
        result.best_min_fde = log.eval.min_fde;
        result.best_epoch = epoch;
        result.best_params = snapshot_params(model.params());
      }
    }
    result.curve.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
  }
  if (result.best_params.empty()) {
    result.best_epoch = tc.epochs == 0 ? 0 : tc.epochs - 1;
    result.best_params = snapshot_params(model.params());
  }
  result.rng_state = rng.state();
  return result;
}

void write_loss_curve_csv(std::ostream& os, const TrainResult& r) {
  os << "epoch,lr,train_loss,eval_minADE,eval_minFDE,eval_MR,eval_CCR\n";
  os << std::setprecision(17);
  for (const auto& e : r.curve) {
    os << e.epoch << ',' << e.lr << ',' << e.train_loss << ',';
    if (e.evaluated)
      os << e.eval.min_ade << ',' << e.eval.min_fde << ',' << e.eval.miss_rate << ',' << e.eval.ccr;
    else
      os << ",,,";
    os << '\n';
  }
}

}  // namespace biff
