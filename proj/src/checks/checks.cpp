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

#include "biff/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "biff/anchors.hpp"
#include "biff/gradcheck.hpp"
#include "biff/metrics.hpp"
#include "biff/preprocess.hpp"
#include "biff/synthetic.hpp"
#include "biff/training.hpp"

namespace biff {

using namespace ops;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), true);
}

// Fixed random projection so every op is checked through a scalar loss that
// depends on all outputs with distinct weights.
Tensor project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(y.numel());
  for (double& x : w) x = rng.uniform(-1.0, 1.0);
  return sum(mul(y, Tensor(y.shape(), std::move(w))));
}

CheckResult grad_result(const std::string& name, const GradCheckReport& r) {
  std::ostringstream os;
  os << "max rel err " << std::scientific << std::setprecision(2) << r.max_relative_error;
  return {"gradcheck", name, r.passed, r.max_relative_error, os.str()};
}

}  // namespace

std::vector<CheckResult> run_gradcheck_suite(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng(mix_seed(opt.seed, 1));
  const GradCheckOptions gc;
  auto check = [&](const std::string& name, std::vector<std::pair<std::string, Tensor>> inputs,
                   std::function<Tensor()> f) {
    const std::uint64_t s = rng.next_u64();
    out.push_back(grad_result(name, check_gradients([&] { return project(f(), s); }, inputs, gc)));
  };

  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({4, 5}, rng), bias = random_tensor({5}, rng);
  check("linear", {{"x", a}, {"w", w}, {"b", bias}}, [&] { return linear(a, w, &bias); });
  check("matmul", {{"a", a}, {"b", w}}, [&] { return matmul(a, w); });
  const Tensor b4 = random_tensor({4}, rng);
  check("add_bias", {{"x", a}, {"b", b4}}, [&] { return add_bias(a, b4); });
  check("add", {{"a", a}, {"b", b}}, [&] { return add(a, b); });
  check("sub", {{"a", a}, {"b", b}}, [&] { return sub(a, b); });
  check("mul", {{"a", a}, {"b", b}}, [&] { return mul(a, b); });
  check("scale", {{"x", a}}, [&] { return scale(a, -1.7); });
  check("relu", {{"x", a}}, [&] { return relu(a); });
  check("sum", {{"x", a}}, [&] { return reshape(sum(a), {1}); });
  check("mean", {{"x", a}}, [&] { return reshape(mean(a), {1}); });
  check("softmax", {{"x", a}}, [&] { return softmax(a); });
  const Tensor c3 = random_tensor({2, 3, 4}, rng);
  check("softmax_axis1", {{"x", c3}}, [&] { return softmax(c3, 1); });
  const Tensor gamma = random_tensor({4}, rng, 0.5, 1.5), beta = random_tensor({4}, rng);
  check("layer_norm", {{"x", a}, {"gamma", gamma}, {"beta", beta}},
        [&] { return layer_norm(a, gamma, beta); });
  check("max_pool_rows", {{"x", a}}, [&] { return max_pool_rows(a).values; });
  const Tensor tall = random_tensor({7, 3}, rng);
  const std::vector<std::size_t> seg{0, 2, 3, 7};
  check("segment_max", {{"x", tall}}, [&] { return segment_max(tall, seg).values; });
  const Tensor target = random_tensor({3, 4}, rng, -3.0, 3.0);
  check("smooth_l1", {{"pred", a}}, [&] { return reshape(smooth_l1(a, target), {1}); });
  const std::vector<std::size_t> cls{1, 3, 0};
  check("cross_entropy", {{"logits", a}}, [&] { return reshape(cross_entropy(a, cls), {1}); });
  check("reshape", {{"x", a}}, [&] { return reshape(a, {2, 6}); });
  check("transpose", {{"x", a}}, [&] { return transpose(a); });
  const std::vector<std::size_t> gi{2, 0, 2, 1};
  check("gather_rows", {{"x", a}}, [&] { return gather_rows(a, gi); });
  check("slice_rows", {{"x", a}}, [&] { return slice_rows(a, 1, 3); });
  check("concat_rows", {{"a", a}, {"b", tall}}, [&] {
    return concat_rows({reshape(a, {4, 3}), tall});
  });
  check("concat_cols", {{"a", a}, {"b", b}}, [&] { return concat_cols({a, b}); });
  const Tensor row = random_tensor({1, 4}, rng);
  check("repeat_rows", {{"x", row}}, [&] { return repeat_rows(row, 3); });
  check("interleave_heads", {{"a", a}, {"b", b}}, [&] { return interleave_heads(a, b, 2); });
  const Tensor q = random_tensor({3, 4}, rng), k = random_tensor({6, 4}, rng),
               v = random_tensor({6, 6}, rng);
  const std::vector<std::size_t> offs{0, 1, 4, 6};
  check("neighbor_attention", {{"q", q}, {"k", k}, {"v", v}},
        [&] { return neighbor_attention(q, k, v, offs, 2); });

  // Full graph at toy size, with trajectory queries left attached so that
  // gradients flow through every stage.
  RunConfig rc = preset("toy");
  rc.model.detach_queries = false;
  GeneratorConfig gen;
  const Scene scene = generate_synthetic(gen, opt.seed);
  AnchorModel anchors(rc.anchor, rc.model.coord_scale, opt.seed);
  const PreparedScene prepared = prepare_scene(scene, anchors, rc.model);
  BiffModel model(rc.model, opt.seed);
  std::vector<std::pair<std::string, Tensor>> params;
  for (Parameter* p : model.params().all()) params.emplace_back(p->name, p->value);
  GradCheckOptions full;
  full.max_entries = 4;
  full.zero_floor = 1e-5;
  full.step = 1e-4;
  full.seed = opt.seed;
  const auto report = check_gradients(
      [&] { return compute_loss(model.forward(prepared), prepared, rc.train).total; }, params, full);
  out.push_back(grad_result("full_graph_toy", report));
  return out;
}

namespace {

struct ForwardValues {
  std::vector<double> traj, goals, completed, gamma;
  MetricSummary metrics;
};

ForwardValues run_values(const BiffModel& model, const AnchorModel& anchors, const Scene& scene,
                         const RunConfig& rc) {
  NoGradGuard guard;
  const PreparedScene p = prepare_scene(scene, anchors, rc.model);
  const ForwardOutput out = model.forward(p);
  ForwardValues v;
  const auto cp = [](const Tensor& t) {
    const auto d = t.data();
    return std::vector<double>(d.begin(), d.end());
  };
  for (const auto& t : out.lfbf.trajectories) {
    const auto d = cp(t);
    v.traj.insert(v.traj.end(), d.begin(), d.end());
  }
  v.goals = cp(out.hfif.goals);
  v.completed = cp(out.hfif.completed);
  v.gamma = cp(out.hfif.gamma);
  const std::vector<PreparedScene> one{p};
  v.metrics = evaluate(model, one, rc.eval).all;
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::vector<CheckResult> run_invariance_suite(const CheckOptions& opt, std::ostream* csv) {
  RunConfig rc = preset("smoke");
  rc.model.k_modalities = 6;
  GeneratorConfig gen;
  const auto scenes = generate_dataset(gen, synthetic_templates(), opt.scenes, opt.seed);
  AnchorModel anchors(rc.anchor, rc.model.coord_scale, opt.seed);
  BiffModel model(rc.model, opt.seed);
  Rng rng(mix_seed(opt.seed, 2));
  double worst_pred = 0.0, worst_metric = 0.0;
  if (csv) *csv << "scene,angle,max_prediction_dev,max_metric_dev\n";
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const ForwardValues base = run_values(model, anchors, scenes[i], rc);
    for (int step = 0; step < 12; ++step) {
      const double angle = step * std::numbers::pi / 6.0;
      RigidTransform t{angle, {rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)}};
      const ForwardValues moved = run_values(model, anchors, transform_scene(scenes[i], t), rc);
      const double dp = std::max({max_abs_diff(base.traj, moved.traj),
                                  max_abs_diff(base.goals, moved.goals),
                                  max_abs_diff(base.completed, moved.completed),
                                  max_abs_diff(base.gamma, moved.gamma)});
      const double dm = std::max({std::abs(base.metrics.min_ade - moved.metrics.min_ade),
                                  std::abs(base.metrics.min_fde - moved.metrics.min_fde),
                                  std::abs(base.metrics.miss_rate - moved.metrics.miss_rate),
                                  std::abs(base.metrics.ccr - moved.metrics.ccr)});
      worst_pred = std::max(worst_pred, dp);
      worst_metric = std::max(worst_metric, dm);
      if (csv) *csv << i << ',' << angle << ',' << dp << ',' << dm << '\n';
    }
  }
  auto fmt = [](double v) {
    std::ostringstream os;
    os << "max dev " << std::scientific << std::setprecision(2) << v;
    return os.str();
  };
  return {{"invariance", "predictions", worst_pred < 1e-6, worst_pred, fmt(worst_pred)},
          {"invariance", "metrics", worst_metric < 1e-6, worst_metric, fmt(worst_metric)}};
}

namespace {

AgentTrack random_future_track(Rng& rng, std::size_t T) {
  AgentTrack t;
  t.history.push_back({});
  for (std::size_t k = 0; k < T; ++k)
    t.future.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform() > 0.2});
  t.future[rng.below(T)].valid = true;
  return t;
}

double brute_closest(const AgentTrack& a, const AgentTrack& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a.future)
    for (const auto& q : b.future)
      if (p.valid && q.valid) best = std::min(best, distance(p.position(), q.position()));
  return best;
}

// Analytic region test written independently of PruneRegion.
bool region_oracle(Vec2 p, std::span<const Vec2> anchors) {
  double df = 0.0, dr = 0.0;
  for (Vec2 a : anchors) (a.x >= 0.0 ? df : dr) = std::max(a.x >= 0.0 ? df : dr, std::hypot(a.x, a.y));
  const bool disc_front = df > dr;
  const double disc_r = (disc_front ? df : dr) + 30.0;
  const double ell_b = (disc_front ? dr : df) + 20.0;
  const bool in_front = p.x >= 0.0;
  if (in_front == disc_front) return std::hypot(p.x, p.y) <= disc_r;
  return (p.x * p.x) / (ell_b * ell_b) + (p.y * p.y) / (disc_r * disc_r) <= 1.0;
}

JointPrediction random_prediction(Rng& rng, std::size_t K, std::size_t A, std::size_t T) {
  JointPrediction p;
  p.K = K;
  p.A = A;
  p.T = T;
  for (std::size_t a = 0; a < A; ++a)
    p.frames.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-3, 3)});
  p.local.resize(K * A * T * 2);
  for (double& x : p.local) x = rng.uniform(-15, 15);
  return p;
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng(mix_seed(opt.seed, 3));
  auto add = [&](const std::string& name, std::size_t mismatches, std::size_t total) {
    out.push_back({"oracles", name, mismatches == 0, static_cast<double>(mismatches),
                   std::to_string(mismatches) + " mismatches / " + std::to_string(total)});
  };

  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_future_track(rng, 30), b = random_future_track(rng, 30);
    bad += closest_future_distance(a, b) != brute_closest(a, b);
  }
  add("closest_future_distance", bad, 1000);

  bad = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<Vec2> anchors;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t k = 0; k < n; ++k) anchors.push_back({rng.uniform(-60, 60), rng.uniform(-40, 40)});
    const Vec2 p{rng.uniform(-120, 120), rng.uniform(-120, 120)};
    bad += prune_region(anchors).contains(p) != region_oracle(p, anchors);
  }
  add("prune_region", bad, 10000);

  bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = 1 + rng.below(6), A = 2;
    std::vector<Vec2> ends(K * A), gt(A);
    for (auto& e : ends) e = {std::round(rng.uniform(-5, 5)), std::round(rng.uniform(-5, 5))};
    for (auto& g : gt) g = {std::round(rng.uniform(-5, 5)), std::round(rng.uniform(-5, 5))};
    std::vector<double> err(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t a = 0; a < A; ++a) err[k] += std::hypot(ends[k * A + a].x - gt[a].x, ends[k * A + a].y - gt[a].y);
    const std::size_t expect = static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin());
    bad += select_wta_modality(ends, gt, K) != expect;
  }
  add("select_wta_modality", bad, 1000);

  bad = 0;
  for (int i = 0; i < 200; ++i) {
    GridSpec grid{10.0, 6.0, 2.0};
    std::vector<double> scores(grid.cells());
    for (double& s : scores) s = std::round(rng.uniform(0, 5));
    const std::size_t S = 1 + rng.below(grid.cells());
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return scores[x] > scores[y]; });
    const auto set = top_s(scores, S, grid);
    bad += !std::equal(set.cells.begin(), set.cells.end(), idx.begin());
  }
  add("top_s", bad, 200);

  // Metrics on seeded random predictions against scalar recomputation.
  std::size_t metric_bad = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t K = 6, A = 2, T = 12;
    const JointPrediction p = random_prediction(rng, K, A, T);
    JointTruth gt;
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<Vec2> w;
      for (std::size_t t = 0; t < T; ++t) w.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
      gt.world.push_back(w);
      gt.valid.emplace_back(T, true);
      gt.radii.push_back(rng.uniform(0.5, 6.0));
      gt.types.push_back(AgentType::kVehicle);
    }
    double ade = 1e300, fde = 1e300, coll = 0.0;
    bool miss = true;
    for (std::size_t k = 0; k < K; ++k) {
      double sa = 0.0, sf = 0.0;
      bool hit = true, c = false;
      for (std::size_t a = 0; a < A; ++a) {
        double s = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const Vec2 w = from_frame(p.local_at(k, a, t), p.frames[a]);
          s += std::hypot(w.x - gt.world[a][t].x, w.y - gt.world[a][t].y);
        }
        sa += s / T;
        const Vec2 e = from_frame(p.local_at(k, a, T - 1), p.frames[a]);
        const double f = std::hypot(e.x - gt.world[a][T - 1].x, e.y - gt.world[a][T - 1].y);
        sf += f;
        hit = hit && f <= 2.0;
      }
      for (std::size_t t = 0; t < T; ++t) {
        const Vec2 u = from_frame(p.local_at(k, 0, t), p.frames[0]);
        const Vec2 v = from_frame(p.local_at(k, 1, t), p.frames[1]);
        c = c || std::hypot(u.x - v.x, u.y - v.y) < gt.radii[0] + gt.radii[1];
      }
      ade = std::min(ade, sa / A);
      fde = std::min(fde, sf / A);
      miss = miss && !hit;
      coll += c;
    }
    metric_bad += std::abs(min_ade(p, gt) - ade) > 1e-12 || std::abs(min_fde(p, gt) - fde) > 1e-12 ||
                  is_miss(p, gt, 2.0) != miss ||
                  cross_collision_rate(p, gt.radii) != coll / K;
  }
  add("metrics", metric_bad, 100);
  return out;
}

void print_check_table(std::ostream& os, const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    os << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(11) << r.suite << ' '
       << std::setw(24) << r.name << ' ' << r.detail << '\n';
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace biff
