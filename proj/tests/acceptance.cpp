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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "biff/anchors.hpp"
#include "biff/checkpoint.hpp"
#include "biff/checks.hpp"
#include "biff/decoder.hpp"
#include "biff/metrics.hpp"
#include "biff/preprocess.hpp"
#include "biff/training.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace biff;
using biff::test::random_tensor;
using biff::test::values;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::string summarize(const std::vector<CheckResult>& rs) {
  const CheckResult* worst = nullptr;
  std::string failed;
  for (const auto& r : rs) {
    if (!r.passed) failed += " " + r.name;
    if (!worst || r.value > worst->value) worst = &r;
  }
  std::string s = std::to_string(rs.size()) + " checks";
  if (worst) s += ", worst " + worst->name + " " + worst->detail;
  if (!failed.empty()) s += ", failed:" + failed;
  return s;
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rs = run_gradcheck_suite(CheckOptions{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {all_passed(rs) && secs < 60.0, summarize(rs) + ", " + fmt(secs) + " s"};
}

Outcome invariance() {
  CheckOptions opt;
  opt.scenes = 20;
  const auto rs = run_invariance_suite(opt);
  return {all_passed(rs), summarize(rs)};
}

Outcome wta() {
  Rng rng(301);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = 1 + rng.below(6), A = 1 + rng.below(3);
    std::vector<Vec2> ends(K * A), gt(A);
    // Coarse integer coordinates make ties common.
    for (auto& e : ends) e = {std::round(rng.uniform(-4, 4)), std::round(rng.uniform(-4, 4))};
    for (auto& g : gt) g = {std::round(rng.uniform(-4, 4)), std::round(rng.uniform(-4, 4))};
    bad += select_wta_modality(ends, gt, K) != oracle::wta_scan(ends, gt, K);
  }
  std::size_t leaks = 0, dead = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto world = biff::test::toy_world(seed);
    world.config.model.k_modalities = 3;
    BiffModel model(world.config.model, seed);
    const auto terms = compute_loss(model.forward(world.prepared), world.prepared, world.config.train);
    backward(terms.total);
    const Parameter* w = model.params().find("hfif.goal_heads.weight");
    const Parameter* b = model.params().find("hfif.goal_heads.bias");
    const std::size_t K = 3, d = w->shape()[0];
    double selected = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < d; ++i) {
        const double g = w->value.grad()[i * K + k];
        if (k == terms.k_star) selected += std::abs(g);
        else leaks += g != 0.0;
      }
      if (k != terms.k_star) leaks += b->value.grad()[k] != 0.0;
    }
    dead += selected == 0.0;
  }
  return {bad == 0 && leaks == 0 && dead == 0,
          std::to_string(bad) + "/1000 selection mismatches, " + std::to_string(leaks) +
              " nonzero grads on non-selected heads over 10 scenes"};
}

AgentTrack random_track(Rng& rng, std::size_t T) {
  AgentTrack t;
  t.history.push_back({});
  for (std::size_t k = 0; k < T; ++k)
    t.future.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform() > 0.2});
  t.future[rng.below(T)].valid = true;
  return t;
}

Outcome preprocessing() {
  Rng rng(401);
  std::size_t dist_bad = 0, region_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_track(rng, 30), b = random_track(rng, 30);
    dist_bad += closest_future_distance(a, b) != oracle::closest_future_distance(a, b);
  }
  for (int i = 0; i < 10000; ++i) {
    std::vector<Vec2> anchors;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t k = 0; k < n; ++k) anchors.push_back({rng.uniform(-70, 70), rng.uniform(-40, 40)});
    const Vec2 p{rng.uniform(-130, 130), rng.uniform(-130, 130)};
    region_bad += prune_region(anchors).contains(p) != oracle::prune_inside(p, anchors);
  }
  // Margins: single front anchor at 10 m gives a 40 m disc ahead and a 20 m semi-axis behind.
  const std::vector<Vec2> one{{10, 0}};
  const PruneRegion r = prune_region(one);
  const bool margins = r.contains({40, 0}) && !r.contains({40.001, 0}) && r.contains({-20, 0}) &&
                       !r.contains({-20.001, 0}) && r.contains({0, 40}) && !r.contains({0, 40.001});
  return {dist_bad == 0 && region_bad == 0 && margins,
          std::to_string(dist_bad) + "/1000 distance, " + std::to_string(region_bad) +
              "/10000 region mismatches, margins " + (margins ? "ok" : "wrong")};
}

Outcome metric_oracles() {
  auto world = biff::test::toy_world(3);
  world.config.model.k_modalities = 6;
  const BiffModel model(world.config.model, 5);
  GeneratorConfig gen;
  const auto scenes = generate_dataset(gen, synthetic_templates(), 100, 501);
  const auto prepared = prepare_scenes(scenes, world.anchors, world.config.model);
  std::vector<JointPrediction> preds;
  const MetricReport rep = evaluate(model, prepared, world.config.eval, 1, &preds);
  std::size_t bad = 0;
  double ade = 0, fde = 0, miss = 0, ccr = 0;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const JointTruth gt = truth_of(prepared[i]);
    const auto o = oracle::score_scene(preds[i], gt, world.config.eval.miss_threshold);
    const auto m = scene_metrics(preds[i], gt, world.config.eval);
    bad += m.ade != o.min_ade || m.fde != o.min_fde || m.miss != o.miss || m.ccr != o.ccr;
    ade += o.min_ade, fde += o.min_fde, miss += o.miss, ccr += o.ccr;
  }
  const double n = double(prepared.size());
  bad += rep.all.min_ade != ade / n || rep.all.min_fde != fde / n || rep.all.miss_rate != miss / n ||
         rep.all.ccr != ccr / n;

  // Constructed case: the two paths cross at (10, 0); even modalities arrive together.
  const std::size_t K = 6, T = 20;
  JointPrediction p;
  p.K = K;
  p.A = 2;
  p.T = T;
  p.frames = {Pose2D{0, 0, 0}, Pose2D{10, 10, -std::numbers::pi / 2}};
  p.local.assign(K * 2 * T * 2, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double delay = k % 2 == 0 ? 0.0 : 5.0;
    for (std::size_t t = 0; t < T; ++t) {
      p.local[((k * 2 + 0) * T + t) * 2] = double(t);
      p.local[((k * 2 + 1) * T + t) * 2] = std::max(0.0, double(t) - delay);
    }
  }
  const std::vector<double> radii{0.5, 0.5};
  const double c = cross_collision_rate(p, radii);
  return {bad == 0 && c == 0.5,
          std::to_string(bad) + " mismatches on 100 scenes, constructed CCR " + fmt(c)};
}

Outcome goal_contract() {
  Rng rng(601);
  const std::size_t A = 2, S = 9, K = 6;
  std::size_t outputs = 0, bad = 0;
  double worst_sum = 0.0;
  while (outputs < 1000) {
    std::vector<IntentionSet> sets(A);
    for (auto& set : sets)
      for (std::size_t s = 0; s < S; ++s) set.positions.push_back({rng.uniform(-60, 60), rng.uniform(-40, 40)});
    const Tensor logits = random_tensor({A, S, K}, rng, -10, 10);
    const Tensor gamma = ops::reshape(ops::softmax(logits, 1), {A * S, K});
    const Tensor goals = HfifDecoder::goals_from_gamma(gamma, sets, K);
    for (std::size_t a = 0; a < A; ++a) {
      const auto hull = oracle::convex_hull(sets[a].positions);
      for (std::size_t k = 0; k < K; ++k, ++outputs) {
        double total = 0.0;
        for (std::size_t s = 0; s < S; ++s) total += gamma(a * S + s, k);
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        bad += std::abs(total - 1.0) > 1e-7 ||
               !oracle::inside_hull(hull, {goals(k * A + a, 0), goals(k * A + a, 1)}, 1e-9);
      }
    }
  }
  return {bad == 0, std::to_string(bad) + "/" + std::to_string(outputs) +
                        " violations, worst |sum - 1| " + fmt(worst_sum)};
}

Tensor perturb_rows(const Tensor& x, const std::vector<std::size_t>& rows, Rng& rng) {
  auto v = values(x);
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < x.cols(); ++c) v[r * x.cols() + c] = rng.uniform(-3, 3);
  return Tensor(x.shape(), v);
}

// Rows selected by `same` match exactly and some other row differs, so no probe is vacuous.
bool split_rows(const Tensor& a, const Tensor& b, std::size_t n, const std::function<bool(std::size_t)>& same) {
  bool eq = true, diff = false;
  for (std::size_t r = 0; r < n; ++r) {
    bool row_eq = true;
    for (std::size_t c = 0; c < a.cols(); ++c) row_eq = row_eq && a(r, c) == b(r, c);
    if (same(r)) eq = eq && row_eq;
    else diff = diff || !row_eq;
  }
  return eq && diff;
}

Outcome attention_probes() {
  constexpr std::size_t d = 8, heads = 2;
  ParamStore store;
  Rng rng(701);
  const GroupSelfAttention sa(store, "sa", d, heads, rng);
  const FusionAttention fu(store, "fu", d, heads, rng);
  std::size_t failed = 0, probes = 0;
  auto probe = [&](bool ok) { ++probes, failed += !ok; };

  for (int rep = 0; rep < 5; ++rep) {
    // Intention self-attention, rows a*S+s; behaviour self-attention, rows k*A+a.
    for (const bool behaviour : {false, true}) {
      const std::size_t A = 3, M = 4, n = A * M;
      const PairList pairs = behaviour ? lfbf_self_pairs(M, A) : hfif_self_pairs(A, M);
      auto agent_of = [&](std::size_t r) { return behaviour ? r % A : r / M; };
      const Tensor h = random_tensor({n, d}, rng), e = random_tensor({n, d}, rng);
      for (std::size_t victim = 0; victim < A; ++victim) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < n; ++r)
          if (agent_of(r) == victim) rows.push_back(r);
        probe(split_rows(sa(h, e, pairs), sa(perturb_rows(h, rows, rng), perturb_rows(e, rows, rng), pairs), n,
                         [&](std::size_t r) { return agent_of(r) != victim; }));
      }
    }
    // Intention fusion keys exclude the querying agent's own intentions.
    {
      const std::size_t A = 3, S = 4, N = 6, n = A * S;
      const std::vector<std::size_t> targets{2, 0, 5};
      const FusionPairs fp = hfif_fusion_pairs(A, S, N, targets);
      const Tensor h = random_tensor({n, d}, rng), e = random_tensor({n, d}, rng);
      const Tensor pe = random_tensor({A * N, d}, rng), ex = random_tensor({A * (A - 1) * S, d}, rng);
      const Tensor base = fu(h, e, pe, ex, fp);
      for (std::size_t q = 0; q < n; ++q) {
        const std::size_t a = q / S;
        std::vector<std::size_t> own;
        for (std::size_t s = 0; s < S; ++s)
          if (a * S + s != q) own.push_back(a * S + s);
        const Tensor out = fu(perturb_rows(h, own, rng), e, pe, ex, fp);
        bool same = true;
        for (std::size_t c = 0; c < d; ++c) same = same && base(q, c) == out(q, c);
        probe(same);
      }
    }
    // Behaviour fusion stays inside one modality.
    {
      const std::size_t K = 4, A = 3, N = 6, n = K * A;
      const std::vector<std::size_t> targets{1, 4, 3};
      const FusionPairs fp = lfbf_fusion_pairs(K, A, N, targets);
      const Tensor h = random_tensor({n, d}, rng), e = random_tensor({n, d}, rng);
      const Tensor pe = random_tensor({A * N, d}, rng), ex = random_tensor({A * (A - 1) * K, d}, rng);
      const Tensor base = fu(h, e, pe, ex, fp);
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<std::size_t> others, others_ex;
        for (std::size_t r = 0; r < n; ++r)
          if (r / A != k) others.push_back(r);
        for (std::size_t r = 0; r < ex.rows(); ++r)
          if (r % K != k) others_ex.push_back(r);
        const Tensor out = fu(perturb_rows(h, others, rng), perturb_rows(e, others, rng), pe,
                              perturb_rows(ex, others_ex, rng), fp);
        probe(split_rows(base, out, n, [&](std::size_t r) { return r / A == k; }));
      }
    }
  }
  return {failed == 0, std::to_string(failed) + "/" + std::to_string(probes) + " probes failed"};
}

// Scenario of the learning-trend criterion. Both variants keep intention fusion
// on and differ only in behaviour fusion.
Outcome learning_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig rc = preset("desk");
  GeneratorConfig gen;
  gen.template_name = "crossing";
  const auto train_scenes = generate_dataset(gen, {"crossing"}, 500, 11);
  const auto eval_scenes = generate_dataset(gen, {"crossing"}, 100, 12);
  AnchorModel anchors(rc.anchor, rc.model.coord_scale, 1);
  train_anchor_head(anchors, train_scenes, rc.anchor.epochs, 1);
  const auto train_set = prepare_scenes(train_scenes, anchors, rc.model);
  const auto eval_set = prepare_scenes(eval_scenes, anchors, rc.model);

  auto run = [&](bool lfbf_fusion, double* untrained) {
    RunConfig c = rc;
    c.model.hfif_fusion = true;
    c.model.lfbf_fusion = lfbf_fusion;
    BiffModel model(c.model, 1);
    if (untrained) *untrained = evaluate(model, eval_set, c.eval).all.min_fde;
    train(model, train_set, {}, c);
    return evaluate(model, eval_set, c.eval).all;
  };
  double untrained = 0.0;
  const MetricSummary fused = run(true, &untrained);
  const MetricSummary plain = run(false, nullptr);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool a = fused.min_fde <= 0.5 * untrained;
  const bool b = fused.ccr <= plain.ccr;
  return {a && b, std::string("(a) ") + (a ? "ok" : "FAILED") + " minFDE " + fmt(untrained) + " -> " +
                      fmt(fused.min_fde) + "; (b) " + (b ? "ok" : "FAILED") + " CCR with behaviour fusion " +
                      fmt(fused.ccr) + " vs without " + fmt(plain.ccr) + " (minFDE " + fmt(plain.min_fde) +
                      "); " + fmt(secs / 60.0) + " min"};
}

Outcome determinism() {
  RunConfig rc = preset("smoke");
  rc.train.epochs = 3;
  rc.train.eval_every = 1;
  GeneratorConfig gen;
  const auto scenes = generate_dataset(gen, synthetic_templates(), 24, 901);
  struct Run {
    std::vector<double> losses;
    std::string curve, ckpt, report;
  };
  auto once = [&] {
    AnchorModel anchors(rc.anchor, rc.model.coord_scale, 2);
    train_anchor_head(anchors, scenes, 3, 1);
    const auto data = prepare_scenes(scenes, anchors, rc.model);
    BiffModel model(rc.model, 3);
    const TrainResult r = train(model, data, data, rc);
    Run out;
    out.losses = r.step_losses;
    std::ostringstream curve, ckpt;
    write_loss_curve_csv(curve, r);
    write_checkpoint(ckpt, make_checkpoint(rc, &model, &anchors, r.rng_state));
    out.curve = curve.str();
    out.ckpt = ckpt.str();
    out.report = evaluate(model, data, rc.eval, 2).to_json();
    return out;
  };
  const Run x = once(), y = once();
  const bool l = x.losses == y.losses && x.curve == y.curve, c = x.ckpt == y.ckpt, m = x.report == y.report;
  return {l && c && m && !x.losses.empty(),
          std::string("loss curves ") + (l ? "identical" : "differ") + ", checkpoints " +
              (c ? "identical" : "differ") + " (" + std::to_string(x.ckpt.size()) + " bytes), reports " +
              (m ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional argument: run a single criterion by number.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"frame robustness", invariance},
      {"winner-takes-all selection and isolation", wta},
      {"preprocessing oracles", preprocessing},
      {"metric oracles", metric_oracles},
      {"goal decoder contract", goal_contract},
      {"attention structure probes", attention_probes},
      {"learning trend", learning_trend},
      {"determinism", determinism},
  };
  bool ok = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && int(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ok = ok && o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return ok ? 0 : 1;
}
