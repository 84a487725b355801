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

// biff: scenario generation, training, prediction, evaluation and checks.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "biff/checkpoint.hpp"
#include "biff/checks.hpp"
#include "biff/error.hpp"
#include "biff/metrics.hpp"
#include "biff/scene_io.hpp"
#include "biff/synthetic.hpp"
#include "biff/training.hpp"

namespace fs = std::filesystem;
using namespace biff;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kCheckFailed = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("BIFF_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("BIFF_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig rc = path.empty() ? preset("default") : load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(rc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate(rc);
  return rc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  os << text;
}

std::vector<Scene> load_scenes(const std::string& path) {
  auto scenes = read_scenes(path);
  if (scenes.empty()) throw DataError("no scenes in '" + path + "'");
  return scenes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biff: joint motion forecasting with intention and behavior fusion"};
  app.require_subcommand(1);
  std::size_t threads_flag = 0;
  app.add_option("--threads", threads_flag, "worker threads (falls back to BIFF_THREADS)");

  // generate
  auto* gen = app.add_subcommand("generate", "write synthetic scenes as JSONL");
  std::string templates = "crossing", out_path;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  GeneratorConfig gcfg;
  gen->add_option("--template", templates, "template name or comma list")->capture_default_str();
  gen->add_option("--count", count, "number of scenes")->capture_default_str();
  gen->add_option("--seed", seed, "dataset seed")->capture_default_str();
  gen->add_option("--out", out_path, "output JSONL path")->required();
  gen->add_option("--distractors", gcfg.n_distractors, "non-target agents")->capture_default_str();
  gen->add_flag("!--no-global-pose", gcfg.random_global_pose, "keep scenes in their canonical pose");

  // shared options
  std::string config_path, data_path, anchors_path, ckpt_path, eval_path, report_path, curve_path;
  std::vector<std::string> overrides;

  auto* ta = app.add_subcommand("train-anchors", "train the frozen intention grid head");
  ta->add_option("--config", config_path, "config file");
  ta->add_option("--set", overrides, "key=value override (repeatable)");
  ta->add_option("--data", data_path, "training scenes")->required();
  ta->add_option("--out", out_path, "anchor checkpoint path")->required();

  auto* tr = app.add_subcommand("train", "train the forecasting model");
  tr->add_option("--config", config_path, "config file");
  tr->add_option("--set", overrides, "key=value override (repeatable)");
  tr->add_option("--data", data_path, "training scenes")->required();
  tr->add_option("--anchors", anchors_path, "anchor checkpoint from train-anchors")->required();
  tr->add_option("--eval-data", eval_path, "held-out scenes for per-epoch metrics");
  tr->add_option("--out", out_path, "final checkpoint path")->required();
  tr->add_option("--curve", curve_path, "loss-curve CSV (default <out>.loss.csv)");

  auto* pr = app.add_subcommand("predict", "write joint predictions as JSONL");
  pr->add_option("--checkpoint", ckpt_path)->required();
  pr->add_option("--data", data_path)->required();
  pr->add_option("--out", out_path)->required();

  auto* ev = app.add_subcommand("eval", "compute metrics");
  ev->add_option("--checkpoint", ckpt_path)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--report", report_path, "JSON report path; CSV goes next to it")->required();

  auto* ck = app.add_subcommand("check", "run property suites");
  std::string suite;
  CheckOptions copt;
  std::string sweep_csv;
  ck->add_option("--suite", suite)->required()->check(CLI::IsMember({"gradcheck", "invariance", "oracles"}));
  ck->add_option("--scenes", copt.scenes, "scenes for the invariance sweep")->capture_default_str();
  ck->add_option("--seed", copt.seed)->capture_default_str();
  ck->add_option("--csv", sweep_csv, "invariance sweep CSV");

  auto* cf = app.add_subcommand("config", "print the canonical config");
  std::string preset_name = "default";
  cf->add_option("--preset", preset_name)->capture_default_str();
  cf->add_option("--config", config_path, "config file to canonicalize");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    const std::size_t threads = resolve_threads(threads_flag);

    if (*gen) {
      const auto names = split_list(templates);
      if (names.empty()) throw ConfigError("--template is empty");
      for (const auto& n : names) {
        const auto& known = synthetic_templates();
        if (std::find(known.begin(), known.end(), n) == known.end())
          throw ConfigError("unknown template '" + n + "'");
      }
      const auto scenes = generate_dataset(gcfg, names, count, seed);
      write_scenes(out_path, scenes);
      std::cout << "generated " << scenes.size() << " scenes (seed " << seed << ") -> " << out_path << '\n';
      return kOk;
    }

    if (*cf) {
      RunConfig rc = config_path.empty() ? preset(preset_name) : load_config(config_path);
      std::cout << serialize_config(rc);
      return kOk;
    }

    if (*ta) {
      RunConfig rc = load_run_config(config_path, overrides);
      const auto scenes = load_scenes(data_path);
      AnchorModel anchors(rc.anchor, rc.model.coord_scale, rc.train.seed);
      const auto rep = train_anchor_head(anchors, scenes, rc.anchor.epochs, rc.train.seed);
      if (rep.clamped_targets > 0)
        std::cerr << "warning: " << rep.clamped_targets << " endpoints outside the grid were clamped\n";
      save_checkpoint(out_path, make_checkpoint(rc, nullptr, &anchors));
      std::cout << "anchor loss " << rep.epoch_loss.front() << " -> " << rep.epoch_loss.back()
                << " over " << rep.epoch_loss.size() << " epochs -> " << out_path << '\n';
      return kOk;
    }

    if (*tr) {
      RunConfig rc = load_run_config(config_path, overrides);
      rc.threads = threads;
      if (!fs::exists(anchors_path))
        throw DataError("anchor checkpoint '" + anchors_path + "' not found; run train-anchors first");
      const Checkpoint anchor_ckpt = load_checkpoint(anchors_path);
      AnchorModel anchors = anchors_from_checkpoint(anchor_ckpt);
      if (anchor_ckpt.config.model.coord_scale != rc.model.coord_scale)
        throw ConfigError("coord_scale differs from the anchor checkpoint");
      rc.anchor = anchor_ckpt.config.anchor;
      const auto scenes = load_scenes(data_path);
      const auto train_set = prepare_scenes(scenes, anchors, rc.model, threads);
      std::vector<PreparedScene> eval_set;
      if (!eval_path.empty()) eval_set = prepare_scenes(load_scenes(eval_path), anchors, rc.model, threads);
      BiffModel model(rc.model, rc.train.seed);
      TrainHooks hooks;
      hooks.on_epoch = [](const EpochLog& e) {
        std::cout << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss;
        if (e.evaluated) std::cout << " minFDE " << e.eval.min_fde << " CCR " << e.eval.ccr;
        std::cout << std::endl;
      };
      const TrainResult result = train(model, train_set, eval_set, rc, hooks);
      save_checkpoint(out_path, make_checkpoint(rc, &model, &anchors, result.rng_state));
      restore_params(model.params(), result.best_params);
      save_checkpoint(out_path + ".best", make_checkpoint(rc, &model, &anchors, result.rng_state));
      std::ostringstream curve;
      write_loss_curve_csv(curve, result);
      write_text(curve_path.empty() ? out_path + ".loss.csv" : curve_path, curve.str());
      std::cout << "checkpoint -> " << out_path << " (best epoch " << result.best_epoch << " -> "
                << out_path << ".best)\n";
      return kOk;
    }

    if (*pr || *ev) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const auto model = model_from_checkpoint(ckpt);
      const AnchorModel anchors = anchors_from_checkpoint(ckpt);
      const auto scenes = prepare_scenes(load_scenes(data_path), anchors, ckpt.config.model, threads);
      std::vector<JointPrediction> preds;
      const MetricReport report = evaluate(*model, scenes, ckpt.config.eval, threads, &preds);
      if (*pr) {
        std::ofstream os(out_path);
        if (!os) throw DataError("cannot write '" + out_path + "'");
        for (const auto& p : preds)
          if (p.K > 0) os << prediction_to_json_line(p) << '\n';
        std::cout << "wrote predictions for " << report.all.count << " scenes -> " << out_path << '\n';
      } else {
        write_text(report_path, report.to_json() + "\n");
        std::ostringstream csv;
        report.write_csv(csv);
        write_text(fs::path(report_path).replace_extension(".csv"), csv.str());
        std::cout << report.to_json() << '\n';
      }
      return kOk;
    }

    if (*ck) {
      copt.threads = threads;
      std::vector<CheckResult> results;
      if (suite == "gradcheck") {
        results = run_gradcheck_suite(copt);
      } else if (suite == "invariance") {
        std::ofstream csv;
        if (!sweep_csv.empty()) csv.open(sweep_csv);
        results = run_invariance_suite(copt, sweep_csv.empty() ? nullptr : &csv);
      } else {
        results = run_oracle_suite(copt);
      }
      print_check_table(std::cout, results);
      return all_passed(results) ? kOk : kCheckFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
