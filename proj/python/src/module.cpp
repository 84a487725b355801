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

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>

#include "biff/checkpoint.hpp"
#include "biff/checks.hpp"
#include "biff/error.hpp"
#include "biff/geometry.hpp"
#include "biff/metrics.hpp"
#include "biff/scene_io.hpp"
#include "biff/synthetic.hpp"
#include "biff/training.hpp"

namespace py = pybind11;
using namespace biff;

namespace {

// Model, anchors and config travel together, as in a checkpoint.
struct Forecaster {
  RunConfig config;
  AnchorModel anchors;
  std::unique_ptr<BiffModel> model;
};

py::object json_loads(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

py::array_t<double> trajectory_array(const JointPrediction& p, bool world) {
  py::array_t<double> out({p.K, p.A, p.T, std::size_t{2}});
  auto v = out.mutable_unchecked<4>();
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t a = 0; a < p.A; ++a)
      for (std::size_t t = 0; t < p.T; ++t) {
        const Vec2 q = world ? p.world_at(k, a, t) : p.local_at(k, a, t);
        v(k, a, t, 0) = q.x;
        v(k, a, t, 1) = q.y;
      }
  return out;
}

py::dict prediction_dict(const JointPrediction& p) {
  py::dict d;
  d["scene_id"] = p.scene_id;
  d["agent_ids"] = p.agent_ids;
  d["local"] = trajectory_array(p, false);
  d["world"] = trajectory_array(p, true);
  d["likelihood"] = py::array_t<double>(p.likelihood.size(), p.likelihood.data());
  std::vector<std::array<double, 3>> frames;
  for (const auto& f : p.frames) frames.push_back({f.x, f.y, f.theta});
  d["frames"] = frames;
  return d;
}

py::dict summary_dict(const MetricSummary& s) {
  py::dict d;
  d["minADE"] = s.min_ade;
  d["minFDE"] = s.min_fde;
  d["MR"] = s.miss_rate;
  d["CCR"] = s.ccr;
  d["count"] = s.count;
  return d;
}

AnchorModel copy_anchors(const AnchorModel& a) {
  AnchorModel out(a.config(), a.coord_scale(), 0);
  import_params(out.params(), export_params(a.params()));
  return out;
}

std::vector<PreparedScene> prepare(const Forecaster& f, const std::vector<Scene>& scenes) {
  return prepare_scenes(scenes, f.anchors, f.config.model, f.config.threads);
}

}  // namespace

PYBIND11_MODULE(_biff, m) {
  m.doc() = "Joint multi-agent trajectory forecasting";

  auto base = py::register_exception<Error>(m, "BiffError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", data.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", data.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());

  py::class_<RunConfig>(m, "Config")
      .def(py::init([](const std::string& name) { return preset(name); }), py::arg("preset") = "default")
      .def_static("parse", &parse_config, py::arg("text"), py::arg("base_preset") = "default")
      .def_static("load", &load_config, py::arg("path"))
      .def_static("presets", &preset_names)
      .def_static("keys", &config_keys)
      .def("set", &set_config_value, py::arg("key"), py::arg("value"))
      .def("apply", &apply_config_text, py::arg("text"))
      .def("validate", [](const RunConfig& c) { validate(c); })
      .def("to_text", &serialize_config)
      .def_readwrite("threads", &RunConfig::threads)
      .def("__repr__", [](const RunConfig& c) { return "<biff.Config>\n" + serialize_config(c); });

  py::class_<Scene>(m, "Scene")
      .def_static("from_json", [](const std::string& s) { return scene_from_json_line(s); })
      .def("to_json", &scene_to_json_line)
      .def_readonly("scene_id", &Scene::scene_id)
      .def_readonly("template", &Scene::template_name)
      .def_readonly("seed", &Scene::seed)
      .def_readonly("target_pair", &Scene::target_pair)
      .def_property_readonly("num_agents", [](const Scene& s) { return s.agents.size(); })
      .def_property_readonly("num_roads", [](const Scene& s) { return s.roads.size(); })
      .def(
          "transformed",
          [](const Scene& s, double rotation, double tx, double ty) {
            return transform_scene(s, RigidTransform{rotation, {tx, ty}});
          },
          py::arg("rotation"), py::arg("tx") = 0.0, py::arg("ty") = 0.0)
      .def(py::self == py::self)
      .def("__repr__", [](const Scene& s) {
        return "<biff.Scene " + s.scene_id + " agents=" + std::to_string(s.agents.size()) +
               " roads=" + std::to_string(s.roads.size()) + ">";
      });

  m.def("templates", &synthetic_templates);
  m.def(
      "generate_scenes",
      [](std::size_t count, std::uint64_t seed, std::optional<std::vector<std::string>> templates,
         std::size_t t_future, std::size_t distractors, bool random_global_pose) {
        GeneratorConfig g;
        g.t_future = t_future;
        g.n_distractors = distractors;
        g.random_global_pose = random_global_pose;
        return generate_dataset(g, templates.value_or(synthetic_templates()), count, seed);
      },
      py::arg("count"), py::arg("seed") = 0, py::arg("templates") = py::none(), py::arg("t_future") = 80,
      py::arg("distractors") = 1, py::arg("random_global_pose") = true);
  m.def("read_scenes", py::overload_cast<const std::filesystem::path&>(&read_scenes), py::arg("path"));
  m.def("write_scenes",
        py::overload_cast<const std::filesystem::path&, const std::vector<Scene>&>(&write_scenes),
        py::arg("path"), py::arg("scenes"));

  py::class_<AnchorModel>(m, "AnchorModel")
      .def(py::init([](const RunConfig& c, std::uint64_t seed) {
             return AnchorModel(c.anchor, c.model.coord_scale, seed);
           }),
           py::arg("config"), py::arg("seed") = 0)
      .def(
          "train",
          [](AnchorModel& a, const std::vector<Scene>& scenes, std::size_t epochs, std::uint64_t seed) {
            AnchorTrainReport r;
            {
              py::gil_scoped_release release;
              r = train_anchor_head(a, scenes, epochs, seed);
            }
            py::dict d;
            d["epoch_loss"] = r.epoch_loss;
            d["clamped_targets"] = r.clamped_targets;
            d["skipped_agents"] = r.skipped_agents;
            return d;
          },
          py::arg("scenes"), py::arg("epochs"), py::arg("seed") = 0);

  py::class_<Forecaster>(m, "Forecaster")
      .def(py::init([](const RunConfig& c, const AnchorModel& anchors, std::uint64_t seed) {
             validate(c);
             return Forecaster{c, copy_anchors(anchors), std::make_unique<BiffModel>(c.model, seed)};
           }),
           py::arg("config"), py::arg("anchors"), py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& path) {
        const Checkpoint ck = load_checkpoint(path);
        return Forecaster{ck.config, anchors_from_checkpoint(ck), model_from_checkpoint(ck)};
      })
      .def("save",
           [](const Forecaster& f, const std::filesystem::path& path) {
             save_checkpoint(path, make_checkpoint(f.config, f.model.get(), &f.anchors));
           })
      .def_readonly("config", &Forecaster::config)
      .def_property_readonly("num_parameters",
                             [](const Forecaster& f) {
                               std::size_t n = 0;
                               for (const Parameter* p : f.model->params().all()) n += p->value.numel();
                               return n;
                             })
      .def(
          "train",
          [](Forecaster& f, const std::vector<Scene>& scenes, const std::vector<Scene>& eval_scenes) {
            TrainResult r;
            {
              py::gil_scoped_release release;
              const auto tr = prepare(f, scenes);
              const auto ev = prepare(f, eval_scenes);
              r = train(*f.model, tr, ev, f.config);
            }
            py::list curve;
            for (const auto& e : r.curve) {
              py::dict d;
              d["epoch"] = e.epoch;
              d["lr"] = e.lr;
              d["train_loss"] = e.train_loss;
              d["skipped"] = e.skipped;
              if (e.evaluated) d["eval"] = summary_dict(e.eval);
              curve.append(d);
            }
            py::dict d;
            d["step_losses"] = r.step_losses;
            d["curve"] = curve;
            d["best_epoch"] = r.best_epoch;
            return d;
          },
          py::arg("scenes"), py::arg("eval_scenes") = std::vector<Scene>{})
      .def(
          "evaluate",
          [](const Forecaster& f, const std::vector<Scene>& scenes) {
            std::string js;
            {
              py::gil_scoped_release release;
              js = evaluate(*f.model, prepare(f, scenes), f.config.eval, f.config.threads).to_json();
            }
            return json_loads(js);
          },
          py::arg("scenes"))
      .def(
          "predict",
          [](const Forecaster& f, const Scene& scene) {
            JointPrediction p;
            {
              py::gil_scoped_release release;
              p = predict(*f.model, prepare_scene(scene, f.anchors, f.config.model));
            }
            return prediction_dict(p);
          },
          py::arg("scene"));

  m.def(
      "run_checks",
      [](const std::string& suite, std::size_t scenes, std::uint64_t seed) {
        CheckOptions o;
        o.scenes = scenes;
        o.seed = seed;
        std::vector<CheckResult> rs;
        {
          py::gil_scoped_release release;
          if (suite == "gradcheck") rs = run_gradcheck_suite(o);
          else if (suite == "invariance") rs = run_invariance_suite(o);
          else if (suite == "oracles") rs = run_oracle_suite(o);
          else throw ConfigError("unknown suite '" + suite + "'");
        }
        py::list out;
        for (const auto& r : rs) {
          py::dict d;
          d["suite"] = r.suite;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["value"] = r.value;
          d["detail"] = r.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("suite"), py::arg("scenes") = 20, py::arg("seed") = 7);

  m.def(
      "to_frame",
      [](double x, double y, double fx, double fy, double ftheta) {
        const Vec2 p = to_frame({x, y}, Pose2D{fx, fy, ftheta});
        return std::pair{p.x, p.y};
      },
      py::arg("x"), py::arg("y"), py::arg("fx"), py::arg("fy"), py::arg("ftheta"));
  m.def(
      "from_frame",
      [](double x, double y, double fx, double fy, double ftheta) {
        const Vec2 p = from_frame({x, y}, Pose2D{fx, fy, ftheta});
        return std::pair{p.x, p.y};
      },
      py::arg("x"), py::arg("y"), py::arg("fx"), py::arg("fy"), py::arg("ftheta"));
  m.def("wrap_angle", &wrap_angle, py::arg("angle"));
}
