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

#include "biff/scene_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "biff/error.hpp"

namespace biff {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::size_t line,
                    const std::string& where) {
  if (!obj.is_object()) throw ParseError(line, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ParseError(line, "unknown key '" + key + "' in " + where);
  }
  for (const auto& key : allowed) {
    if (!obj.contains(key)) throw ParseError(line, "missing key '" + key + "' in " + where);
  }
}

double num(const json& v, std::size_t line) {
  if (!v.is_number()) throw ParseError(line, "expected a number");
  return v.get<double>();
}

bool flag(const json& v, std::size_t line) {
  if (!v.is_boolean()) throw ParseError(line, "expected a boolean validity flag");
  return v.get<bool>();
}

const json& tuple(const json& v, std::size_t n, std::size_t line, const char* what) {
  if (!v.is_array() || v.size() != n)
    throw ParseError(line, std::string(what) + " must be an array of " + std::to_string(n) + " values");
  return v;
}

}  // namespace

std::string scene_to_json_line(const Scene& scene) {
  json j;
  j["schema"] = kSceneSchema;
  j["scene_id"] = scene.scene_id;
  j["template"] = scene.template_name;
  j["seed"] = scene.seed;
  j["target_pair"] = {scene.target_pair.first, scene.target_pair.second};
  json agents = json::array();
  for (const auto& a : scene.agents) {
    json ja;
    ja["id"] = a.id;
    ja["type"] = to_string(a.type);
    ja["footprint_radius"] = a.footprint_radius;
    json hist = json::array();
    for (const auto& s : a.history) hist.push_back({s.x, s.y, s.vx, s.vy, s.heading, s.valid});
    ja["history"] = std::move(hist);
    json fut = json::array();
    for (const auto& f : a.future) fut.push_back({f.x, f.y, f.valid});
    ja["future"] = std::move(fut);
    agents.push_back(std::move(ja));
  }
  j["agents"] = std::move(agents);
  json roads = json::array();
  for (const auto& r : scene.roads) {
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back({p.x, p.y, p.direction, to_string(p.type)});
    roads.push_back(json{{"points", std::move(pts)}});
  }
  j["roads"] = std::move(roads);
  return j.dump();
}

Scene scene_from_json_line(std::string_view line, std::size_t n) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(n, std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, {"schema", "scene_id", "template", "seed", "target_pair", "agents", "roads"}, n,
                 "scene");
  if (j["schema"] != kSceneSchema) throw ParseError(n, "unsupported schema, expected biff-scene/1");
  Scene s;
  try {
    s.scene_id = j["scene_id"].get<std::string>();
    s.template_name = j["template"].get<std::string>();
    s.seed = j["seed"].get<std::uint64_t>();
    const auto& tp = tuple(j["target_pair"], 2, n, "target_pair");
    s.target_pair = {tp[0].get<int>(), tp[1].get<int>()};
    if (!j["agents"].is_array()) throw ParseError(n, "agents must be an array");
    for (const auto& ja : j["agents"]) {
      reject_unknown(ja, {"id", "type", "footprint_radius", "history", "future"}, n, "agent");
      AgentTrack a;
      a.id = ja["id"].get<int>();
      a.type = parse_agent_type(ja["type"].get<std::string>());
      a.footprint_radius = num(ja["footprint_radius"], n);
      for (const auto& h : ja["history"]) {
        tuple(h, 6, n, "history state");
        a.history.push_back({num(h[0], n), num(h[1], n), num(h[2], n), num(h[3], n), num(h[4], n),
                             flag(h[5], n)});
      }
      for (const auto& f : ja["future"]) {
        tuple(f, 3, n, "future point");
        a.future.push_back({num(f[0], n), num(f[1], n), flag(f[2], n)});
      }
      s.agents.push_back(std::move(a));
    }
    if (!j["roads"].is_array()) throw ParseError(n, "roads must be an array");
    for (const auto& jr : j["roads"]) {
      reject_unknown(jr, {"points"}, n, "road");
      RoadPolyline r;
      for (const auto& p : jr["points"]) {
        tuple(p, 4, n, "road point");
        r.points.push_back({num(p[0], n), num(p[1], n), num(p[2], n),
                            parse_road_type(p[3].get<std::string>())});
      }
      s.roads.push_back(std::move(r));
    }
    validate(s);
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(n, e.what());
  } catch (const DataError& e) {
    throw ParseError(n, e.what());
  }
  return s;
}

void write_scenes(std::ostream& out, const std::vector<Scene>& scenes) {
  for (const auto& s : scenes) out << scene_to_json_line(s) << '\n';
}

std::vector<Scene> read_scenes(std::istream& in) {
  std::vector<Scene> scenes;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    scenes.push_back(scene_from_json_line(line, n));
  }
  return scenes;
}

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_scenes(out, scenes);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_scenes(in);
}

}  // namespace biff
