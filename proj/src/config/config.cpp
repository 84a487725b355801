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

#include "biff/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <variant>

#include "biff/error.hpp"

namespace biff {
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored as size_t");
using Field = std::variant<std::size_t*, double*, bool*>;

struct Entry {
  std::string_view key;
  Field field;
};

std::vector<Entry> fields(RunConfig& c) {
  auto& m = c.model;
  auto& a = c.anchor;
  auto& t = c.train;
  auto& e = c.eval;
  return {
      {"d_model", &m.d_model},
      {"n_heads", &m.n_heads},
      {"n_enc", &m.n_enc},
      {"k_neighbors", &m.k_neighbors},
      {"agent_mlp_dim", &m.agent_mlp_dim},
      {"road_mlp_dim", &m.road_mlp_dim},
      {"n_hfif", &m.n_hfif},
      {"n_lfbf", &m.n_lfbf},
      {"s_intentions", &m.s_intentions},
      {"k_modalities", &m.k_modalities},
      {"l_roads", &m.l_roads},
      {"t_future", &m.t_future},
      {"t_history", &m.t_history},
      {"completion_mlp_dim", &m.completion_mlp_dim},
      {"traj_mlp_dim", &m.traj_mlp_dim},
      {"behavior_mlp_dim", &m.behavior_mlp_dim},
      {"coord_scale", &m.coord_scale},
      {"hfif_fusion", &m.hfif_fusion},
      {"lfbf_fusion", &m.lfbf_fusion},
      {"use_anchor_scores", &m.use_anchor_scores},
      {"detach_queries", &m.detach_queries},
      {"anchor_grid_long", &a.grid_long},
      {"anchor_grid_lat", &a.grid_lat},
      {"anchor_cell", &a.cell},
      {"anchor_hidden", &a.hidden},
      {"anchor_epochs", &a.epochs},
      {"anchor_lr", &a.lr},
      {"anchor_batch", &a.batch},
      {"epochs", &t.epochs},
      {"lr", &t.lr},
      {"batch", &t.batch},
      {"weight_decay", &t.weight_decay},
      {"lr_halve_start", &t.lr_halve_start},
      {"lr_halve_period", &t.lr_halve_period},
      {"seed", &t.seed},
      {"grad_clip", &t.grad_clip},
      {"supervise_completion", &t.supervise_completion},
      {"loss_sum_steps", &t.loss_sum_steps},
      {"smooth_l1_beta", &t.smooth_l1_beta},
      {"eval_every", &t.eval_every},
      {"miss_threshold", &e.miss_threshold},
      {"metric_sum_agents", &e.metric_sum_agents},
      {"threads", &c.threads},
  };
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + std::string(key) + "': invalid value '" + std::string(v) + "'");
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"default", "ablation", "desk", "smoke", "toy"};
  return names;
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "default") return c;
  if (name == "ablation") {
    c.train.epochs = 15;
    c.train.lr_halve_start = 10;
    return c;
  }
  if (name == "desk" || name == "smoke") {
    auto& m = c.model;
    m.d_model = name == "desk" ? 64 : 32;
    m.n_heads = 4;
    m.n_enc = 2;
    m.agent_mlp_dim = 64;
    m.road_mlp_dim = 32;
    m.s_intentions = 32;
    m.completion_mlp_dim = 128;
    m.traj_mlp_dim = 128;
    m.behavior_mlp_dim = 32;
    c.anchor.grid_long = 60.0;
    c.anchor.grid_lat = 40.0;
    c.anchor.cell = 2.0;
    c.anchor.hidden = 64;
    c.anchor.epochs = 30;
    c.anchor.lr = 2e-3;
    c.anchor.batch = 16;
    c.train.epochs = name == "desk" ? 15 : 3;
    c.train.lr_halve_start = 10;
    c.train.lr_halve_period = 2;
    c.train.lr = 1e-3;
    c.train.batch = 8;
    return c;
  }
  if (name == "toy") {
    auto& m = c.model;
    m.d_model = 8;
    m.n_heads = 2;
    m.n_enc = 1;
    m.k_neighbors = 4;
    m.agent_mlp_dim = 8;
    m.road_mlp_dim = 8;
    m.n_hfif = 1;
    m.n_lfbf = 1;
    m.s_intentions = 4;
    m.k_modalities = 2;
    m.l_roads = 4;
    m.t_future = 5;
    m.completion_mlp_dim = 8;
    m.traj_mlp_dim = 8;
    m.behavior_mlp_dim = 8;
    c.anchor.hidden = 8;
    c.anchor.cell = 10.0;
    c.train.epochs = 2;
    c.train.batch = 2;
    c.train.lr = 1e-3;
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> config_keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const auto& e : fields(c)) out.emplace_back(e.key);
  return out;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (auto& e : fields(config)) {
    if (e.key != key) continue;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") *p = true;
            else if (value == "false" || value == "0") *p = false;
            else throw ConfigError("config key '" + std::string(key) + "': expected true/false");
          } else {
            *p = parse_number<T>(key, value);
          }
        },
        e.field);
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "preset") {
        config = preset(value);
        continue;
      }
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

RunConfig parse_config(std::string_view text, std::string_view base_preset) {
  RunConfig c = preset(base_preset);
  apply_config_text(c, text);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream os;
  for (const auto& e : fields(copy)) {
    os << e.key << " = ";
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, bool>) os << (*p ? "true" : "false");
          else if constexpr (std::is_same_v<T, double>) os << format_double(*p);
          else os << *p;
        },
        e.field);
    os << '\n';
  }
  return os.str();
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  const auto& m = c.model;
  require(m.d_model > 0 && m.n_heads > 0 && m.d_model % m.n_heads == 0,
          "d_model must be a positive multiple of n_heads");
  require(m.n_enc > 0 && m.n_hfif > 0 && m.n_lfbf > 0, "layer counts must be positive");
  require(m.k_neighbors > 0 && m.s_intentions > 0 && m.k_modalities > 0 && m.l_roads > 0,
          "k_neighbors, s_intentions, k_modalities, l_roads must be positive");
  require(m.t_future > 0 && m.t_history > 0, "horizons must be positive");
  require(m.agent_mlp_dim > 0 && m.road_mlp_dim > 0 && m.completion_mlp_dim > 0 &&
              m.traj_mlp_dim > 0 && m.behavior_mlp_dim > 0,
          "MLP widths must be positive");
  require(m.coord_scale > 0.0, "coord_scale must be positive");
  const auto& a = c.anchor;
  require(a.grid_long > 0.0 && a.grid_lat > 0.0 && a.cell > 0.0, "anchor grid must be positive");
  require(a.hidden > 0 && a.batch > 0 && a.lr > 0.0, "anchor training values must be positive");
  const auto& t = c.train;
  require(t.lr > 0.0 && t.batch > 0 && t.lr_halve_period > 0, "training values must be positive");
  require(t.weight_decay >= 0.0 && t.grad_clip >= 0.0 && t.smooth_l1_beta > 0.0,
          "weight_decay/grad_clip must be non-negative and smooth_l1_beta positive");
  require(c.eval.miss_threshold > 0.0, "miss_threshold must be positive");
  require(c.threads > 0, "threads must be positive");
}

}  // namespace biff
