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

// Shared fixtures and brute-force oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "biff/anchors.hpp"
#include "biff/config.hpp"
#include "biff/model.hpp"
#include "biff/rng.hpp"
#include "biff/synthetic.hpp"
#include "biff/tensor.hpp"

namespace biff::test {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<double> values(const Tensor& t) {
  const auto d = t.data();
  return {d.begin(), d.end()};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  return max_abs_diff(values(a), values(b));
}

// Independent central-difference derivative of f with respect to entry i of x.
template <typename F>
double numeric_derivative(F f, Tensor& x, std::size_t i, double h = 1e-6) {
  auto d = x.mutable_data();
  const double keep = d[i];
  d[i] = keep + h;
  const double up = f();
  d[i] = keep - h;
  const double down = f();
  d[i] = keep;
  return (up - down) / (2.0 * h);
}

struct ToyWorld {
  RunConfig config;
  Scene scene;
  AnchorModel anchors;
  PreparedScene prepared;
};

inline ToyWorld toy_world(std::uint64_t seed = 3, const std::string& preset_name = "toy",
                          const std::string& tmpl = "crossing") {
  ToyWorld w{preset(preset_name), {}, {}, {}};
  GeneratorConfig gen;
  gen.template_name = tmpl;
  w.scene = generate_synthetic(gen, seed);
  w.anchors = AnchorModel(w.config.anchor, w.config.model.coord_scale, seed);
  w.prepared = prepare_scene(w.scene, w.anchors, w.config.model);
  return w;
}

}  // namespace biff::test
