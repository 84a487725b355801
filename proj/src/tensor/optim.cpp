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

#include "biff/optim.hpp"

#include <cmath>

#include "biff/error.hpp"

namespace biff {

void adamw_step(std::span<Parameter* const> params, const AdamWOptions& o) {
  if (!(o.lr > 0.0)) throw Error("adamw_step: learning rate must be positive");
  for (Parameter* p : params) {
    auto value = p->value.mutable_data();
    const auto grad = p->value.grad();
    ++p->step_count;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(p->step_count));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(p->step_count));
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      auto& m = p->adam_m[i];
      auto& v = p->adam_v[i];
      m = o.beta1 * m + (1.0 - o.beta1) * g;
      v = o.beta2 * v + (1.0 - o.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      value[i] -= o.lr * (mhat / (std::sqrt(vhat) + o.eps) + o.weight_decay * value[i]);
    }
  }
}

double grad_norm(std::span<Parameter* const> params) {
  double acc = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->value.grad()) acc += g * g;
  }
  return std::sqrt(acc);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (Parameter* p : params) {
      if (p->value.grad().empty()) continue;
      for (auto& g : p->value.mutable_grad()) g *= f;
    }
  }
  return norm;
}

}  // namespace biff
