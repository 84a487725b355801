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

#include "biff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biff/rng.hpp"

namespace biff {

GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn,
                                const std::vector<std::pair<std::string, Tensor>>& inputs,
                                const GradCheckOptions& options) {
  for (const auto& [name, t] : inputs) {
    Tensor copy = t;
    copy.zero_grad();
  }
  {
    Tensor loss = loss_fn();
    backward(loss);
  }
  GradCheckReport report;
  Rng rng(options.seed);
  for (const auto& [name, t] : inputs) {
    Tensor x = t;
    const auto n = x.numel();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries && n > options.max_entries) {
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(options.max_entries);
      std::sort(idx.begin(), idx.end());
    }
    const auto analytic = x.grad();
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    for (auto i : idx) {
      auto data = x.mutable_data();
      const double saved = data[i];
      double plus, minus;
      {
        NoGradGuard guard;
        data[i] = saved + options.step;
        plus = loss_fn().item();
        data[i] = saved - options.step;
        minus = loss_fn().item();
        data[i] = saved;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      f2 += numeric * numeric;
    }
    GradCheckEntry e;
    e.name = name;
    e.checked = idx.size();
    e.relative_error = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(f2), options.zero_floor});
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
    if (!(e.relative_error < options.tolerance)) report.passed = false;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace biff
