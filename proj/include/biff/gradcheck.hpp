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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "biff/tensor.hpp"

namespace biff {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor. Central differences carry roundoff of roughly
  // eps * |loss| / step per entry, so gradients below this size are treated as
  // zero and compared in absolute terms.
  double zero_floor = 1e-8;
  // 0 checks every entry; otherwise a seeded sample of this many per input.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = true;
};

// Compares backward() against central finite differences of `loss_fn` with
// respect to each named leaf tensor. Error per input is
// ||analytic - numeric|| / max(||analytic||, ||numeric||, zero_floor) over the checked
// entries.
GradCheckReport check_gradients(const std::function<Tensor()>& loss_fn,
                                const std::vector<std::pair<std::string, Tensor>>& inputs,
                                const GradCheckOptions& options = {});

}  // namespace biff
