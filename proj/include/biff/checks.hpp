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
#include <ostream>
#include <string>
#include <vector>

#include "biff/config.hpp"

namespace biff {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0;  // worst error or mismatch count, depending on the check
  std::string detail;
};

struct CheckOptions {
  std::size_t scenes = 20;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
};

// Finite-difference checks of every differentiable op and of the full toy graph.
std::vector<CheckResult> run_gradcheck_suite(const CheckOptions& options);
// Rigid-transform sweep over rotations k*pi/6 plus random translations.
// Rows of `sweep_csv` (if given): scene, angle, max deviation.
std::vector<CheckResult> run_invariance_suite(const CheckOptions& options,
                                              std::ostream* sweep_csv = nullptr);
// Brute-force oracles for preprocessing, selection and metric operations.
std::vector<CheckResult> run_oracle_suite(const CheckOptions& options);

void print_check_table(std::ostream& os, const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace biff
