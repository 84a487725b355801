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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "biff/anchors.hpp"
#include "biff/config.hpp"
#include "biff/model.hpp"

namespace biff {

inline constexpr std::uint32_t kCheckpointSchema = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<double> data;
  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

// Little-endian file: "BIFF", u32 schema, config text, then the model and
// anchor sections as length-prefixed name/shape/blob records, then the RNG state.
struct Checkpoint {
  std::uint32_t schema = kCheckpointSchema;
  RunConfig config;
  std::vector<TensorRecord> model;
  std::vector<TensorRecord> anchor;
  std::string rng_state;
};

std::vector<TensorRecord> export_params(const ParamStore& store);
// Names and shapes must match the store exactly.
void import_params(ParamStore& store, const std::vector<TensorRecord>& records);

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const RunConfig& config, const BiffModel* model,
                           const AnchorModel* anchors, const std::string& rng_state = {});
// The seed does not matter: every parameter is overwritten from the file.
std::unique_ptr<BiffModel> model_from_checkpoint(const Checkpoint& ckpt);
AnchorModel anchors_from_checkpoint(const Checkpoint& ckpt);

}  // namespace biff
