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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "biff/scene.hpp"

namespace biff {

inline constexpr std::string_view kSceneSchema = "biff-scene/1";

// One scene per line, UTF-8 JSON, every line tagged with kSceneSchema.
std::string scene_to_json_line(const Scene& scene);
// `line_number` is reported in ParseError messages.
Scene scene_from_json_line(std::string_view line, std::size_t line_number = 1);

void write_scenes(std::ostream& out, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes(std::istream& in);

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes(const std::filesystem::path& path);

}  // namespace biff
