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

#include "biff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "biff/error.hpp"

namespace biff {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[4] = {'B', 'I', 'F', 'F'};
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 40;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint truncated");
  return v;
}

std::uint64_t get_length(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > kMaxLength) throw DataError("checkpoint corrupt: implausible length");
  return n;
}

std::string get_string(std::istream& is) {
  std::string s(get_length(is), '\0');
  if (!s.empty() && !is.read(s.data(), static_cast<std::streamsize>(s.size())))
    throw DataError("checkpoint truncated");
  return s;
}

void put_records(std::ostream& os, const std::vector<TensorRecord>& recs) {
  put<std::uint64_t>(os, recs.size());
  for (const auto& r : recs) {
    put_string(os, r.name);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(os, d);
    put<std::uint64_t>(os, r.data.size() * sizeof(double));
    os.write(reinterpret_cast<const char*>(r.data.data()),
             static_cast<std::streamsize>(r.data.size() * sizeof(double)));
  }
}

std::vector<TensorRecord> get_records(std::istream& is) {
  const auto n = get_length(is);
  std::vector<TensorRecord> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    TensorRecord r;
    r.name = get_string(is);
    const auto ndim = get<std::uint32_t>(is);
    if (ndim > 8) throw DataError("checkpoint corrupt: record '" + r.name + "' has " + std::to_string(ndim) + " dims");
    for (std::uint32_t k = 0; k < ndim; ++k) r.shape.push_back(get_length(is));
    const auto bytes = get_length(is);
    if (bytes != shape_numel(r.shape) * sizeof(double))
      throw DataError("checkpoint corrupt: blob length of '" + r.name + "' does not match shape " +
                      shape_str(r.shape));
    r.data.resize(bytes / sizeof(double));
    if (bytes && !is.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(bytes)))
      throw DataError("checkpoint truncated");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<TensorRecord> export_params(const ParamStore& store) {
  std::vector<TensorRecord> out;
  for (const Parameter* p : store.all()) {
    const auto d = p->value.data();
    out.push_back({p->name, p->shape(), {d.begin(), d.end()}});
  }
  return out;
}

void import_params(ParamStore& store, const std::vector<TensorRecord>& records) {
  auto params = store.all();
  if (params.size() != records.size())
    throw SchemaError("checkpoint holds " + std::to_string(records.size()) +
                      " parameters, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& r = records[i];
    if (r.name != params[i]->name || r.shape != params[i]->shape())
      throw SchemaError("checkpoint parameter '" + r.name + "' " + shape_str(r.shape) +
                        " does not match '" + params[i]->name + "' " + shape_str(params[i]->shape()));
    auto d = params[i]->value.mutable_data();
    std::copy(r.data.begin(), r.data.end(), d.begin());
  }
}

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, c.schema);
  put_string(os, serialize_config(c.config));
  put_records(os, c.model);
  put_records(os, c.anchor);
  put_string(os, c.rng_state);
  if (!os) throw DataError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  Checkpoint c;
  c.schema = get<std::uint32_t>(is);
  if (c.schema != kCheckpointSchema)
    throw SchemaError("checkpoint schema " + std::to_string(c.schema) + ", expected " +
                      std::to_string(kCheckpointSchema));
  c.config = parse_config(get_string(is));
  c.model = get_records(is);
  c.anchor = get_records(is);
  c.rng_state = get_string(is);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  write_checkpoint(os, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(is);
}

Checkpoint make_checkpoint(const RunConfig& config, const BiffModel* model,
                           const AnchorModel* anchors, const std::string& rng_state) {
  Checkpoint c;
  c.config = config;
  if (model) c.model = export_params(model->params());
  if (anchors) c.anchor = export_params(anchors->params());
  c.rng_state = rng_state;
  return c;
}

std::unique_ptr<BiffModel> model_from_checkpoint(const Checkpoint& c) {
  if (c.model.empty()) throw SchemaError("checkpoint has no model parameters");
  auto m = std::make_unique<BiffModel>(c.config.model, 0);
  import_params(m->params(), c.model);
  return m;
}

AnchorModel anchors_from_checkpoint(const Checkpoint& c) {
  if (c.anchor.empty()) throw SchemaError("checkpoint has no anchor head");
  AnchorModel a(c.config.anchor, c.config.model.coord_scale, 0);
  import_params(a.params(), c.anchor);
  return a;
}

}  // namespace biff
