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

#include "biff/nn.hpp"

#include <cmath>

#include "biff/error.hpp"

namespace biff {

Parameter* ParamStore::create(const std::string& name, Tensor init) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  return params_.back().get();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::total_numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->value.zero_grad();
}

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(data));
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool bias)
    : in_(in), out_(out) {
  w_ = store.create(name + ".weight", uniform_init({in, out}, in, rng));
  if (bias) b_ = store.create(name + ".bias", uniform_init({out}, in, rng));
}

Tensor Linear::operator()(const Tensor& x) const {
  return ops::linear(x, w_->value, b_ ? &b_->value : nullptr);
}

Mlp::Mlp(ParamStore& store, const std::string& name, const std::vector<std::size_t>& dims, Rng& rng,
         bool relu_last)
    : relu_last_(relu_last) {
  if (dims.size() < 2) throw Error("Mlp " + name + " needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), dims[i], dims[i + 1], rng);
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size() || relu_last_) h = ops::relu(h);
  }
  return h;
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t dim, double eps)
    : eps_(eps) {
  gamma_ = store.create(name + ".gamma", Tensor::full({dim}, 1.0));
  beta_ = store.create(name + ".beta", Tensor::zeros({dim}));
}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return ops::layer_norm(x, gamma_->value, beta_->value, eps_);
}

FeedForward::FeedForward(ParamStore& store, const std::string& name, std::size_t dim,
                         std::size_t hidden, Rng& rng)
    : up_(store, name + ".up", dim, hidden, rng),
      down_(store, name + ".down", hidden, dim, rng),
      norm_(store, name + ".norm", dim) {}

Tensor FeedForward::operator()(const Tensor& x) const {
  return norm_(ops::add(x, down_(ops::relu(up_(x)))));
}

}  // namespace biff
