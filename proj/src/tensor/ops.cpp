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

#include "biff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biff/error.hpp"

namespace biff::ops {
namespace {

using detail::Node;

double* grad_of(Node& self, std::size_t i) {
  auto& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

const double* data_of(const Node& self, std::size_t i) { return self.parents[i]->data.data(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

Shape with_last(const Shape& s, std::size_t last) {
  Shape out = s;
  if (out.empty()) out.push_back(last);
  else out.back() = last;
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.ndim() != 2 || a.ndim() == 0 || a.cols() != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.dim(1);
  std::vector<double> out(n * m, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
  return detail::make_result(with_last(a.shape(), m), std::move(out), {&a, &b},
                             [n, k, m](Node& self) {
                               const double* G = self.grad.data();
                               const double* A = data_of(self, 0);
                               const double* B = data_of(self, 1);
                               if (double* dA = grad_of(self, 0)) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* g = G + i * m;
                                   for (std::size_t p = 0; p < k; ++p) {
                                     const double* brow = B + p * m;
                                     double acc = 0.0;
                                     for (std::size_t j = 0; j < m; ++j) acc += g[j] * brow[j];
                                     dA[i * k + p] += acc;
                                   }
                                 }
                               }
                               if (double* dB = grad_of(self, 1)) {
                                 for (std::size_t i = 0; i < n; ++i) {
                                   const double* g = G + i * m;
                                   for (std::size_t p = 0; p < k; ++p) {
                                     const double av = A[i * k + p];
                                     if (av == 0.0) continue;
                                     double* drow = dB + p * m;
                                     for (std::size_t j = 0; j < m; ++j) drow[j] += av * g[j];
                                   }
                                 }
                               }
                             });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (b.numel() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_str(b.shape()) + " does not match input " +
                         shape_str(x.shape()));
  }
  const std::size_t n = x.rows(), m = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bd[j];
  return detail::make_result(x.shape(), std::move(out), {&x, &b}, [n, m](Node& self) {
    const double* G = self.grad.data();
    if (double* dx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n * m; ++i) dx[i] += G[i];
    }
    if (double* db = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) db[j] += G[i * m + j];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (w.ndim() != 2 || x.ndim() == 0 || x.cols() != w.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(w.shape()));
  }
  auto y = matmul(x, w);
  if (b) {
    if (b->numel() != w.dim(1)) {
      throw DimensionError("linear: bias " + shape_str(b->shape()) + " incompatible with weight " +
                           shape_str(w.shape()));
    }
    y = add_bias(y, *b);
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const auto n = self.grad.size();
    for (std::size_t s = 0; s < 2; ++s) {
      if (double* d = grad_of(self, s))
        for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const auto n = self.grad.size();
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[i];
    if (double* d = grad_of(self, 1))
      for (std::size_t i = 0; i < n; ++i) d[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const auto n = self.grad.size();
    const double* A = data_of(self, 0);
    const double* B = data_of(self, 1);
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[i] * B[i];
    if (double* d = grad_of(self, 1))
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[i] * A[i];
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return detail::make_result(x.shape(), std::move(out), {&x}, [factor](Node& self) {
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += factor * self.grad[i];
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return detail::make_result(x.shape(), std::move(out), {&x}, [](Node& self) {
    if (double* d = grad_of(self, 0)) {
      const double* X = data_of(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (X[i] > 0.0) d[i] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return detail::make_result({}, {acc}, {&x}, [](Node& self) {
    if (double* d = grad_of(self, 0)) {
      const auto n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  const auto n = x.numel();
  if (n == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Tensor softmax(const Tensor& x, int axis) {
  const auto& s = x.shape();
  if (s.empty()) throw DimensionError("softmax: scalar input");
  const int nd = static_cast<int>(s.size());
  const int ax = axis < 0 ? axis + nd : axis;
  if (ax < 0 || ax >= nd) throw DimensionError("softmax: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= s[i];
  for (int i = ax + 1; i < nd; ++i) inner *= s[i];
  const std::size_t n = s[ax];
  if (n == 0) throw DimensionError("softmax: empty axis");
  for (double v : x.data()) {
    if (std::isnan(v)) throw NumericError("softmax: NaN input");
  }
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, xd[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(xd[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  return detail::make_result(s, std::move(out), {&x}, [outer, inner, n](Node& self) {
    double* d = grad_of(self, 0);
    if (!d) return;
    const double* Y = self.data.data();
    const double* G = self.grad.data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += Y[base + j * inner] * G[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const auto idx = base + j * inner;
          d[idx] += Y[idx] * (G[idx] - dot);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t n = x.rows(), m = x.cols();
  if (m == 0) throw DimensionError("layer_norm: empty normalized axis");
  if (gamma.numel() != m || beta.numel() != m) {
    throw DimensionError("layer_norm: affine " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " does not match input " + shape_str(x.shape()));
  }
  const auto xd = x.data(), g = gamma.data(), b = beta.data();
  std::vector<double> out(n * m);
  std::vector<double> xhat(n * m);
  std::vector<double> rstd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xd.data() + i * m;
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += row[j];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(m);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      xhat[i * m + j] = (row[j] - mu) * rstd[i];
      out[i * m + j] = xhat[i * m + j] * g[j] + b[j];
    }
  }
  return detail::make_result(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [n, m, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
        const double* G = self.grad.data();
        const double* gam = data_of(self, 1);
        double* dx = grad_of(self, 0);
        double* dg = grad_of(self, 1);
        double* db = grad_of(self, 2);
        std::vector<double> dxhat(m);
        for (std::size_t i = 0; i < n; ++i) {
          const double* gi = G + i * m;
          const double* xh = xhat.data() + i * m;
          if (dg)
            for (std::size_t j = 0; j < m; ++j) dg[j] += gi[j] * xh[j];
          if (db)
            for (std::size_t j = 0; j < m; ++j) db[j] += gi[j];
          if (!dx) continue;
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            dxhat[j] = gi[j] * gam[j];
            s1 += dxhat[j];
            s2 += dxhat[j] * xh[j];
          }
          const double md = static_cast<double>(m);
          for (std::size_t j = 0; j < m; ++j) {
            dx[i * m + j] += rstd[i] / md * (md * dxhat[j] - s1 - xh[j] * s2);
          }
        }
      });
}

MaxPool segment_max(const Tensor& x, std::span<const std::size_t> offsets) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.rows()) {
    throw DimensionError("segment_max: offsets do not cover " + shape_str(x.shape()));
  }
  const std::size_t segs = offsets.size() - 1, m = x.cols();
  const auto xd = x.data();
  std::vector<double> out(segs * m);
  std::vector<std::size_t> arg(segs * m);
  for (std::size_t s = 0; s < segs; ++s) {
    const auto b = offsets[s], e = offsets[s + 1];
    if (e <= b) throw EmptyPolylineError("max pool over an empty polyline");
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t best = b;
      double bv = xd[b * m + j];
      for (std::size_t r = b + 1; r < e; ++r) {
        if (xd[r * m + j] > bv) {
          bv = xd[r * m + j];
          best = r;
        }
      }
      out[s * m + j] = bv;
      arg[s * m + j] = best;
    }
  }
  MaxPool result;
  result.argmax = arg;
  result.values = detail::make_result({segs, m}, std::move(out), {&x},
                                      [m, arg = std::move(arg)](Node& self) {
                                        double* d = grad_of(self, 0);
                                        if (!d) return;
                                        for (std::size_t i = 0; i < arg.size(); ++i) {
                                          d[arg[i] * m + (i % m)] += self.grad[i];
                                        }
                                      });
  return result;
}

MaxPool max_pool_rows(const Tensor& x) {
  if (x.ndim() != 2) throw DimensionError("max_pool_rows: expected [n, d], got " + shape_str(x.shape()));
  if (x.rows() == 0) throw EmptyPolylineError("max pool over an empty polyline");
  const std::size_t offs[2] = {0, x.rows()};
  auto r = segment_max(x, offs);
  r.values = reshape(r.values, {x.cols()});
  return r;
}

Tensor smooth_l1(const Tensor& pred, const Tensor& target, double beta) {
  require_same_shape(pred, target, "smooth_l1");
  if (!(beta > 0.0)) throw Error("smooth_l1: beta must be positive");
  const auto n = pred.numel();
  if (n == 0) throw DimensionError("smooth_l1: empty input");
  const auto p = pred.data(), t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = p[i] - t[i];
    const double a = std::abs(e);
    acc += a < beta ? 0.5 * e * e / beta : a - 0.5 * beta;
  }
  acc /= static_cast<double>(n);
  return detail::make_result({}, {acc}, {&pred, &target}, [n, beta](Node& self) {
    const double* P = data_of(self, 0);
    const double* T = data_of(self, 1);
    const double g = self.grad[0] / static_cast<double>(n);
    double* dp = grad_of(self, 0);
    double* dt = grad_of(self, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = P[i] - T[i];
      const double de = std::abs(e) < beta ? e / beta : (e > 0.0 ? 1.0 : -1.0);
      if (dp) dp[i] += g * de;
      if (dt) dt[i] -= g * de;
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_str(logits.shape()));
  }
  if (n == 0) throw DimensionError("cross_entropy: empty batch");
  const auto x = logits.data();
  require_finite(x, "cross_entropy");
  std::vector<double> prob(n * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= c) throw DimensionError("cross_entropy: target out of range");
    const double* row = x.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double lz = std::log(z) + mx;
    for (std::size_t j = 0; j < c; ++j) prob[i * c + j] = std::exp(row[j] - lz);
    loss += lz - row[targets[i]];
  }
  loss /= static_cast<double>(n);
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return detail::make_result({}, {loss}, {&logits},
                             [n, c, prob = std::move(prob), tgt = std::move(tgt)](Node& self) {
                               double* d = grad_of(self, 0);
                               if (!d) return;
                               const double g = self.grad[0] / static_cast<double>(n);
                               for (std::size_t i = 0; i < n; ++i) {
                                 for (std::size_t j = 0; j < c; ++j) d[i * c + j] += g * prob[i * c + j];
                                 d[i * c + tgt[i]] -= g;
                               }
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return detail::make_result(std::move(shape), std::move(out), {&x}, [](Node& self) {
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

Tensor transpose(const Tensor& x) {
  if (x.ndim() != 2) throw DimensionError("transpose: expected 2-D, got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), m = x.dim(1);
  const auto xd = x.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = xd[i * m + j];
  return detail::make_result({m, n}, std::move(out), {&x}, [n, m](Node& self) {
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) d[i * m + j] += self.grad[j * n + i];
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  const std::size_t n = x.rows(), m = x.cols();
  const auto xd = x.data();
  std::vector<double> out(index.size() * m);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= n) throw DimensionError("gather_rows: index out of range for " + shape_str(x.shape()));
    std::copy_n(xd.data() + index[r] * m, m, out.data() + r * m);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return detail::make_result({index.size(), m}, std::move(out), {&x},
                             [m, idx = std::move(idx)](Node& self) {
                               double* d = grad_of(self, 0);
                               if (!d) return;
                               for (std::size_t r = 0; r < idx.size(); ++r) {
                                 const double* g = self.grad.data() + r * m;
                                 double* dst = d + idx[r] * m;
                                 for (std::size_t j = 0; j < m; ++j) dst[j] += g[j];
                               }
                             });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.rows()) {
    throw DimensionError("slice_rows: range out of bounds for " + shape_str(x.shape()));
  }
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather_rows(x, idx);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t m = parts.front().cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != m) throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
    n += p.rows();
  }
  std::vector<double> out;
  out.reserve(n * m);
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.numel());
  }
  return detail::make_result({n, m}, std::move(out), parts, [sizes = std::move(sizes)](Node& self) {
    std::size_t off = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      if (double* d = grad_of(self, s))
        for (std::size_t i = 0; i < sizes[s]; ++i) d[i] += self.grad[off + i];
      off += sizes[s];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
    widths.push_back(p.cols());
    m += p.cols();
  }
  std::vector<double> out(n * m);
  std::size_t col = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto pd = parts[s].data();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(pd.data() + i * widths[s], widths[s], out.data() + i * m + col);
    col += widths[s];
  }
  return detail::make_result({n, m}, std::move(out), parts,
                             [n, m, widths = std::move(widths)](Node& self) {
                               std::size_t col = 0;
                               for (std::size_t s = 0; s < widths.size(); ++s) {
                                 if (double* d = grad_of(self, s)) {
                                   for (std::size_t i = 0; i < n; ++i)
                                     for (std::size_t j = 0; j < widths[s]; ++j)
                                       d[i * widths[s] + j] += self.grad[i * m + col + j];
                                 }
                                 col += widths[s];
                               }
                             });
}

Tensor repeat_rows(const Tensor& x, std::size_t n) {
  if (x.rows() != 1) throw DimensionError("repeat_rows: expected a single row, got " + shape_str(x.shape()));
  const std::size_t m = x.cols();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(x.data().data(), m, out.data() + i * m);
  return detail::make_result({n, m}, std::move(out), {&x}, [n, m](Node& self) {
    if (double* d = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) d[j] += self.grad[i * m + j];
  });
}

Tensor interleave_heads(const Tensor& a, const Tensor& b, std::size_t heads) {
  if (a.shape() != b.shape() || a.ndim() != 2 || heads == 0 || a.cols() % heads != 0) {
    throw DimensionError("interleave_heads: incompatible " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " for " + std::to_string(heads) + " heads");
  }
  const std::size_t n = a.rows(), m = a.cols(), w = m / heads;
  const auto ad = a.data(), bd = b.data();
  std::vector<double> out(n * 2 * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h < heads; ++h) {
      std::copy_n(ad.data() + i * m + h * w, w, out.data() + i * 2 * m + 2 * h * w);
      std::copy_n(bd.data() + i * m + h * w, w, out.data() + i * 2 * m + 2 * h * w + w);
    }
  }
  return detail::make_result({n, 2 * m}, std::move(out), {&a, &b}, [n, m, w, heads](Node& self) {
    for (std::size_t s = 0; s < 2; ++s) {
      double* d = grad_of(self, s);
      if (!d) continue;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t j = 0; j < w; ++j)
            d[i * m + h * w + j] += self.grad[i * 2 * m + 2 * h * w + s * w + j];
    }
  });
}

Tensor neighbor_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          std::span<const std::size_t> offsets, std::size_t heads,
                          AttentionWeights* weights_out) {
  const std::size_t n = q.rows(), dq = q.cols(), pairs = k.rows(), dv = v.cols();
  if (k.cols() != dq || v.rows() != pairs || heads == 0 || dq % heads || dv % heads) {
    throw DimensionError("neighbor_attention: q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()) + " with " +
                         std::to_string(heads) + " heads");
  }
  if (offsets.size() != n + 1 || offsets.front() != 0 || offsets.back() != pairs) {
    throw DimensionError("neighbor_attention: offsets do not match queries/pairs");
  }
  const std::size_t wq = dq / heads, wv = dv / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(wq));
  const auto Q = q.data(), K = k.data(), V = v.data();
  std::vector<double> alpha(pairs * heads);
  std::vector<double> out(n * dv, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = offsets[i], e = offsets[i + 1];
    if (e <= b) throw Error("neighbor_attention: query without neighbors");
    for (std::size_t h = 0; h < heads; ++h) {
      const double* qi = Q.data() + i * dq + h * wq;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t p = b; p < e; ++p) {
        const double* kp = K.data() + p * dq + h * wq;
        double s = 0.0;
        for (std::size_t j = 0; j < wq; ++j) s += qi[j] * kp[j];
        s *= sc;
        alpha[p * heads + h] = s;
        mx = std::max(mx, s);
      }
      if (std::isnan(mx)) throw NumericError("neighbor_attention: NaN score");
      double z = 0.0;
      for (std::size_t p = b; p < e; ++p) {
        auto& a = alpha[p * heads + h];
        a = std::exp(a - mx);
        z += a;
      }
      double* oi = out.data() + i * dv + h * wv;
      for (std::size_t p = b; p < e; ++p) {
        auto& a = alpha[p * heads + h];
        a /= z;
        const double* vp = V.data() + p * dv + h * wv;
        for (std::size_t j = 0; j < wv; ++j) oi[j] += a * vp[j];
      }
    }
  }
  if (weights_out) {
    weights_out->offsets.assign(offsets.begin(), offsets.end());
    weights_out->weights = alpha;
    weights_out->heads = heads;
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return detail::make_result(
      {n, dv}, std::move(out), {&q, &k, &v},
      [n, dq, dv, wq, wv, heads, sc, alpha = std::move(alpha), offs = std::move(offs)](Node& self) {
        const double* Q = data_of(self, 0);
        const double* K = data_of(self, 1);
        const double* V = data_of(self, 2);
        double* dQ = grad_of(self, 0);
        double* dK = grad_of(self, 1);
        double* dV = grad_of(self, 2);
        const double* G = self.grad.data();
        std::vector<double> ds;
        for (std::size_t i = 0; i < n; ++i) {
          const auto b = offs[i], e = offs[i + 1];
          ds.assign(e - b, 0.0);
          for (std::size_t h = 0; h < heads; ++h) {
            const double* gi = G + i * dv + h * wv;
            double dot = 0.0;
            for (std::size_t p = b; p < e; ++p) {
              const double a = alpha[p * heads + h];
              const double* vp = V + p * dv + h * wv;
              double da = 0.0;
              for (std::size_t j = 0; j < wv; ++j) da += gi[j] * vp[j];
              ds[p - b] = da;
              dot += a * da;
              if (dV) {
                double* dvp = dV + p * dv + h * wv;
                for (std::size_t j = 0; j < wv; ++j) dvp[j] += a * gi[j];
              }
            }
            const double* qi = Q + i * dq + h * wq;
            for (std::size_t p = b; p < e; ++p) {
              const double g = alpha[p * heads + h] * (ds[p - b] - dot) * sc;
              if (g == 0.0) continue;
              const double* kp = K + p * dq + h * wq;
              if (dQ) {
                double* dqi = dQ + i * dq + h * wq;
                for (std::size_t j = 0; j < wq; ++j) dqi[j] += g * kp[j];
              }
              if (dK) {
                double* dkp = dK + p * dq + h * wq;
                for (std::size_t j = 0; j < wq; ++j) dkp[j] += g * qi[j];
              }
            }
          }
        }
      });
}

}  // namespace biff::ops
