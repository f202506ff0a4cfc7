// Copyright 2026 The Contrast Authors.
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

#include "contrast/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void record(Tensor& out, std::vector<Tensor> inputs, BackwardFn fn) {
  active_tape()->record(out, std::move(inputs), std::move(fn));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

ConstMap as_matrix(std::span<const double> v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::span<double> v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Softmax of one row in place; returns false when every entry is -inf.
bool softmax_row(std::span<const double> in, std::span<double> out) {
  double mx = kNegInf;
  for (double v : in) mx = std::max(mx, v);
  if (mx == kNegInf) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double e = in[i] == kNegInf ? 0.0 : std::exp(in[i] - mx);
    out[i] = e;
    total += e;
  }
  for (double& v : out) v /= total;
  return true;
}

template <typename Fn>
Tensor unary(const Tensor& a, Fn value_fn) {
  Tensor out(a.shape());
  auto src = a.values();
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = value_fn(src[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor out({m, n});
  as_matrix(out.mutable_values(), m, n).noalias() =
      as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  if (should_record({&a, &b})) {
    record(out, {a, b}, [a, b, m, k, n](std::span<const double> g, Tape& tape) {
      auto gm = as_matrix(g, m, n);
      if (a.requires_grad()) {
        std::vector<double> ga(m * k);
        as_matrix(std::span<double>(ga), m, k).noalias() = gm * as_matrix(b.values(), k, n).transpose();
        tape.accumulate(a, ga);
      }
      if (b.requires_grad()) {
        std::vector<double> gb(k * n);
        as_matrix(std::span<double>(gb), k, n).noalias() = as_matrix(a.values(), m, k).transpose() * gm;
        tape.accumulate(b, gb);
      }
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw ShapeError("matmul_nt: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()) + "^T");
  }
  Tensor out({m, n});
  as_matrix(out.mutable_values(), m, n).noalias() =
      as_matrix(a.values(), m, k) * as_matrix(b.values(), n, k).transpose();
  if (should_record({&a, &b})) {
    record(out, {a, b}, [a, b, m, k, n](std::span<const double> g, Tape& tape) {
      auto gm = as_matrix(g, m, n);
      if (a.requires_grad()) {
        std::vector<double> ga(m * k);
        as_matrix(std::span<double>(ga), m, k).noalias() = gm * as_matrix(b.values(), n, k);
        tape.accumulate(a, ga);
      }
      if (b.requires_grad()) {
        std::vector<double> gb(n * k);
        as_matrix(std::span<double>(gb), n, k).noalias() = gm.transpose() * as_matrix(a.values(), m, k);
        tape.accumulate(b, gb);
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] + b[i];
  if (should_record({&a, &b})) {
    record(out, {a, b}, [a, b](std::span<const double> g, Tape& tape) {
      tape.accumulate(a, g);
      tape.accumulate(b, g);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] - b[i];
  if (should_record({&a, &b})) {
    record(out, {a, b}, [a, b](std::span<const double> g, Tape& tape) {
      tape.accumulate(a, g);
      if (b.requires_grad()) {
        std::vector<double> gb(g.begin(), g.end());
        for (double& v : gb) v = -v;
        tape.accumulate(b, gb);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] * b[i];
  if (should_record({&a, &b})) {
    record(out, {a, b}, [a, b](std::span<const double> g, Tape& tape) {
      std::vector<double> buf(g.size());
      if (a.requires_grad()) {
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * b[i];
        tape.accumulate(a, buf);
      }
      if (b.requires_grad()) {
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = g[i] * a[i];
        tape.accumulate(b, buf);
      }
    });
  }
  return out;
}

Tensor affine(const Tensor& a, double factor, double offset) {
  Tensor out = unary(a, [&](double v) { return factor * v + offset; });
  if (should_record({&a})) {
    record(out, {a}, [a, factor](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.begin(), g.end());
      for (double& v : ga) v *= factor;
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) { return affine(a, factor, 0.0); }

Tensor neg(const Tensor& a) { return affine(a, -1.0, 0.0); }

Tensor add_row(const Tensor& a, const Tensor& bias) {
  const std::size_t n = a.cols();
  if (bias.size() != n) {
    throw ShapeError("add_row: bias " + shape_string(bias.shape()) + " does not match rows of " +
                     shape_string(a.shape()));
  }
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] + bias[i % n];
  if (should_record({&a, &bias})) {
    record(out, {a, bias}, [a, bias, n](std::span<const double> g, Tape& tape) {
      tape.accumulate(a, g);
      if (bias.requires_grad()) {
        std::vector<double> gb(n, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
        tape.accumulate(bias, gb);
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = unary(a, [](double v) { return v > 0.0 ? v : 0.0; });
  if (should_record({&a})) {
    record(out, {a}, [a](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = a[i] > 0.0 ? g[i] : 0.0;
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor reciprocal_clamped(const Tensor& a, double floor) {
  Tensor out = unary(a, [floor](double v) { return 1.0 / std::max(v, floor); });
  if (should_record({&a})) {
    record(out, {a}, [a, floor](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] = a[i] > floor ? -g[i] / (a[i] * a[i]) : 0.0;
      }
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor masked_fill(const Tensor& a, const Mask& mask, double fill) {
  if (mask.size() != a.size()) {
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) +
                     " entries for tensor " + shape_string(a.shape()));
  }
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = mask[i] ? fill : a[i];
  if (should_record({&a})) {
    record(out, {a}, [a, mask](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = mask[i] ? 0.0 : g[i];
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor softmax(const Tensor& a, const Mask* mask) {
  if (a.size() == 0) throw ShapeError("softmax of an empty tensor");
  if (mask != nullptr) return softmax(masked_fill(a, *mask, kNegInf));
  const std::size_t n = a.cols(), rows = a.rows();
  Tensor out(a.shape());
  auto src = a.values();
  auto dst = out.mutable_values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!softmax_row(src.subspan(r * n, n), dst.subspan(r * n, n))) {
      throw DegenerateError("softmax: every position of row " + std::to_string(r) + " is masked");
    }
  }
  if (should_record({&a})) {
    Tensor y = out.detach();
    record(out, {a}, [a, y, n, rows](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t i = r * n; i < (r + 1) * n; ++i) dot += g[i] * y[i];
        for (std::size_t i = r * n; i < (r + 1) * n; ++i) ga[i] = y[i] * (g[i] - dot);
      }
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor softmin(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("softmin of an empty tensor");
  return softmax(neg(a));
}

Tensor log_softmax(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("log_softmax of an empty tensor");
  const std::size_t n = a.cols(), rows = a.rows();
  Tensor out(a.shape());
  auto src = a.values();
  auto dst = out.mutable_values();
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = kNegInf;
    for (std::size_t i = r * n; i < (r + 1) * n; ++i) mx = std::max(mx, src[i]);
    if (mx == kNegInf) {
      throw DegenerateError("log_softmax: every position of row " + std::to_string(r) +
                            " is masked");
    }
    double total = 0.0;
    for (std::size_t i = r * n; i < (r + 1) * n; ++i) total += std::exp(src[i] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t i = r * n; i < (r + 1) * n; ++i) dst[i] = src[i] - lse;
  }
  if (should_record({&a})) {
    Tensor y = out.detach();
    record(out, {a}, [a, y, n, rows](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t i = r * n; i < (r + 1) * n; ++i) total += g[i];
        for (std::size_t i = r * n; i < (r + 1) * n; ++i) ga[i] = g[i] - std::exp(y[i]) * total;
      }
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor log_softmin(const Tensor& a) { return log_softmax(neg(a)); }

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  const std::size_t d = x.cols();
  if (d == 0) throw ShapeError("layer_norm over a zero-width row");
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm: gain " + shape_string(gain.shape()) + " / bias " +
                     shape_string(bias.shape()) + " do not match rows of " +
                     shape_string(x.shape()));
  }
  const std::size_t rows = x.rows();
  Tensor out(x.shape());
  std::vector<double> normed(x.size());
  std::vector<double> inv_std(rows);
  auto src = x.values();
  auto dst = out.mutable_values();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = src.subspan(r * d, d);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + epsilon);
    inv_std[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double nh = (row[c] - mean) * is;
      normed[r * d + c] = nh;
      dst[r * d + c] = nh * gain[c] + bias[c];
    }
  }
  if (should_record({&x, &gain, &bias})) {
    record(out, {x, gain, bias},
           [x, gain, bias, normed = std::move(normed), inv_std = std::move(inv_std), d, rows](
               std::span<const double> g, Tape& tape) {
             if (x.requires_grad()) {
               std::vector<double> gx(g.size());
               const double inv_d = 1.0 / static_cast<double>(d);
               for (std::size_t r = 0; r < rows; ++r) {
                 double mean_g = 0.0, mean_gn = 0.0;
                 for (std::size_t c = 0; c < d; ++c) {
                   const double gh = g[r * d + c] * gain[c];
                   mean_g += gh;
                   mean_gn += gh * normed[r * d + c];
                 }
                 mean_g *= inv_d;
                 mean_gn *= inv_d;
                 for (std::size_t c = 0; c < d; ++c) {
                   const double gh = g[r * d + c] * gain[c];
                   gx[r * d + c] = inv_std[r] * (gh - mean_g - normed[r * d + c] * mean_gn);
                 }
               }
               tape.accumulate(x, gx);
             }
             if (gain.requires_grad() || bias.requires_grad()) {
               std::vector<double> gg(d, 0.0), gb(d, 0.0);
               for (std::size_t i = 0; i < g.size(); ++i) {
                 gg[i % d] += g[i] * normed[i];
                 gb[i % d] += g[i];
               }
               tape.accumulate(gain, gg);
               tape.accumulate(bias, gb);
             }
           });
  }
  return out;
}

Tensor embedding(const Tensor& table, std::span<const TokenId> ids) {
  require_matrix(table, "embedding");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  if (ids.empty()) throw ShapeError("embedding of an empty id sequence");
  Tensor out({ids.size(), d});
  auto dst = out.mutable_values();
  auto src = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vocab) {
      throw VocabError("token id " + std::to_string(ids[r]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(src.begin() + ids[r] * d, d, dst.begin() + r * d);
  }
  if (should_record({&table})) {
    std::vector<TokenId> saved(ids.begin(), ids.end());
    record(out, {table}, [table, saved = std::move(saved), d](std::span<const double> g, Tape& tape) {
      std::vector<double> gt(table.size(), 0.0);
      for (std::size_t r = 0; r < saved.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) gt[saved[r] * d + c] += g[r * d + c];
      }
      tape.accumulate(table, gt);
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t width) {
  require_matrix(a, "slice_cols");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (width == 0 || start + width > cols) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + width) + ") outside " + shape_string(a.shape()));
  }
  Tensor out({rows, width});
  auto dst = out.mutable_values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) dst[r * width + c] = a[r * cols + start + c];
  }
  if (should_record({&a})) {
    record(out, {a}, [a, start, width, rows, cols](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(a.size(), 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < width; ++c) ga[r * cols + start + c] = g[r * width + c];
      }
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    total += p.cols();
  }
  Tensor out({rows, total});
  auto dst = out.mutable_values();
  std::size_t offset = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < w; ++c) dst[r * total + offset + c] = p[r * w + c];
    }
    offset += w;
    any_grad = any_grad || p.requires_grad();
  }
  if (active_tape() != nullptr && any_grad) {
    record(out, parts, [parts, rows, total](std::span<const double> g, Tape& tape) {
      std::size_t offset = 0;
      for (const auto& p : parts) {
        const std::size_t w = p.cols();
        if (p.requires_grad()) {
          std::vector<double> gp(rows * w);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) gp[r * w + c] = g[r * total + offset + c];
          }
          tape.accumulate(p, gp);
        }
        offset += w;
      }
    });
  }
  return out;
}

Tensor mean_of(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("mean_of nothing");
  Tensor acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  return scale(acc, 1.0 / static_cast<double>(parts.size()));
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> factor(a.size());
  for (double& f : factor) f = unit(rng) < keep ? 1.0 / keep : 0.0;
  Tensor out(a.shape());
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] * factor[i];
  if (should_record({&a})) {
    record(out, {a}, [a, factor = std::move(factor)](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * factor[i];
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor pick(const Tensor& a, std::span<const TokenId> index) {
  const std::size_t n = a.cols(), rows = a.rows();
  if (index.size() != rows) {
    throw ShapeError("pick: " + std::to_string(index.size()) + " indices for " +
                     shape_string(a.shape()));
  }
  Tensor out({rows});
  auto dst = out.mutable_values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= n) {
      throw ShapeError("pick: index " + std::to_string(index[r]) + " outside row of " +
                       std::to_string(n));
    }
    dst[r] = a[r * n + index[r]];
  }
  if (should_record({&a})) {
    std::vector<TokenId> saved(index.begin(), index.end());
    record(out, {a}, [a, saved = std::move(saved), n](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(a.size(), 0.0);
      for (std::size_t r = 0; r < saved.size(); ++r) ga[r * n + saved[r]] = g[r];
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (should_record({&a})) {
    record(out, {a}, [a](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(a.size(), g[0]);
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor weighted_sum(const Tensor& a, std::span<const double> weights) {
  if (weights.size() != a.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                     shape_string(a.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) total += weights[i] * a[i];
  }
  Tensor out = Tensor::scalar(total);
  if (should_record({&a})) {
    std::vector<double> w(weights.begin(), weights.end());
    record(out, {a}, [a, w = std::move(w)](std::span<const double> g, Tape& tape) {
      std::vector<double> ga(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) ga[i] = g[0] * w[i];
      tape.accumulate(a, ga);
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  Tensor out(std::move(shape), std::move(values));
  if (should_record({&a})) {
    record(out, {a}, [a](std::span<const double> g, Tape& tape) { tape.accumulate(a, g); });
  }
  return out;
}

GradCheckResult finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                  double h, const Mask* exclude) {
  Tensor probe = x.clone();
  probe.set_requires_grad(true);
  std::vector<double> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f(probe);
    analytic = tape.backward(y).of(probe);
  }

  GradCheckResult result;
  NoGradScope no_grad;
  auto values = probe.mutable_values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (exclude != nullptr && (*exclude)[i]) continue;
    const double saved = values[i];
    values[i] = saved + h;
    const double up = f(probe).item();
    values[i] = saved - h;
    const double down = f(probe).item();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    if (!std::isfinite(numeric)) continue;
    const double denom = std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
    const double err = std::abs(analytic[i] - numeric) / denom;
    ++result.checked;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace contrast
