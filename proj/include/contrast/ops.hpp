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

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "contrast/tensor.hpp"

namespace contrast {

using TokenId = std::int32_t;

// One byte per element; nonzero means "masked out".
using Mask = std::vector<std::uint8_t>;

// Differentiable operations. Each records onto the thread's active tape
// when one is installed and any input requires gradient.

Tensor matmul(const Tensor& a, const Tensor& b);
// a · bᵀ without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// factor * a + offset, elementwise.
Tensor affine(const Tensor& a, double factor, double offset);
Tensor neg(const Tensor& a);
// Adds a length-cols() vector to every row.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor relu(const Tensor& a);
// 1 / max(a, floor).
Tensor reciprocal_clamped(const Tensor& a, double floor);

// Masked entries become `fill` and receive no gradient.
Tensor masked_fill(const Tensor& a, const Mask& mask, double fill);

// Row-wise softmax over the last dimension. Masked entries and -inf inputs
// map to exactly 0. A row with nothing left throws DegenerateError.
Tensor softmax(const Tensor& a, const Mask* mask = nullptr);
// softmax(-a).
Tensor softmin(const Tensor& a);
Tensor log_softmax(const Tensor& a);
// log_softmax(-a).
Tensor log_softmin(const Tensor& a);

inline constexpr double kLayerNormEpsilon = 1e-6;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon = kLayerNormEpsilon);

// Rows of `table` selected by ids.
Tensor embedding(const Tensor& table, std::span<const TokenId> ids);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t width);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor mean_of(const std::vector<Tensor>& parts);

// Inverted dropout: survivors are scaled by 1/(1-rate).
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

// out[r] = a[r, index[r]].
Tensor pick(const Tensor& a, std::span<const TokenId> index);
Tensor sum(const Tensor& a);
// Σ weights[i] * a[i] over all elements; weights are constants.
Tensor weighted_sum(const Tensor& a, std::span<const double> weights);
Tensor reshape(const Tensor& a, Shape shape);

// Max over coordinates of |analytic - central difference| /
// max(1e-6, |analytic| + |numeric|). Coordinates flagged in `exclude`, and
// coordinates where the numeric estimate is not finite, are skipped.
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

GradCheckResult finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                  double h = 1e-5, const Mask* exclude = nullptr);

}  // namespace contrast
