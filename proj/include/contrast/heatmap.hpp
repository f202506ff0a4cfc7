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

#include <string>
#include <vector>

#include "contrast/tensor.hpp"

namespace contrast {

// Attention matrix as CSV: a header row of source tokens (first cell
// empty), then one row per target token led by that token. Values use
// round-trip precision.
std::string attention_csv(const Tensor& weights, const std::vector<std::string>& target_tokens,
                          const std::vector<std::string>& source_tokens);

// Heatmap with one <rect class="cell"> per matrix entry; darker is larger.
std::string attention_svg(const Tensor& weights, const std::vector<std::string>& target_tokens,
                          const std::vector<std::string>& source_tokens, const std::string& title);

}  // namespace contrast
