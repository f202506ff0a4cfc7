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

#include "contrast/corpus.hpp"
#include "contrast/model.hpp"

namespace contrast {

// Per target row, the argmax source position (first on ties). Columns
// flagged in `source_padding` never win.
AlignmentSet attention_to_alignment(const Tensor& weights, const Mask& source_padding = {});

// 1 - 2|A ∩ S| / (|A| + |S|); 0 when both sets are empty.
double aer(const AlignmentSet& predicted, const AlignmentSet& gold_sure);

struct HeadRank {
  std::size_t layer = 0;
  std::size_t head = 0;
  double mean_aer = 0.0;
};

// Teacher-forced on the gold targets with dropout off; mean AER per
// encoder-decoder head, ascending (ties keep layer-major order).
std::vector<HeadRank> rank_heads(const Model& model, const std::vector<std::vector<TokenId>>& sources,
                                 const std::vector<std::vector<TokenId>>& targets,
                                 const std::vector<AlignmentSet>& gold);

// Tab-separated table: rank, layer, head, mean_aer.
std::string format_head_ranking(const std::vector<HeadRank>& ranking);

}  // namespace contrast
