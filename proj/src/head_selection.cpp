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

#include "contrast/head_selection.hpp"

#include <algorithm>
#include <cstdio>

#include "contrast/errors.hpp"

namespace contrast {

AlignmentSet attention_to_alignment(const Tensor& weights, const Mask& source_padding) {
  const std::size_t n = weights.cols(), rows = weights.rows();
  AlignmentSet out;
  out.source_length = n;
  out.target_length = rows;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (!source_padding.empty() && source_padding[c]) continue;
      if (best == n || weights.at(r, c) > weights.at(r, best)) best = c;
    }
    if (best < n) out.pairs.insert({best, r});
  }
  return out;
}

double aer(const AlignmentSet& predicted, const AlignmentSet& gold_sure) {
  const std::size_t total = predicted.pairs.size() + gold_sure.pairs.size();
  if (total == 0) return 0.0;
  std::size_t common = 0;
  for (const auto& link : predicted.pairs) common += gold_sure.pairs.count(link);
  return 1.0 - 2.0 * static_cast<double>(common) / static_cast<double>(total);
}

std::vector<HeadRank> rank_heads(const Model& model, const std::vector<std::vector<TokenId>>& sources,
                                 const std::vector<std::vector<TokenId>>& targets,
                                 const std::vector<AlignmentSet>& gold) {
  if (sources.empty()) throw UsageError("head ranking needs at least one sentence pair");
  if (sources.size() != targets.size() || sources.size() != gold.size()) {
    throw UsageError("head ranking: " + std::to_string(sources.size()) + " sources, " +
                     std::to_string(targets.size()) + " targets, " + std::to_string(gold.size()) +
                     " alignments");
  }
  const std::size_t layers = model.config.n_layers, heads = model.config.n_heads;
  std::vector<double> totals(layers * heads, 0.0);
  NoGradScope no_grad;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (gold[i].source_length != sources[i].size() || gold[i].target_length != targets[i].size()) {
      throw UsageError("alignment " + std::to_string(i) + " does not match its sentence lengths");
    }
    const auto input = decoder_input_for(targets[i]);
    auto fwd = forward_sequence(model, sources[i], input, false);
    const std::size_t tgt = targets[i].size(), src = sources[i].size();
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t h = 0; h < heads; ++h) {
        const Tensor& w = fwd.decoded.record.weight(l, h);
        std::vector<double> rows(w.values().begin(), w.values().begin() + tgt * src);
        Tensor gold_rows = Tensor::matrix(tgt, src, std::move(rows));
        totals[l * heads + h] += aer(attention_to_alignment(gold_rows, fwd.encoded.padding), gold[i]);
      }
    }
  }
  std::vector<HeadRank> ranking;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      ranking.push_back({l, h, totals[l * heads + h] / static_cast<double>(sources.size())});
    }
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const HeadRank& a, const HeadRank& b) { return a.mean_aer < b.mean_aer; });
  return ranking;
}

std::string format_head_ranking(const std::vector<HeadRank>& ranking) {
  std::string out = "rank\tlayer\thead\tmean_aer\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%zu\t%.6f\n", i + 1, ranking[i].layer, ranking[i].head,
                  ranking[i].mean_aer);
    out += buf;
  }
  return out;
}

}  // namespace contrast
