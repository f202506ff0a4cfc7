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

#include <optional>
#include <string>
#include <vector>

#include "contrast/transformer.hpp"

namespace contrast {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using Tokens = std::vector<std::string>;

// Harmonic mean, 0 when both are 0.
double f1_score(double precision, double recall);

// Clipped n-gram overlap. With several references the best-scoring one (by
// f1) is reported.
RougeScore rouge_n(const Tokens& candidate, const std::vector<Tokens>& references, std::size_t n);

std::size_t lcs_length(const Tokens& a, const Tokens& b);
RougeScore rouge_l(const Tokens& candidate, const std::vector<Tokens>& references);

enum class RougeMode { kF1, kRecall };

struct RougeReport {
  RougeScore r1, r2, rl;
  RougeMode mode = RougeMode::kF1;
  std::optional<std::size_t> byte_cap;
  std::size_t sentences = 0;
};

// Keeps the longest whitespace-token prefix whose space-joined text fits in
// `cap` bytes. A token straddling the cap is dropped rather than cut, so a
// larger cap never removes a match.
Tokens truncate_to_bytes(const Tokens& tokens, std::size_t cap);

// Mean of per-sentence scores.
RougeReport rouge_corpus(const std::vector<Tokens>& candidates,
                         const std::vector<std::vector<Tokens>>& references,
                         RougeMode mode = RougeMode::kF1,
                         std::optional<std::size_t> byte_cap = std::nullopt);

// Tab-separated: metric, precision, recall, f1, reported.
std::string format_report(const RougeReport& report);

// Mean Shannon entropy (nats) of the rows of a tgt_len x src_len weight
// matrix, skipping columns flagged in `source_padding`.
double attention_entropy(const Tensor& weights, const Mask& source_padding = {});
double attention_entropy(const AttentionRecord& record, std::size_t layer, std::size_t head,
                         const Mask& source_padding = {});

}  // namespace contrast
