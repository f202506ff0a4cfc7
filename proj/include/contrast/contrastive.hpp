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

#include "contrast/transformer.hpp"

namespace contrast {

enum class MaskKind { kMax, kTopK, kDynamic };

// Which conventional-attention positions the opponent hides.
struct MaskStrategy {
  MaskKind kind = MaskKind::kMax;
  std::size_t k = 1;
  double threshold = 1.02;

  static MaskStrategy max() { return {}; }
  static MaskStrategy top_k(std::size_t k) { return {MaskKind::kTopK, k, 1.02}; }
  static MaskStrategy dynamic(double threshold) { return {MaskKind::kDynamic, 1, threshold}; }

  // "max", "top-<k>", "dynamic" or "dynamic:<threshold>".
  static MaskStrategy parse(const std::string& text);
  std::string name() const;
  bool operator==(const MaskStrategy&) const = default;
};

enum class OpponentFunction { kMask, kOneMinus, kReciprocal };

OpponentFunction parse_opponent_function(const std::string& text);
std::string opponent_function_name(OpponentFunction fn);

struct OpponentConfig {
  std::size_t selected_layer = 0;
  std::size_t selected_head = 0;
  MaskStrategy mask;
  OpponentFunction function = OpponentFunction::kMask;
  // Average the conventional weights (and value matrices) over every head
  // of selected_layer instead of reading one head.
  bool average_heads = false;
  // 0 means 4 x head_dim.
  std::size_t d_branch_ffn = 0;
  bool detach_opponent_input = false;

  std::size_t branch_ffn(const ModelConfig& model) const {
    return d_branch_ffn ? d_branch_ffn : 4 * model.head_dim();
  }
  void validate(const ModelConfig& model) const;
  bool operator==(const OpponentConfig&) const = default;
};

std::vector<ManifestEntry> branch_manifest(const ModelConfig& model, const OpponentConfig& opponent);

// Appends branch.* tensors to params. Uses its own generator so attaching a
// branch never shifts the transformer's initialization.
void init_branch(ModelParams& params, const ModelConfig& model, const OpponentConfig& opponent,
                 std::uint64_t seed);
bool has_branch(const ModelParams& params);

// Indices of the source positions the strategy masks, in mask order. Only
// positions not flagged in `padding` take part. Throws DegenerateError when
// nothing would remain unmasked.
std::vector<std::size_t> opponent_positions(std::span<const double> alpha_c, const Mask& padding,
                                            const MaskStrategy& strategy);

// alpha_c with the masked positions replaced by -inf.
Tensor opponent_mask(const Tensor& alpha_c, const MaskStrategy& strategy,
                     const Mask* padding = nullptr);

// Softmax over a masked attention row (or rows). Padding maps to 0.
Tensor opponent_weights(const Tensor& masked_alpha, const Mask* padding = nullptr);

// alpha_o (rows x src) times v (src x d_branch).
Tensor opponent_attention(const Tensor& alpha_o, const Tensor& v);

// softmax(1 - alpha_c) or softmax(1 / max(alpha_c, 1e-9)); padding excluded.
Tensor alternative_opponent(const Tensor& alpha_c, OpponentFunction which,
                            const Mask* padding = nullptr);

// z1 = LN(attention_o); z2 = FFN(z1); z3 = LN(z1 + z2); log softmin(z3 W).
Tensor opponent_log_probs(const Tensor& attention_o, const ModelParams& params,
                          const ForwardOptions& options = {}, double dropout_rate = 0.0);

struct OpponentSource {
  Tensor alpha_c;  // tgt_len x src_len
  Tensor values;   // src_len x head_dim
};

OpponentSource select_opponent_source(const AttentionRecord& record, const OpponentConfig& opponent);

struct OpponentOutput {
  Tensor log_probs;  // tgt_len x vocab
  Tensor alpha_o;    // tgt_len x src_len
  // Rows whose source leaves no opponent (e.g. a single real token). Their
  // P_o is not trained and decodes as uniform.
  std::vector<std::uint8_t> degenerate;
};

OpponentOutput opponent_forward(const ModelParams& params, const ModelConfig& model,
                                const OpponentConfig& opponent, const AttentionRecord& record,
                                const Mask& source_padding, const ForwardOptions& options = {});

}  // namespace contrast
