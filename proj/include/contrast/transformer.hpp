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
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "contrast/ops.hpp"
#include "contrast/tensor.hpp"

namespace contrast {

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kReservedTokens = 4;

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 256;
  std::size_t vocab_size = 64;
  double dropout = 0.3;
  std::size_t max_seq_len = 64;
  bool share_embeddings = true;

  std::size_t head_dim() const { return d_model / n_heads; }
  // Throws UsageError on an inconsistent configuration.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Named learnable tensors in manifest order.
class ModelParams {
 public:
  void add(const std::string& name, Tensor tensor);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::size_t parameter_count() const;

  void set_requires_grad(bool on);
  // Deep copy; the copy shares no storage with this one.
  ModelParams clone() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::size_t> index_;
  std::vector<Tensor> tensors_;
};

// Parameter path and shape, in the order checkpoints store them.
struct ManifestEntry {
  std::string name;
  Shape shape;
};

std::vector<ManifestEntry> transformer_manifest(const ModelConfig& config);

// Xavier-uniform weights, zero biases, unit gains, N(0, d^-1/2) embeddings.
ModelParams init_transformer(const ModelConfig& config, std::uint64_t seed);

// Throws ShapeError when a manifest entry is missing or has the wrong
// shape, or when params hold a transformer tensor the manifest lacks.
void check_transformer_params(const ModelParams& params, const ModelConfig& config);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

// Encoder-decoder attention weights of every (layer, head), each
// tgt_len x src_len, plus the matching per-head value matrices
// (src_len x head_dim).
struct AttentionRecord {
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::vector<Tensor> weights;
  std::vector<Tensor> values;

  const Tensor& weight(std::size_t layer, std::size_t head) const {
    return weights[layer * n_heads + head];
  }
  const Tensor& value(std::size_t layer, std::size_t head) const {
    return values[layer * n_heads + head];
  }
};

struct HeadOutputs {
  Tensor output;
  std::vector<Tensor> weights;
  std::vector<Tensor> values;
};

Tensor sinusoidal_positions(std::size_t length, std::size_t d_model);

// Scaled dot-product attention; `mask` (rows x keys) marks excluded keys.
struct AttentionResult {
  Tensor context;
  Tensor weights;
};
AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     const Mask* mask = nullptr);

// Projects query/key/value through `prefix`.{wq,bq,wk,bk,wv,bv}, attends per
// head and recombines through `prefix`.{wo,bo}.
HeadOutputs multi_head_attention(const ModelParams& params, const std::string& prefix,
                                 std::size_t n_heads, const Tensor& query_seq,
                                 const Tensor& key_seq, const Tensor& value_seq, const Mask* mask);

Mask padding_mask(std::span<const TokenId> ids);

struct EncoderOutput {
  Tensor states;
  // One byte per source position; nonzero for padding.
  Mask padding;
};

EncoderOutput encode(const ModelParams& params, const ModelConfig& config,
                     std::span<const TokenId> source_ids, const ForwardOptions& options = {});

struct DecoderOutput {
  Tensor logits;
  AttentionRecord record;
};

// Teacher-forced decoder pass. `decoder_input` starts with bos.
DecoderOutput decode_forward(const ModelParams& params, const ModelConfig& config,
                             const EncoderOutput& encoded, std::span<const TokenId> decoder_input,
                             const ForwardOptions& options = {});

Tensor conventional_log_probs(const Tensor& logits);

}  // namespace contrast
