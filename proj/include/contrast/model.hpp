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
#include <filesystem>
#include <optional>
#include <string>

#include "contrast/contrastive.hpp"
#include "contrast/transformer.hpp"

namespace contrast {

// A transformer with an optional opponent branch. Like Tensor, a copied
// Model shares parameter storage with the original; training a copy trains
// both. Use clone() for an independent model.
struct Model {
  ModelConfig config;
  std::optional<OpponentConfig> opponent;
  ModelParams params;

  bool contrastive() const { return opponent.has_value(); }
  Model clone() const { return Model{config, opponent, params.clone()}; }
};

Model make_baseline(const ModelConfig& config, std::uint64_t seed);
Model make_contrastive(const ModelConfig& config, const OpponentConfig& opponent, std::uint64_t seed);
// Adds a freshly initialized branch to a (typically trained) baseline.
Model attach_branch(const Model& baseline, const OpponentConfig& opponent, std::uint64_t seed);
// Drops the branch and its parameters.
Model strip_branch(const Model& model);

struct SequenceForward {
  EncoderOutput encoded;
  DecoderOutput decoded;
  Tensor log_pc;
  std::optional<OpponentOutput> opponent;
};

// One teacher-forced pass. The branch draws dropout from `branch_options`
// so the transformer's random stream is the same with or without it.
SequenceForward forward_sequence(const Model& model, std::span<const TokenId> source,
                                 std::span<const TokenId> decoder_input, bool with_opponent,
                                 const ForwardOptions& options = {},
                                 const ForwardOptions& branch_options = {});

// bos followed by target.
std::vector<TokenId> decoder_input_for(std::span<const TokenId> target);
// target followed by eos.
std::vector<TokenId> gold_output_for(std::span<const TokenId> target);

// Text checkpoint: a header, config key-value records, then one record per
// tensor in manifest order with values as C99 hex floats, so save/load is
// bit-exact.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Model& model);
Model parse_checkpoint(const std::string& text);

// FNV-1a 64 over names, shapes and value bits. The transformer hash ignores
// branch.* tensors.
std::uint64_t params_hash(const ModelParams& params, bool include_branch = true);
std::string hash_hex(std::uint64_t hash);

}  // namespace contrast
