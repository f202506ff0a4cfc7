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

#include <span>
#include <vector>

#include "contrast/model.hpp"

namespace contrast {

// Per-token log-probabilities for the next position of a prefix.
struct StepScores {
  std::vector<double> log_pc;
  std::vector<double> log_po;  // empty when the opponent is not consulted
};

class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual std::size_t vocab_size() const = 0;
  // `prefix` starts with bos.
  virtual StepScores score(std::span<const TokenId> prefix) const = 0;
};

// Scores prefixes with a model for one fixed source sentence. With
// `use_po`, rows with no opponent get a uniform P_o.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const Model& model, std::span<const TokenId> source, bool use_po);
  std::size_t vocab_size() const override { return model_.config.vocab_size; }
  StepScores score(std::span<const TokenId> prefix) const override;

 private:
  const Model& model_;
  EncoderOutput encoded_;
  bool use_po_;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // bos, then generated tokens
  double score = 0.0;           // Σ log P_c + λ log P_o
  double pc_score = 0.0;        // Σ log P_c
  bool finished = false;

  std::size_t length() const { return tokens.size() - 1; }
  std::vector<TokenId> output() const;  // without bos / eos
};

struct BeamOptions {
  std::size_t beam_size = 4;
  std::size_t max_len = 0;  // 0: source length + 10
  double lambda = 1.0;
  bool use_po = true;
  bool length_normalize = true;
};

// Ranking key of a finished hypothesis.
double final_score(const Hypothesis& h, bool length_normalize);

// Tokens pad and bos are never emitted. Hypotheses that emit eos or reach
// max_len retire; they keep their beam slot for that step.
std::vector<Hypothesis> beam_search(const StepScorer& scorer, const BeamOptions& options);
std::vector<Hypothesis> beam_search(const Model& model, std::span<const TokenId> source,
                                    BeamOptions options);

struct SequenceScore {
  double joint = 0.0;
  double pc = 0.0;
  double po = 0.0;
};

// Teacher-forced sums over `output` (the generated tokens, eos included if
// present).
SequenceScore score_sequence(const Model& model, std::span<const TokenId> source,
                             std::span<const TokenId> output, double lambda);

// Best hypothesis per source, without bos / eos.
std::vector<std::vector<TokenId>> decode_corpus(const Model& model,
                                                const std::vector<std::vector<TokenId>>& sources,
                                                const BeamOptions& options);

}  // namespace contrast
