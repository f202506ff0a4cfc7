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

#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "contrast/corpus.hpp"
#include "contrast/model.hpp"

namespace contrast {

enum class Objective {
  // log P_c + λ log P_o with a softmin opponent output.
  kSoftminJoint,
  // log P_c - λ log P_o with a softmax opponent output. Never trainable:
  // P_o is driven toward 0 and log P_o toward -inf. Rejected by validate().
  kNegatedSoftmax,
};

Objective parse_objective(const std::string& text);

// Error text for a negated-softmax request; names the documented pitfall.
extern const char* const kNegatedSoftmaxPitfall;

struct TrainConfig {
  double lambda = 1.0;
  double base_lr = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_epsilon = 1e-9;
  std::size_t warmup_steps = 400;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  // 0 = no limit beyond max_epochs.
  std::size_t max_steps = 0;
  std::uint64_t seed = 1;
  // 0 = only the final checkpoint.
  std::size_t checkpoint_every = 0;
  // 0 = no clipping.
  double clip_norm = 0.0;
  Objective objective = Objective::kSoftminJoint;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct LossTerms {
  Tensor pc_sum;  // Σ log P_c(gold) over non-pad positions
  Tensor po_sum;  // Σ log P_o(gold) over non-pad, non-degenerate positions
  std::size_t tokens = 0;
  std::size_t po_tokens = 0;
};

// Gold-token log-likelihood sums. `log_po` may be empty (no branch);
// `degenerate` flags rows whose opponent term is skipped.
LossTerms gold_log_likelihood(const Tensor& log_pc, const Tensor* log_po,
                              std::span<const TokenId> gold,
                              std::span<const std::uint8_t> degenerate = {});

// -(Σ log P_c(gold) + λ Σ log P_o(gold)) / (non-pad positions).
Tensor joint_loss(const Tensor& log_pc, const Tensor& log_po, std::span<const TokenId> gold,
                  double lambda, std::span<const std::uint8_t> degenerate = {});

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup_steps);

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

// One bias-corrected Adam update of every parameter that has a gradient in
// `grads` (names absent from grads are treated as zero gradient). Throws
// TrainingError naming the parameter when a gradient is not finite.
void adam_step(ModelParams& params, const std::map<std::string, std::vector<double>>& grads,
               AdamState& state, double lr, const AdamHyper& hyper);

struct StepRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double pc_nll = 0.0;
  double po_nll = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;
  // Sentence pairs whose opponent term was skipped at least once.
  std::size_t degenerate_pairs = 0;
};

// "step\tlr\tloss\tpc_nll\tpo_nll" rows, no header.
std::string format_step(const StepRecord& record);

using CheckpointHook = std::function<void(std::size_t step, const Model& model)>;

// Maximizes log P_c + λ log P_o (or log P_c alone when λ == 0 or the model
// has no branch) with Adam and the inverse-square-root schedule. `state`
// carries optimizer state across calls; `metrics` receives one line per
// step.
TrainResult train(Model& model, std::span<const SentencePair> corpus, const TrainConfig& config,
                  AdamState* state = nullptr, std::ostream* metrics = nullptr,
                  const CheckpointHook& on_checkpoint = {});

}  // namespace contrast
