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

#include "contrast/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "contrast/errors.hpp"

namespace contrast {

const char* const kNegatedSoftmaxPitfall =
    "objective 'negated_softmax' (maximize log P_c - lambda * log P_o with a softmax opponent "
    "output) is rejected: it failed to train because P_o becomes too small and log P_o diverges "
    "to negative infinity (see \"Known pitfall: negated-softmax objective\" in docs/cli.md); use "
    "objective = softmin_joint";

Objective parse_objective(const std::string& text) {
  if (text == "softmin_joint") return Objective::kSoftminJoint;
  if (text == "negated_softmax") return Objective::kNegatedSoftmax;
  throw UsageError("unknown objective '" + text + "' (softmin_joint)");
}

void TrainConfig::validate() const {
  if (objective == Objective::kNegatedSoftmax) throw UsageError(kNegatedSoftmaxPitfall);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw UsageError("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw UsageError("adam_beta2 must be in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw UsageError("adam_epsilon must be positive");
  if (!(base_lr > 0.0)) throw UsageError("base_lr must be positive");
  if (warmup_steps == 0) throw UsageError("warmup_steps must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (max_epochs == 0) throw UsageError("max_epochs must be positive");
  if (!(clip_norm >= 0.0)) throw UsageError("clip_norm must be >= 0");
}

LossTerms gold_log_likelihood(const Tensor& log_pc, const Tensor* log_po,
                              std::span<const TokenId> gold, std::span<const std::uint8_t> degenerate) {
  if (gold.size() != log_pc.rows()) {
    throw ShapeError("gold sequence of " + std::to_string(gold.size()) + " tokens for " +
                     std::to_string(log_pc.rows()) + " output positions");
  }
  std::vector<double> pc_weights(log_pc.size(), 0.0);
  std::vector<double> po_weights(log_pc.size(), 0.0);
  const std::size_t vocab = log_pc.cols();
  LossTerms terms;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] == kPadId) continue;
    if (gold[t] < 0 || static_cast<std::size_t>(gold[t]) >= vocab) {
      throw VocabError("gold token " + std::to_string(gold[t]) + " outside vocabulary");
    }
    pc_weights[t * vocab + gold[t]] = 1.0;
    ++terms.tokens;
    if (degenerate.empty() || !degenerate[t]) {
      po_weights[t * vocab + gold[t]] = 1.0;
      ++terms.po_tokens;
    }
  }
  terms.pc_sum = weighted_sum(log_pc, pc_weights);
  if (log_po != nullptr) {
    if (log_po->shape() != log_pc.shape()) {
      throw ShapeError("log P_o " + shape_string(log_po->shape()) + " vs log P_c " +
                       shape_string(log_pc.shape()));
    }
    terms.po_sum = weighted_sum(*log_po, po_weights);
  } else {
    terms.po_sum = Tensor::scalar(0.0);
    terms.po_tokens = 0;
  }
  return terms;
}

Tensor joint_loss(const Tensor& log_pc, const Tensor& log_po, std::span<const TokenId> gold,
                  double lambda, std::span<const std::uint8_t> degenerate) {
  LossTerms terms = gold_log_likelihood(log_pc, &log_po, gold, degenerate);
  if (terms.tokens == 0) throw DataError("joint loss over a batch with no non-padding positions");
  Tensor total = lambda == 0.0 ? terms.pc_sum : add(terms.pc_sum, scale(terms.po_sum, lambda));
  return scale(total, -1.0 / static_cast<double>(terms.tokens));
}

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup_steps) {
  if (step == 0) step = 1;
  const double s = static_cast<double>(step), w = static_cast<double>(warmup_steps);
  if (step <= warmup_steps) return base_lr * s / w;
  return base_lr * std::sqrt(w / s);
}

void adam_step(ModelParams& params, const std::map<std::string, std::vector<double>>& grads,
               AdamState& state, double lr, const AdamHyper& hyper) {
  for (const auto& [name, g] : grads) {
    for (double v : g) {
      if (!std::isfinite(v)) throw TrainingError("non-finite gradient in parameter " + name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (const auto& name : params.names()) {
    Tensor& p = params.at(name);
    auto values = p.mutable_values();
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) {
      m.assign(values.size(), 0.0);
      v.assign(values.size(), 0.0);
    }
    auto it = grads.find(name);
    const std::vector<double>* g = it == grads.end() ? nullptr : &it->second;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + hyper.epsilon);
    }
  }
}

std::string format_step(const StepRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.9g\t%.9g\t%.9g\t%.9g", r.step, r.lr, r.loss, r.pc_nll, r.po_nll);
  return buf;
}

TrainResult train(Model& model, std::span<const SentencePair> corpus, const TrainConfig& config,
                  AdamState* state, std::ostream* metrics, const CheckpointHook& on_checkpoint) {
  config.validate();
  if (corpus.empty()) throw UsageError("training corpus is empty");
  model.config.validate();
  if (model.opponent) model.opponent->validate(model.config);

  AdamState local;
  AdamState& adam = state ? *state : local;
  const AdamHyper hyper{config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  const bool use_po = model.contrastive() && config.lambda != 0.0;

  // Independent streams: shuffling, transformer dropout, branch dropout.
  std::mt19937_64 shuffle_rng(config.seed * 3 + 11);
  std::mt19937_64 dropout_rng(config.seed * 3 + 12);
  std::mt19937_64 branch_rng(config.seed * 3 + 13);
  const ForwardOptions main_opts{model.config.dropout > 0.0, &dropout_rng};
  const ForwardOptions branch_opts{model.config.dropout > 0.0, &branch_rng};

  std::vector<Tensor> leaves;
  for (const auto& name : model.params.names()) {
    model.params.at(name).set_requires_grad(true);
    leaves.push_back(model.params.at(name));
  }

  TrainResult result;
  std::vector<std::uint8_t> pair_degenerate(corpus.size(), 0);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t steps_this_call = 0;
  bool stop = false;

  for (std::size_t epoch = 0; epoch < config.max_epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      Tape tape;
      double pc_total = 0.0, po_total = 0.0;
      std::size_t tokens = 0, po_tokens = 0;
      Tensor objective;
      {
        TapeScope scope(tape);
        std::vector<Tensor> per_pair;
        for (std::size_t b = begin; b < end; ++b) {
          const SentencePair& pair = corpus[order[b]];
          const auto input = decoder_input_for(pair.target);
          const auto gold = gold_output_for(pair.target);
          auto fwd = forward_sequence(model, pair.source, input, use_po, main_opts, branch_opts);
          LossTerms terms = gold_log_likelihood(
              fwd.log_pc, fwd.opponent ? &fwd.opponent->log_probs : nullptr, gold,
              fwd.opponent ? std::span<const std::uint8_t>(fwd.opponent->degenerate)
                           : std::span<const std::uint8_t>());
          if (use_po && terms.po_tokens < terms.tokens) pair_degenerate[order[b]] = 1;
          tokens += terms.tokens;
          po_tokens += terms.po_tokens;
          pc_total += terms.pc_sum.item();
          po_total += terms.po_sum.item();
          per_pair.push_back(use_po ? add(terms.pc_sum, scale(terms.po_sum, config.lambda))
                                    : terms.pc_sum);
        }
        if (tokens == 0) throw DataError("training batch has no target tokens");
        Tensor total = per_pair.front();
        for (std::size_t i = 1; i < per_pair.size(); ++i) total = add(total, per_pair[i]);
        objective = scale(total, -1.0 / static_cast<double>(tokens));
      }
      const double loss = objective.item();
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at step " + std::to_string(adam.step + 1));
      }
      Gradients g = tape.backward(objective);
      std::map<std::string, std::vector<double>> grads;
      double norm2 = 0.0;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!g.reached(leaves[i])) continue;
        auto values = g.of(leaves[i]);
        for (double v : values) norm2 += v * v;
        grads.emplace(model.params.names()[i], std::move(values));
      }
      if (config.clip_norm > 0.0 && std::sqrt(norm2) > config.clip_norm) {
        const double factor = config.clip_norm / std::sqrt(norm2);
        for (auto& [name, values] : grads) {
          for (double& v : values) v *= factor;
        }
      }
      const double lr = lr_schedule(adam.step + 1, config.base_lr, config.warmup_steps);
      adam_step(model.params, grads, adam, lr, hyper);

      StepRecord rec;
      rec.step = adam.step;
      rec.lr = lr;
      rec.loss = loss;
      rec.pc_nll = -pc_total / static_cast<double>(tokens);
      rec.po_nll = po_tokens ? -po_total / static_cast<double>(po_tokens) : 0.0;
      result.steps.push_back(rec);
      if (metrics) *metrics << format_step(rec) << '\n';
      epoch_loss += loss;
      ++epoch_steps;
      ++steps_this_call;
      if (on_checkpoint && config.checkpoint_every && adam.step % config.checkpoint_every == 0) {
        on_checkpoint(adam.step, model);
      }
      if (config.max_steps && steps_this_call >= config.max_steps) {
        stop = true;
        break;
      }
    }
    if (epoch_steps) result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_steps));
  }
  for (auto d : pair_degenerate) result.degenerate_pairs += d;
  model.params.set_requires_grad(false);
  if (metrics) metrics->flush();
  return result;
}

}  // namespace contrast
