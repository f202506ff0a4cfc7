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

#include "contrast/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
  double pc_score;
};

}  // namespace

ModelScorer::ModelScorer(const Model& model, std::span<const TokenId> source, bool use_po)
    : model_(model), use_po_(use_po) {
  if (use_po_ && !model_.contrastive()) throw UsageError("P_o requested but the model has no branch");
  NoGradScope no_grad;
  encoded_ = encode(model_.params, model_.config, source);
}

StepScores ModelScorer::score(std::span<const TokenId> prefix) const {
  NoGradScope no_grad;
  DecoderOutput dec = decode_forward(model_.params, model_.config, encoded_, prefix);
  Tensor log_pc = conventional_log_probs(dec.logits);
  const std::size_t v = log_pc.cols(), last = log_pc.rows() - 1;
  StepScores out;
  out.log_pc.assign(log_pc.values().begin() + last * v, log_pc.values().begin() + (last + 1) * v);
  if (use_po_) {
    OpponentOutput po = opponent_forward(model_.params, model_.config, *model_.opponent, dec.record,
                                         encoded_.padding);
    if (po.degenerate[last]) {
      out.log_po.assign(v, -std::log(static_cast<double>(v)));
    } else {
      out.log_po.assign(po.log_probs.values().begin() + last * v,
                        po.log_probs.values().begin() + (last + 1) * v);
    }
  }
  return out;
}

std::vector<TokenId> Hypothesis::output() const {
  std::vector<TokenId> out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i] == kEosId) break;
    out.push_back(tokens[i]);
  }
  return out;
}

double final_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize || h.length() == 0) return h.score;
  return h.score / static_cast<double>(h.length());
}

std::vector<Hypothesis> beam_search(const StepScorer& scorer, const BeamOptions& options) {
  if (options.beam_size == 0) throw UsageError("beam size must be at least 1");
  if (options.max_len == 0) throw UsageError("max_len must be at least 1");
  const std::size_t vocab = scorer.vocab_size();

  std::vector<Hypothesis> live{Hypothesis{{kBosId}, 0.0, 0.0, false}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 1; step <= options.max_len && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      StepScores s = scorer.score(live[h].tokens);
      if (s.log_pc.size() != vocab || (options.use_po && s.log_po.size() != vocab)) {
        throw ShapeError("scorer returned scores of the wrong width");
      }
      for (std::size_t y = 0; y < vocab; ++y) {
        if (y == static_cast<std::size_t>(kPadId) || y == static_cast<std::size_t>(kBosId)) continue;
        const double pc = s.log_pc[y];
        const double joint = options.use_po ? pc + options.lambda * s.log_po[y] : pc;
        candidates.push_back({h, static_cast<TokenId>(y), live[h].score + joint, live[h].pc_score + pc});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (candidates.size() > options.beam_size) candidates.resize(options.beam_size);

    std::vector<Hypothesis> next;
    for (const auto& c : candidates) {
      Hypothesis h = live[c.parent];
      h.tokens.push_back(c.token);
      h.score = c.score;
      h.pc_score = c.pc_score;
      if (c.token == kEosId || step == options.max_len) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  std::stable_sort(finished.begin(), finished.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return final_score(a, options.length_normalize) > final_score(b, options.length_normalize);
  });
  return finished;
}

std::vector<Hypothesis> beam_search(const Model& model, std::span<const TokenId> source,
                                    BeamOptions options) {
  if (source.empty()) throw UsageError("cannot decode an empty source");
  if (options.max_len == 0) options.max_len = source.size() + 10;
  options.max_len = std::min(options.max_len, model.config.max_seq_len - 1);
  if (options.max_len == 0) throw UsageError("max_seq_len leaves no room to decode");
  const bool use_po = options.use_po && options.lambda != 0.0 && model.contrastive();
  if (options.use_po && options.lambda != 0.0 && !model.contrastive()) {
    throw UsageError("P_o decoding requested for a model without an opponent branch");
  }
  options.use_po = use_po;
  ModelScorer scorer(model, source, use_po);
  return beam_search(scorer, options);
}

SequenceScore score_sequence(const Model& model, std::span<const TokenId> source,
                             std::span<const TokenId> output, double lambda) {
  if (output.empty()) throw UsageError("score_sequence needs at least one output token");
  NoGradScope no_grad;
  std::vector<TokenId> input{kBosId};
  input.insert(input.end(), output.begin(), output.end() - 1);
  const bool use_po = model.contrastive();
  auto fwd = forward_sequence(model, source, input, use_po);
  const std::size_t v = fwd.log_pc.cols();
  SequenceScore out;
  for (std::size_t t = 0; t < output.size(); ++t) {
    out.pc += fwd.log_pc.at(t, output[t]);
    if (use_po) {
      out.po += fwd.opponent->degenerate[t] ? -std::log(static_cast<double>(v))
                                            : fwd.opponent->log_probs.at(t, output[t]);
    }
  }
  out.joint = use_po && lambda != 0.0 ? out.pc + lambda * out.po : out.pc;
  return out;
}

std::vector<std::vector<TokenId>> decode_corpus(const Model& model,
                                                const std::vector<std::vector<TokenId>>& sources,
                                                const BeamOptions& options) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sources.size());
  for (const auto& src : sources) {
    auto hyps = beam_search(model, src, options);
    out.push_back(hyps.empty() ? std::vector<TokenId>{} : hyps.front().output());
  }
  return out;
}

}  // namespace contrast
