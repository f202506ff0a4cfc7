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

#include "contrast/contrastive.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kReciprocalFloor = 1e-9;

std::size_t count_valid(const Mask& padding, std::size_t n) {
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) valid += padding.empty() || !padding[i];
  return valid;
}

}  // namespace

MaskStrategy MaskStrategy::parse(const std::string& text) {
  if (text == "max") return max();
  if (text.rfind("top-", 0) == 0 || text.rfind("top_k:", 0) == 0) {
    const std::string num = text.substr(text.find_first_of("-:") + 1);
    std::size_t used = 0;
    long k = 0;
    try {
      k = std::stol(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || k < 1) throw UsageError("bad top-k mask strategy '" + text + "'");
    return top_k(static_cast<std::size_t>(k));
  }
  if (text == "dynamic") return dynamic(1.02);
  if (text.rfind("dynamic:", 0) == 0) {
    const std::string num = text.substr(8);
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || !(t > 1.0)) {
      throw UsageError("dynamic mask threshold must be a number > 1, got '" + num + "'");
    }
    return dynamic(t);
  }
  throw UsageError("unknown mask strategy '" + text + "' (max, top-<k>, dynamic[:<threshold>])");
}

std::string MaskStrategy::name() const {
  switch (kind) {
    case MaskKind::kMax:
      return "max";
    case MaskKind::kTopK:
      return "top-" + std::to_string(k);
    case MaskKind::kDynamic: {
      char buf[64];
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, threshold);
      return "dynamic:" + std::string(buf, end);
    }
  }
  return "max";
}

OpponentFunction parse_opponent_function(const std::string& text) {
  if (text == "mask") return OpponentFunction::kMask;
  if (text == "one_minus" || text == "one-minus") return OpponentFunction::kOneMinus;
  if (text == "reciprocal") return OpponentFunction::kReciprocal;
  throw UsageError("unknown opponent function '" + text + "' (mask, one_minus, reciprocal)");
}

std::string opponent_function_name(OpponentFunction fn) {
  switch (fn) {
    case OpponentFunction::kMask:
      return "mask";
    case OpponentFunction::kOneMinus:
      return "one_minus";
    case OpponentFunction::kReciprocal:
      return "reciprocal";
  }
  return "mask";
}

void OpponentConfig::validate(const ModelConfig& model) const {
  if (selected_layer >= model.n_layers) {
    throw UsageError("selected_layer " + std::to_string(selected_layer) + " out of range for " +
                     std::to_string(model.n_layers) + " layers");
  }
  if (selected_head >= model.n_heads) {
    throw UsageError("selected_head " + std::to_string(selected_head) + " out of range for " +
                     std::to_string(model.n_heads) + " heads");
  }
  if (mask.kind == MaskKind::kTopK && mask.k < 1) throw UsageError("top-k needs k >= 1");
  if (mask.kind == MaskKind::kDynamic && !(mask.threshold > 1.0)) {
    throw UsageError("dynamic mask threshold must exceed 1");
  }
}

std::vector<ManifestEntry> branch_manifest(const ModelConfig& model, const OpponentConfig& opponent) {
  const std::size_t d = model.head_dim(), inner = opponent.branch_ffn(model);
  return {
      {"branch.ln1.gain", {d}},
      {"branch.ln1.bias", {d}},
      {"branch.ffn.w1", {d, inner}},
      {"branch.ffn.b1", {inner}},
      {"branch.ffn.w2", {inner, d}},
      {"branch.ffn.b2", {d}},
      {"branch.ln2.gain", {d}},
      {"branch.ln2.bias", {d}},
      {"branch.proj", {d, model.vocab_size}},
  };
}

void init_branch(ModelParams& params, const ModelConfig& model, const OpponentConfig& opponent,
                 std::uint64_t seed) {
  opponent.validate(model);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& entry : branch_manifest(model, opponent)) {
    Tensor t(entry.shape);
    auto values = t.mutable_values();
    if (entry.name.size() >= 5 && entry.name.compare(entry.name.size() - 5, 5, ".gain") == 0) {
      std::fill(values.begin(), values.end(), 1.0);
    } else if (entry.shape.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(entry.shape[0] + entry.shape[1]));
      std::uniform_real_distribution<double> uniform(-limit, limit);
      for (double& x : values) x = uniform(rng);
    }
    params.add(entry.name, t);
  }
}

bool has_branch(const ModelParams& params) { return params.contains("branch.proj"); }

std::vector<std::size_t> opponent_positions(std::span<const double> alpha_c, const Mask& padding,
                                            const MaskStrategy& strategy) {
  if (!padding.empty() && padding.size() != alpha_c.size()) {
    throw ShapeError("opponent mask: padding of " + std::to_string(padding.size()) +
                     " entries for a row of " + std::to_string(alpha_c.size()));
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < alpha_c.size(); ++i) {
    if (padding.empty() || !padding[i]) order.push_back(i);
  }
  // Descending weight, lowest index first on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return alpha_c[a] > alpha_c[b]; });

  std::size_t count = 0;
  switch (strategy.kind) {
    case MaskKind::kMax:
      count = 1;
      break;
    case MaskKind::kTopK:
      count = strategy.k;
      break;
    case MaskKind::kDynamic:
      count = 1;
      while (count < order.size() &&
             alpha_c[order[count - 1]] / alpha_c[order[count]] < strategy.threshold) {
        ++count;
      }
      break;
  }
  if (count >= order.size()) {
    throw DegenerateError("opponent mask '" + strategy.name() + "' leaves no unmasked position among " +
                          std::to_string(order.size()) + " source tokens");
  }
  order.resize(count);
  return order;
}

Tensor opponent_mask(const Tensor& alpha_c, const MaskStrategy& strategy, const Mask* padding) {
  const Mask empty;
  const Mask& pad = padding ? *padding : empty;
  const std::size_t n = alpha_c.cols(), rows = alpha_c.rows();
  Mask mask(alpha_c.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i : opponent_positions(alpha_c.values().subspan(r * n, n), pad, strategy)) {
      mask[r * n + i] = 1;
    }
  }
  return masked_fill(alpha_c, mask, kNegInf);
}

Tensor opponent_weights(const Tensor& masked_alpha, const Mask* padding) {
  if (padding == nullptr) return softmax(masked_alpha);
  const std::size_t n = masked_alpha.cols();
  if (padding->size() != n) throw ShapeError("opponent_weights: padding width mismatch");
  Mask full(masked_alpha.size());
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = (*padding)[i % n];
  return softmax(masked_alpha, &full);
}

Tensor opponent_attention(const Tensor& alpha_o, const Tensor& v) {
  if (alpha_o.cols() != v.rows()) {
    throw ShapeError("opponent attention: weights over " + std::to_string(alpha_o.cols()) +
                     " positions, values " + shape_string(v.shape()));
  }
  if (alpha_o.rank() == 1) return reshape(matmul(reshape(alpha_o, {1, alpha_o.size()}), v), {v.cols()});
  return matmul(alpha_o, v);
}

Tensor alternative_opponent(const Tensor& alpha_c, OpponentFunction which, const Mask* padding) {
  Tensor pre;
  switch (which) {
    case OpponentFunction::kOneMinus:
      pre = affine(alpha_c, -1.0, 1.0);
      break;
    case OpponentFunction::kReciprocal:
      pre = reciprocal_clamped(alpha_c, kReciprocalFloor);
      break;
    case OpponentFunction::kMask:
      throw UsageError("alternative_opponent handles one_minus and reciprocal only");
  }
  return opponent_weights(pre, padding);
}

Tensor opponent_log_probs(const Tensor& attention_o, const ModelParams& params,
                          const ForwardOptions& options, double dropout_rate) {
  Tensor z1 = layer_norm(attention_o, params.at("branch.ln1.gain"), params.at("branch.ln1.bias"));
  Tensor h = relu(add_row(matmul(z1, params.at("branch.ffn.w1")), params.at("branch.ffn.b1")));
  Tensor z2 = add_row(matmul(h, params.at("branch.ffn.w2")), params.at("branch.ffn.b2"));
  if (options.training) z2 = dropout(z2, dropout_rate, *options.rng);
  Tensor z3 = layer_norm(add(z1, z2), params.at("branch.ln2.gain"), params.at("branch.ln2.bias"));
  return log_softmin(matmul(z3, params.at("branch.proj")));
}

OpponentSource select_opponent_source(const AttentionRecord& record, const OpponentConfig& opponent) {
  if (opponent.selected_layer >= record.n_layers || opponent.selected_head >= record.n_heads) {
    throw UsageError("opponent head (" + std::to_string(opponent.selected_layer) + ", " +
                     std::to_string(opponent.selected_head) + ") not in attention record");
  }
  if (!opponent.average_heads) {
    return {record.weight(opponent.selected_layer, opponent.selected_head),
            record.value(opponent.selected_layer, opponent.selected_head)};
  }
  std::vector<Tensor> ws, vs;
  for (std::size_t h = 0; h < record.n_heads; ++h) {
    ws.push_back(record.weight(opponent.selected_layer, h));
    vs.push_back(record.value(opponent.selected_layer, h));
  }
  return {mean_of(ws), mean_of(vs)};
}

OpponentOutput opponent_forward(const ModelParams& params, const ModelConfig& model,
                                const OpponentConfig& opponent, const AttentionRecord& record,
                                const Mask& source_padding, const ForwardOptions& options) {
  OpponentSource source = select_opponent_source(record, opponent);
  Tensor alpha_c = opponent.detach_opponent_input ? source.alpha_c.detach() : source.alpha_c;
  const std::size_t rows = alpha_c.rows(), n = alpha_c.cols();
  if (source_padding.size() != n) throw ShapeError("opponent: padding width mismatch");

  OpponentOutput out;
  out.degenerate.assign(rows, 0);
  const bool single = count_valid(source_padding, n) < 2;

  Mask hidden(rows * n, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) hidden[r * n + c] = source_padding[c];
    if (single) {
      out.degenerate[r] = 1;
      continue;
    }
    if (opponent.function != OpponentFunction::kMask) continue;
    try {
      for (std::size_t c : opponent_positions(alpha_c.values().subspan(r * n, n), source_padding,
                                              opponent.mask)) {
        hidden[r * n + c] = 1;
      }
    } catch (const DegenerateError&) {
      out.degenerate[r] = 1;
    }
  }

  Tensor pre;
  switch (opponent.function) {
    case OpponentFunction::kMask:
      pre = alpha_c;
      break;
    case OpponentFunction::kOneMinus:
      pre = affine(alpha_c, -1.0, 1.0);
      break;
    case OpponentFunction::kReciprocal:
      pre = reciprocal_clamped(alpha_c, kReciprocalFloor);
      break;
  }
  out.alpha_o = softmax(pre, &hidden);
  Tensor attention_o = matmul(out.alpha_o, source.values);
  out.log_probs = opponent_log_probs(attention_o, params, options, model.dropout);
  return out;
}

}  // namespace contrast
