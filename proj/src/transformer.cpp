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

#include "contrast/transformer.hpp"

#include <cmath>
#include <limits>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

void push_attention(std::vector<ManifestEntry>& out, const std::string& prefix, std::size_t d) {
  for (const char* p : {"q", "k", "v", "o"}) {
    out.push_back({prefix + ".w" + p, {d, d}});
    out.push_back({prefix + ".b" + p, {d}});
  }
}

void push_norm(std::vector<ManifestEntry>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gain", {d}});
  out.push_back({prefix + ".bias", {d}});
}

void push_ffn(std::vector<ManifestEntry>& out, const std::string& prefix, std::size_t d,
              std::size_t inner) {
  out.push_back({prefix + ".w1", {d, inner}});
  out.push_back({prefix + ".b1", {inner}});
  out.push_back({prefix + ".w2", {inner, d}});
  out.push_back({prefix + ".b2", {d}});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Tensor linear(const ModelParams& params, const std::string& w, const std::string& b,
              const Tensor& x) {
  return add_row(matmul(x, params.at(w)), params.at(b));
}

Tensor feed_forward(const ModelParams& params, const std::string& prefix, const Tensor& x,
                    const ForwardOptions& options, double rate) {
  Tensor h = relu(linear(params, prefix + ".w1", prefix + ".b1", x));
  if (options.training) h = dropout(h, rate, *options.rng);
  return linear(params, prefix + ".w2", prefix + ".b2", h);
}

// LayerNorm(x + Dropout(sublayer)).
Tensor residual_norm(const ModelParams& params, const std::string& norm, const Tensor& x,
                     Tensor sublayer, const ForwardOptions& options, double rate) {
  if (options.training) sublayer = dropout(sublayer, rate, *options.rng);
  return layer_norm(add(x, sublayer), params.at(norm + ".gain"), params.at(norm + ".bias"));
}

Tensor embed(const ModelParams& params, const ModelConfig& config, const std::string& table,
             std::span<const TokenId> ids, const ForwardOptions& options) {
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw VocabError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(config.vocab_size));
    }
  }
  if (ids.size() > config.max_seq_len) {
    throw LengthError("sequence of " + std::to_string(ids.size()) + " tokens exceeds max_seq_len " +
                      std::to_string(config.max_seq_len));
  }
  if (ids.empty()) throw LengthError("empty token sequence");
  Tensor x = scale(embedding(params.at(table), ids), std::sqrt(static_cast<double>(config.d_model)));
  x = add(x, sinusoidal_positions(ids.size(), config.d_model));
  if (options.training) x = dropout(x, config.dropout, *options.rng);
  return x;
}

std::string layer_name(const char* side, std::size_t i) {
  return std::string(side) + ".layer" + std::to_string(i);
}

}  // namespace

void ModelConfig::validate() const {
  if (n_layers == 0 || d_model == 0 || n_heads == 0 || d_ffn == 0 || max_seq_len == 0) {
    throw UsageError("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw UsageError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                     std::to_string(n_heads));
  }
  if (vocab_size <= kReservedTokens) {
    throw UsageError("vocab_size must exceed the " + std::to_string(kReservedTokens) +
                     " reserved tokens");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
}

void ModelParams::add(const std::string& name, Tensor tensor) {
  if (index_.count(name)) throw UsageError("duplicate parameter " + name);
  index_[name] = tensors_.size();
  order_.push_back(name);
  tensors_.push_back(std::move(tensor));
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("missing parameter " + name);
  return tensors_[it->second];
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("missing parameter " + name);
  return tensors_[it->second];
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ModelParams::set_requires_grad(bool on) {
  for (auto& t : tensors_) t.set_requires_grad(on);
}

ModelParams ModelParams::clone() const {
  ModelParams out;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    Tensor copy = tensors_[i].clone();
    copy.set_requires_grad(tensors_[i].requires_grad());
    out.add(order_[i], copy);
  }
  return out;
}

std::vector<ManifestEntry> transformer_manifest(const ModelConfig& config) {
  const std::size_t d = config.d_model, v = config.vocab_size;
  std::vector<ManifestEntry> out;
  if (config.share_embeddings) {
    out.push_back({"embed.shared", {v, d}});
  } else {
    out.push_back({"embed.source", {v, d}});
    out.push_back({"embed.target", {v, d}});
    out.push_back({"output.proj", {v, d}});
  }
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::string p = layer_name("encoder", i);
    push_attention(out, p + ".self_attn", d);
    push_norm(out, p + ".ln1", d);
    push_ffn(out, p + ".ffn", d, config.d_ffn);
    push_norm(out, p + ".ln2", d);
  }
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::string p = layer_name("decoder", i);
    push_attention(out, p + ".self_attn", d);
    push_norm(out, p + ".ln1", d);
    push_attention(out, p + ".cross_attn", d);
    push_norm(out, p + ".ln2", d);
    push_ffn(out, p + ".ffn", d, config.d_ffn);
    push_norm(out, p + ".ln3", d);
  }
  return out;
}

ModelParams init_transformer(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams params;
  for (const auto& entry : transformer_manifest(config)) {
    Tensor t(entry.shape);
    auto values = t.mutable_values();
    if (entry.name.rfind("embed.", 0) == 0 || entry.name == "output.proj") {
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.d_model)));
      for (double& x : values) x = normal(rng);
    } else if (ends_with(entry.name, ".gain")) {
      std::fill(values.begin(), values.end(), 1.0);
    } else if (entry.shape.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(entry.shape[0] + entry.shape[1]));
      std::uniform_real_distribution<double> uniform(-limit, limit);
      for (double& x : values) x = uniform(rng);
    }
    params.add(entry.name, t);
  }
  return params;
}

void check_transformer_params(const ModelParams& params, const ModelConfig& config) {
  const auto manifest = transformer_manifest(config);
  for (const auto& entry : manifest) {
    const Tensor& t = params.at(entry.name);
    if (t.shape() != entry.shape) {
      throw ShapeError("parameter " + entry.name + " has shape " + shape_string(t.shape()) +
                       ", expected " + shape_string(entry.shape));
    }
  }
  std::size_t transformer_tensors = 0;
  for (const auto& name : params.names()) {
    if (name.rfind("branch.", 0) != 0) ++transformer_tensors;
  }
  if (transformer_tensors != manifest.size()) {
    throw ShapeError("parameter set holds " + std::to_string(transformer_tensors) +
                     " transformer tensors, manifest lists " + std::to_string(manifest.size()));
  }
}

Tensor sinusoidal_positions(std::size_t length, std::size_t d_model) {
  Tensor pe({length, d_model});
  auto v = pe.mutable_values();
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      v[pos * d_model + i] = std::sin(angle);
      if (i + 1 < d_model) v[pos * d_model + i + 1] = std::cos(angle);
    }
  }
  return pe;
}

AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     const Mask* mask) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: query width " + std::to_string(q.cols()) + " vs key width " +
                     std::to_string(k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: " + std::to_string(k.rows()) + " keys but " +
                     std::to_string(v.rows()) + " values");
  }
  Tensor scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  if (mask != nullptr && mask->size() != scores.size()) {
    throw ShapeError("attention: mask of " + std::to_string(mask->size()) + " entries for scores " +
                     shape_string(scores.shape()));
  }
  Tensor weights = softmax(scores, mask);
  return {matmul(weights, v), weights};
}

HeadOutputs multi_head_attention(const ModelParams& params, const std::string& prefix,
                                 std::size_t n_heads, const Tensor& query_seq,
                                 const Tensor& key_seq, const Tensor& value_seq, const Mask* mask) {
  const std::size_t d = query_seq.cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw ShapeError("multi_head_attention: " + std::to_string(n_heads) + " heads do not divide " +
                     std::to_string(d));
  }
  const std::size_t dk = d / n_heads;
  Tensor q = linear(params, prefix + ".wq", prefix + ".bq", query_seq);
  Tensor k = linear(params, prefix + ".wk", prefix + ".bk", key_seq);
  Tensor v = linear(params, prefix + ".wv", prefix + ".bv", value_seq);

  HeadOutputs out;
  std::vector<Tensor> contexts;
  for (std::size_t h = 0; h < n_heads; ++h) {
    Tensor vh = slice_cols(v, h * dk, dk);
    auto r = scaled_dot_attention(slice_cols(q, h * dk, dk), slice_cols(k, h * dk, dk), vh, mask);
    contexts.push_back(r.context);
    out.weights.push_back(r.weights);
    out.values.push_back(vh);
  }
  Tensor joined = n_heads == 1 ? contexts.front() : concat_cols(contexts);
  out.output = linear(params, prefix + ".wo", prefix + ".bo", joined);
  return out;
}

Mask padding_mask(std::span<const TokenId> ids) {
  Mask m(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m[i] = ids[i] == kPadId;
  return m;
}

EncoderOutput encode(const ModelParams& params, const ModelConfig& config,
                     std::span<const TokenId> source_ids, const ForwardOptions& options) {
  const std::string table = config.share_embeddings ? "embed.shared" : "embed.source";
  Tensor x = embed(params, config, table, source_ids, options);
  const std::size_t len = source_ids.size();
  Mask pad = padding_mask(source_ids);
  bool all_pad = true;
  for (auto p : pad) all_pad = all_pad && p;
  if (all_pad) throw LengthError("source holds only padding");

  Mask self_mask(len * len);
  for (std::size_t r = 0; r < len; ++r) {
    for (std::size_t c = 0; c < len; ++c) self_mask[r * len + c] = pad[c];
  }
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::string p = layer_name("encoder", i);
    auto attn = multi_head_attention(params, p + ".self_attn", config.n_heads, x, x, x, &self_mask);
    x = residual_norm(params, p + ".ln1", x, attn.output, options, config.dropout);
    Tensor ff = feed_forward(params, p + ".ffn", x, options, config.dropout);
    x = residual_norm(params, p + ".ln2", x, ff, options, config.dropout);
  }
  return {x, pad};
}

DecoderOutput decode_forward(const ModelParams& params, const ModelConfig& config,
                             const EncoderOutput& encoded, std::span<const TokenId> decoder_input,
                             const ForwardOptions& options) {
  const std::string table = config.share_embeddings ? "embed.shared" : "embed.target";
  Tensor y = embed(params, config, table, decoder_input, options);
  const std::size_t tgt = decoder_input.size(), src = encoded.padding.size();

  Mask causal(tgt * tgt);
  const Mask tgt_pad = padding_mask(decoder_input);
  for (std::size_t r = 0; r < tgt; ++r) {
    for (std::size_t c = 0; c < tgt; ++c) causal[r * tgt + c] = c > r || (tgt_pad[c] && c != r);
  }
  Mask cross(tgt * src);
  for (std::size_t r = 0; r < tgt; ++r) {
    for (std::size_t c = 0; c < src; ++c) cross[r * src + c] = encoded.padding[c];
  }

  DecoderOutput out;
  out.record.n_layers = config.n_layers;
  out.record.n_heads = config.n_heads;
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::string p = layer_name("decoder", i);
    auto self = multi_head_attention(params, p + ".self_attn", config.n_heads, y, y, y, &causal);
    y = residual_norm(params, p + ".ln1", y, self.output, options, config.dropout);
    auto ed = multi_head_attention(params, p + ".cross_attn", config.n_heads, y, encoded.states,
                                   encoded.states, &cross);
    y = residual_norm(params, p + ".ln2", y, ed.output, options, config.dropout);
    for (auto& w : ed.weights) out.record.weights.push_back(w);
    for (auto& v : ed.values) out.record.values.push_back(v);
    Tensor ff = feed_forward(params, p + ".ffn", y, options, config.dropout);
    y = residual_norm(params, p + ".ln3", y, ff, options, config.dropout);
  }
  const std::string proj = config.share_embeddings ? "embed.shared" : "output.proj";
  out.logits = matmul_nt(y, params.at(proj));
  return out;
}

Tensor conventional_log_probs(const Tensor& logits) { return log_softmax(logits); }

}  // namespace contrast
