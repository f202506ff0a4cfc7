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

#include "contrast/model.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

constexpr const char* kCheckpointMagic = "contrast-checkpoint v1";

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw DataError("checkpoint: bad number '" + text + "' for " + what);
  return v;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw DataError("checkpoint: bad integer '" + text + "' for " + what);
  return static_cast<std::size_t>(v);
}

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

Model make_baseline(const ModelConfig& config, std::uint64_t seed) {
  return Model{config, std::nullopt, init_transformer(config, seed)};
}

Model make_contrastive(const ModelConfig& config, const OpponentConfig& opponent, std::uint64_t seed) {
  return attach_branch(make_baseline(config, seed), opponent, seed);
}

Model attach_branch(const Model& baseline, const OpponentConfig& opponent, std::uint64_t seed) {
  Model out = strip_branch(baseline);
  opponent.validate(out.config);
  init_branch(out.params, out.config, opponent, seed);
  out.opponent = opponent;
  out.opponent->d_branch_ffn = opponent.branch_ffn(out.config);
  return out;
}

Model strip_branch(const Model& model) {
  Model out{model.config, std::nullopt, {}};
  for (const auto& name : model.params.names()) {
    if (name.rfind("branch.", 0) == 0) continue;
    Tensor copy = model.params.at(name).clone();
    out.params.add(name, copy);
  }
  return out;
}

std::vector<TokenId> decoder_input_for(std::span<const TokenId> target) {
  std::vector<TokenId> out{kBosId};
  out.insert(out.end(), target.begin(), target.end());
  return out;
}

std::vector<TokenId> gold_output_for(std::span<const TokenId> target) {
  std::vector<TokenId> out(target.begin(), target.end());
  out.push_back(kEosId);
  return out;
}

SequenceForward forward_sequence(const Model& model, std::span<const TokenId> source,
                                 std::span<const TokenId> decoder_input, bool with_opponent,
                                 const ForwardOptions& options, const ForwardOptions& branch_options) {
  SequenceForward out;
  out.encoded = encode(model.params, model.config, source, options);
  out.decoded = decode_forward(model.params, model.config, out.encoded, decoder_input, options);
  out.log_pc = conventional_log_probs(out.decoded.logits);
  if (with_opponent) {
    if (!model.opponent) throw UsageError("model has no opponent branch");
    out.opponent = opponent_forward(model.params, model.config, *model.opponent, out.decoded.record,
                                    out.encoded.padding, branch_options);
  }
  return out;
}

std::string serialize_checkpoint(const Model& model) {
  std::ostringstream os;
  const auto& c = model.config;
  os << kCheckpointMagic << '\n';
  os << "model.n_layers " << c.n_layers << '\n';
  os << "model.d_model " << c.d_model << '\n';
  os << "model.n_heads " << c.n_heads << '\n';
  os << "model.d_ffn " << c.d_ffn << '\n';
  os << "model.vocab_size " << c.vocab_size << '\n';
  os << "model.dropout " << hexfloat(c.dropout) << '\n';
  os << "model.max_seq_len " << c.max_seq_len << '\n';
  os << "model.share_embeddings " << (c.share_embeddings ? 1 : 0) << '\n';
  os << "opponent.enabled " << (model.opponent ? 1 : 0) << '\n';
  if (model.opponent) {
    const auto& o = *model.opponent;
    os << "opponent.selected_layer " << o.selected_layer << '\n';
    os << "opponent.selected_head " << o.selected_head << '\n';
    os << "opponent.mask_strategy " << o.mask.name() << '\n';
    os << "opponent.function " << opponent_function_name(o.function) << '\n';
    os << "opponent.average_heads " << (o.average_heads ? 1 : 0) << '\n';
    os << "opponent.d_branch_ffn " << o.branch_ffn(c) << '\n';
    os << "opponent.detach_opponent_input " << (o.detach_opponent_input ? 1 : 0) << '\n';
  }
  os << "tensors " << model.params.size() << '\n';
  for (const auto& name : model.params.names()) {
    const Tensor& t = model.params.at(name);
    os << "tensor " << name << ' ' << t.rank();
    for (auto d : t.shape()) os << ' ' << d;
    os << '\n';
    bool first = true;
    for (double v : t.values()) {
      if (!first) os << ' ';
      os << hexfloat(v);
      first = false;
    }
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

Model parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw DataError("not a checkpoint (missing '" + std::string(kCheckpointMagic) + "' header)");
  }
  std::map<std::string, std::string> kv;
  std::size_t n_tensors = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key == "tensors") {
      n_tensors = parse_size(value, key);
      break;
    }
    kv[key] = value;
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("checkpoint: missing record " + key);
    return it->second;
  };

  Model model;
  auto& c = model.config;
  c.n_layers = parse_size(get("model.n_layers"), "model.n_layers");
  c.d_model = parse_size(get("model.d_model"), "model.d_model");
  c.n_heads = parse_size(get("model.n_heads"), "model.n_heads");
  c.d_ffn = parse_size(get("model.d_ffn"), "model.d_ffn");
  c.vocab_size = parse_size(get("model.vocab_size"), "model.vocab_size");
  c.dropout = parse_double(get("model.dropout"), "model.dropout");
  c.max_seq_len = parse_size(get("model.max_seq_len"), "model.max_seq_len");
  c.share_embeddings = get("model.share_embeddings") == "1";
  c.validate();
  if (get("opponent.enabled") == "1") {
    OpponentConfig o;
    o.selected_layer = parse_size(get("opponent.selected_layer"), "opponent.selected_layer");
    o.selected_head = parse_size(get("opponent.selected_head"), "opponent.selected_head");
    o.mask = MaskStrategy::parse(get("opponent.mask_strategy"));
    o.function = parse_opponent_function(get("opponent.function"));
    o.average_heads = get("opponent.average_heads") == "1";
    o.d_branch_ffn = parse_size(get("opponent.d_branch_ffn"), "opponent.d_branch_ffn");
    o.detach_opponent_input = get("opponent.detach_opponent_input") == "1";
    o.validate(c);
    model.opponent = o;
  }

  for (std::size_t i = 0; i < n_tensors; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint truncated before tensor " + std::to_string(i));
    std::istringstream hs(line);
    std::string tag, name;
    std::size_t rank = 0;
    hs >> tag >> name >> rank;
    if (tag != "tensor" || name.empty() || rank == 0) throw DataError("checkpoint: bad tensor header '" + line + "'");
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(hs >> d) || d == 0) throw DataError("checkpoint: bad shape for " + name);
    }
    if (!std::getline(in, line)) throw DataError("checkpoint: missing values for " + name);
    std::vector<double> values;
    values.reserve(shape_size(shape));
    const char* p = line.c_str();
    while (*p) {
      while (*p == ' ') ++p;
      if (!*p) break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw DataError("checkpoint: bad value in " + name);
      values.push_back(v);
      p = end;
    }
    if (values.size() != shape_size(shape)) {
      throw DataError("checkpoint: tensor " + name + " holds " + std::to_string(values.size()) +
                      " values for shape " + shape_string(shape));
    }
    model.params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!std::getline(in, line) || line != "end") throw DataError("checkpoint: missing end marker");

  check_transformer_params(model.params, model.config);
  if (model.opponent) {
    std::size_t branch = 0;
    for (const auto& e : branch_manifest(model.config, *model.opponent)) {
      if (model.params.at(e.name).shape() != e.shape) throw ShapeError("checkpoint: bad shape for " + e.name);
      ++branch;
    }
    if (branch + transformer_manifest(model.config).size() != model.params.size()) {
      throw ShapeError("checkpoint: unexpected extra tensors");
    }
  } else if (has_branch(model.params)) {
    throw ShapeError("checkpoint: branch tensors without an opponent configuration");
  }
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(model);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

std::uint64_t params_hash(const ModelParams& params, bool include_branch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& name : params.names()) {
    if (!include_branch && name.rfind("branch.", 0) == 0) continue;
    fnv_bytes(h, name.data(), name.size());
    const Tensor& t = params.at(name);
    for (auto d : t.shape()) {
      const std::uint64_t d64 = d;
      fnv_bytes(h, &d64, sizeof d64);
    }
    for (double v : t.values()) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      fnv_bytes(h, &bits, sizeof bits);
    }
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

}  // namespace contrast
