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

#include "contrast/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "contrast/errors.hpp"

namespace contrast {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string key_error(const std::string& key, const std::string& value, const std::string& expected) {
  return "config key '" + key + "': cannot use '" + value + "' (" + expected + ")";
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw UsageError(key_error(key, v, "expected a non-negative integer"));
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw UsageError(key_error(key, v, "expected a number"));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(key_error(key, v, "expected true or false"));
}

std::string from_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string from_bool(bool v) { return v ? "true" : "false"; }

std::string objective_name(Objective o) {
  return o == Objective::kSoftminJoint ? "softmin_joint" : "negated_softmax";
}

fs::path resolve(const fs::path& base, const std::string& v) {
  if (v.empty()) return {};
  const fs::path p(v);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_FIELD(name, member)                                                                        \
  Field {                                                                                               \
    name, [](RunConfig& c, const std::string& v, const fs::path&) { c.member = to_size(name, v); },    \
        [](const RunConfig& c) { return std::to_string(c.member); }                                     \
  }
#define DOUBLE_FIELD(name, member)                                                                      \
  Field {                                                                                               \
    name, [](RunConfig& c, const std::string& v, const fs::path&) { c.member = to_double(name, v); },  \
        [](const RunConfig& c) { return from_double(c.member); }                                        \
  }
#define BOOL_FIELD(name, member)                                                                        \
  Field {                                                                                               \
    name, [](RunConfig& c, const std::string& v, const fs::path&) { c.member = to_bool(name, v); },    \
        [](const RunConfig& c) { return from_bool(c.member); }                                          \
  }
#define PATH_FIELD(name, member)                                                                        \
  Field {                                                                                               \
    name, [](RunConfig& c, const std::string& v, const fs::path& base) { c.member = resolve(base, v); }, \
        [](const RunConfig& c) { return c.member.string(); }                                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SIZE_FIELD("model.n_layers", model.n_layers),
      SIZE_FIELD("model.d_model", model.d_model),
      SIZE_FIELD("model.n_heads", model.n_heads),
      SIZE_FIELD("model.d_ffn", model.d_ffn),
      SIZE_FIELD("model.vocab_size", model.vocab_size),
      DOUBLE_FIELD("model.dropout", model.dropout),
      SIZE_FIELD("model.max_seq_len", model.max_seq_len),
      BOOL_FIELD("model.share_embeddings", model.share_embeddings),
      BOOL_FIELD("contrastive", contrastive),
      SIZE_FIELD("opponent.layer", opponent.selected_layer),
      SIZE_FIELD("opponent.head", opponent.selected_head),
      Field{"opponent.mask_strategy",
            [](RunConfig& c, const std::string& v, const fs::path&) {
              try {
                c.opponent.mask = MaskStrategy::parse(v);
              } catch (const UsageError& e) {
                throw UsageError("config key 'opponent.mask_strategy': " + std::string(e.what()));
              }
            },
            [](const RunConfig& c) { return c.opponent.mask.name(); }},
      Field{"opponent.function",
            [](RunConfig& c, const std::string& v, const fs::path&) {
              try {
                c.opponent.function = parse_opponent_function(v);
              } catch (const UsageError& e) {
                throw UsageError("config key 'opponent.function': " + std::string(e.what()));
              }
            },
            [](const RunConfig& c) { return opponent_function_name(c.opponent.function); }},
      BOOL_FIELD("opponent.average_heads", opponent.average_heads),
      SIZE_FIELD("opponent.d_branch_ffn", opponent.d_branch_ffn),
      BOOL_FIELD("opponent.detach_input", opponent.detach_opponent_input),
      Field{"objective",
            [](RunConfig& c, const std::string& v, const fs::path&) {
              try {
                c.train.objective = parse_objective(v);
              } catch (const UsageError& e) {
                throw UsageError("config key 'objective': " + std::string(e.what()));
              }
            },
            [](const RunConfig& c) { return objective_name(c.train.objective); }},
      DOUBLE_FIELD("lambda", train.lambda),
      DOUBLE_FIELD("base_lr", train.base_lr),
      DOUBLE_FIELD("adam_beta1", train.adam_beta1),
      DOUBLE_FIELD("adam_beta2", train.adam_beta2),
      DOUBLE_FIELD("adam_epsilon", train.adam_epsilon),
      SIZE_FIELD("warmup_steps", train.warmup_steps),
      SIZE_FIELD("batch_size", train.batch_size),
      SIZE_FIELD("max_epochs", train.max_epochs),
      SIZE_FIELD("max_steps", train.max_steps),
      SIZE_FIELD("seed", train.seed),
      SIZE_FIELD("checkpoint_every", train.checkpoint_every),
      DOUBLE_FIELD("clip_norm", train.clip_norm),
      PATH_FIELD("train_source", train_source),
      PATH_FIELD("train_target", train_target),
      PATH_FIELD("vocab", vocab),
      PATH_FIELD("init_checkpoint", init_checkpoint),
      PATH_FIELD("head_selection_file", head_selection_file),
      PATH_FIELD("output_dir", output_dir),
      SIZE_FIELD("init_seed", init_seed),
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef PATH_FIELD

void assign(RunConfig& config, const std::string& key, const std::string& value, const fs::path& base) {
  if (key.rfind("manifest.", 0) == 0) {
    config.manifest[key] = value;
    return;
  }
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value, base);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value', got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw UsageError(where + ": missing key before '='");
  return {key, trim(line.substr(eq + 1))};
}

void parse_into(RunConfig& config, const std::string& text, const fs::path& base, const std::string& origin,
                const std::function<bool(const std::string&)>& allowed = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto [key, value] = split_assignment(line, origin + ":" + std::to_string(number));
    if (allowed && !allowed(key)) {
      throw UsageError(origin + ":" + std::to_string(number) + ": key '" + key + "' is not allowed here");
    }
    assign(config, key, value, base);
  }
}

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate_run_config(const RunConfig& config) {
  config.train.validate();
  config.model.validate();
  if (config.contrastive) config.opponent.validate(config.model);
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  RunConfig config;
  parse_into(config, text, base_dir, "config");
  validate_run_config(config);
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  RunConfig config;
  const fs::path base = fs::absolute(path).parent_path();
  parse_into(config, read_text(path, "config file"), base, path.string());
  validate_run_config(config);
  return config;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto [key, value] = split_assignment(assignment, "--set");
  assign(config, key, value, fs::current_path());
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream os;
  for (const auto& f : fields()) {
    const std::string value = f.get(config);
    os << f.key << " = " << value << '\n';
  }
  for (const auto& [k, v] : config.manifest) os << k << " = " << v << '\n';
  return os.str();
}

void write_head_selection(const fs::path& path, const HeadChoice& choice, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << '\n';
  }
  os << "opponent.layer = " << choice.layer << '\n';
  os << "opponent.head = " << choice.head << '\n';
  write_file_atomically(path, os.str());
}

HeadChoice read_head_selection(const fs::path& path) {
  RunConfig scratch;
  scratch.opponent.selected_layer = static_cast<std::size_t>(-1);
  scratch.opponent.selected_head = static_cast<std::size_t>(-1);
  parse_into(scratch, read_text(path, "head-selection file"), fs::path(), path.string(),
             [](const std::string& key) { return key == "opponent.layer" || key == "opponent.head"; });
  if (scratch.opponent.selected_layer == static_cast<std::size_t>(-1) ||
      scratch.opponent.selected_head == static_cast<std::size_t>(-1)) {
    throw UsageError(path.string() + ": head-selection file needs opponent.layer and opponent.head");
  }
  return {scratch.opponent.selected_layer, scratch.opponent.selected_head};
}

void write_file_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace contrast
