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

#include "contrast/run.hpp"

#include <ctime>
#include <fstream>

#include "contrast/errors.hpp"

namespace contrast {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* key) {
  if (path.empty()) throw UsageError(std::string("config key '") + key + "' is required");
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string("config key '") + key + "': no such file " + path.string());
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Model initial_model(const RunConfig& config) {
  if (config.init_checkpoint.empty()) {
    return config.contrastive ? make_contrastive(config.model, config.opponent, config.init_seed)
                              : make_baseline(config.model, config.init_seed);
  }
  Model base = strip_branch(load_checkpoint(config.init_checkpoint));
  base.config.dropout = config.model.dropout;
  return config.contrastive ? attach_branch(base, config.opponent, config.init_seed) : base;
}

}  // namespace

RunConfig resolve_run_config(const RunConfig& config) {
  RunConfig out = config;
  out.manifest.clear();
  require_file(out.train_source, "train_source");
  require_file(out.train_target, "train_target");
  if (!out.vocab.empty()) require_file(out.vocab, "vocab");
  if (!out.head_selection_file.empty()) {
    require_file(out.head_selection_file, "head_selection_file");
    const HeadChoice choice = read_head_selection(out.head_selection_file);
    out.opponent.selected_layer = choice.layer;
    out.opponent.selected_head = choice.head;
    out.head_selection_file.clear();
  }
  if (!out.init_checkpoint.empty()) {
    require_file(out.init_checkpoint, "init_checkpoint");
    const double dropout = out.model.dropout;
    out.model = load_checkpoint(out.init_checkpoint).config;
    out.model.dropout = dropout;
  }
  if (!out.vocab.empty()) {
    const std::size_t entries = Vocab::load(out.vocab).size();
    if (entries != out.model.vocab_size) {
      throw UsageError("config key 'model.vocab_size': " + std::to_string(out.model.vocab_size) +
                       " does not match " + out.vocab.string() + " (" + std::to_string(entries) +
                       " ids including the 4 reserved)");
    }
  }
  out.output_dir = fs::absolute(out.output_dir).lexically_normal();
  validate_run_config(out);
  return out;
}

RunOutcome execute_run(const RunConfig& config, std::ostream* log) {
  RunOutcome outcome;
  outcome.resolved = resolve_run_config(config);
  const RunConfig& rc = outcome.resolved;

  const Vocab vocab = rc.vocab.empty() ? Vocab::synthetic(rc.model.vocab_size) : Vocab::load(rc.vocab);
  std::set<std::string> unknown;
  const ParallelText text = load_parallel(rc.train_source, rc.train_target, vocab, &unknown);
  if (log) {
    for (const auto& token : unknown) *log << "unknown token mapped to <unk>: " << token << '\n';
  }
  Corpus corpus;
  corpus.reserve(text.sources.size());
  for (std::size_t i = 0; i < text.sources.size(); ++i) corpus.push_back({text.sources[i], text.targets[i], {}});

  outcome.model = initial_model(rc);
  fs::create_directories(rc.output_dir);
  const std::string started = utc_now();
  std::string init_hash;
  if (!rc.init_checkpoint.empty()) init_hash = hash_hex(params_hash(load_checkpoint(rc.init_checkpoint).params));

  auto write_pair = [&](const Model& model, const fs::path& ckpt, const fs::path& manifest, std::size_t step) {
    save_checkpoint(model, ckpt);
    RunConfig snapshot = rc;
    snapshot.manifest["manifest.checkpoint"] = ckpt.filename().string();
    snapshot.manifest["manifest.checkpoint_hash"] = hash_hex(params_hash(model.params));
    snapshot.manifest["manifest.step"] = std::to_string(step);
    snapshot.manifest["manifest.started"] = started;
    snapshot.manifest["manifest.written"] = utc_now();
    if (!init_hash.empty()) snapshot.manifest["manifest.init_checkpoint_hash"] = init_hash;
    write_file_atomically(manifest, "# contrast run manifest; usable as a config\n" + format_run_config(snapshot));
  };

  std::ofstream metrics(rc.output_dir / "metrics.tsv", std::ios::trunc);
  if (!metrics) throw DataError("cannot write " + (rc.output_dir / "metrics.tsv").string());
  outcome.result = train(outcome.model, corpus, rc.train, nullptr, &metrics, [&](std::size_t step, const Model& m) {
    const std::string stem = "step-" + std::to_string(step);
    write_pair(m, rc.output_dir / (stem + ".ckpt"), rc.output_dir / (stem + ".cfg"), step);
    if (log) *log << "checkpoint " << stem << ".ckpt\n";
  });
  metrics.close();

  outcome.checkpoint = rc.output_dir / "model.ckpt";
  outcome.manifest = rc.output_dir / "manifest.cfg";
  const std::size_t steps = outcome.result.steps.empty() ? 0 : outcome.result.steps.back().step;
  write_pair(outcome.model, outcome.checkpoint, outcome.manifest, steps);
  outcome.checkpoint_hash = params_hash(outcome.model.params);
  if (log) {
    *log << "trained " << steps << " steps; final loss "
         << (outcome.result.steps.empty() ? 0.0 : outcome.result.steps.back().loss) << "; degenerate pairs "
         << outcome.result.degenerate_pairs << "; checkpoint " << outcome.checkpoint.string() << " hash "
         << hash_hex(outcome.checkpoint_hash) << '\n';
  }
  return outcome;
}

}  // namespace contrast
