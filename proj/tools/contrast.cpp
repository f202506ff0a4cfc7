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

// contrast: command-line front end. See docs/cli.md for the full reference.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "contrast/config.hpp"
#include "contrast/decoding.hpp"
#include "contrast/errors.hpp"
#include "contrast/evaluation.hpp"
#include "contrast/experiment.hpp"
#include "contrast/head_selection.hpp"
#include "contrast/heatmap.hpp"
#include "contrast/run.hpp"

namespace fs = std::filesystem;
using namespace contrast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void require_input(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + ": no such file " + path.string());
}

Model load_model(const fs::path& path) {
  require_input(path, "checkpoint");
  return load_checkpoint(path);
}

Vocab load_vocab(const std::string& path, const Model& model) {
  if (path.empty()) return Vocab::synthetic(model.config.vocab_size);
  require_input(path, "vocab");
  Vocab v = Vocab::load(path);
  if (v.size() != model.config.vocab_size) {
    throw UsageError("vocab " + path + " has " + std::to_string(v.size()) + " ids but the checkpoint expects " +
                     std::to_string(model.config.vocab_size));
  }
  return v;
}

std::vector<std::vector<TokenId>> encode_lines(const std::vector<std::string>& lines, const Vocab& vocab,
                                               const std::string& origin) {
  std::vector<std::vector<TokenId>> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto ids = vocab.encode(lines[i]);
    if (ids.empty()) throw DataError(origin + ":" + std::to_string(i + 1) + ": empty line");
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<std::string> labels(std::span<const TokenId> ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  require_input(a.config, "config");
  RunConfig config = load_run_config(a.config);
  for (const auto& o : a.overrides) apply_override(config, o);
  validate_run_config(config);
  const RunOutcome out = execute_run(config, a.quiet ? nullptr : &std::cerr);
  std::cout << "checkpoint\t" << out.checkpoint.string() << "\nmanifest\t" << out.manifest.string() << "\nhash\t"
            << hash_hex(out.checkpoint_hash) << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- decode

struct DecodeArgs {
  std::string checkpoint, input, output, vocab, mask_strategy, opponent_fn, dump_attention;
  std::size_t beam = 4;
  std::size_t max_len = 0;
  double lambda = 1.0;
  bool no_po = false;
  bool no_length_norm = false;
};

// Re-runs the decoder over the chosen output and writes every head's
// encoder-decoder attention, plus the opponent weights for contrastive models.
void dump_attention(const Model& model, const Vocab& vocab, std::span<const TokenId> src,
                    std::span<const TokenId> out, const fs::path& dir, std::size_t index) {
  NoGradScope no_grad;
  const auto fwd = forward_sequence(model, src, decoder_input_for(out), model.contrastive());
  const auto src_labels = labels(src, vocab);
  const auto tgt_labels = labels(gold_output_for(out), vocab);
  const std::string stem = "sentence-" + std::to_string(index);
  for (std::size_t l = 0; l < model.config.n_layers; ++l) {
    for (std::size_t h = 0; h < model.config.n_heads; ++h) {
      write_text(dir / (stem + ".layer-" + std::to_string(l) + ".head-" + std::to_string(h) + ".csv"),
                 attention_csv(fwd.decoded.record.weight(l, h), tgt_labels, src_labels));
    }
  }
  if (fwd.opponent) write_text(dir / (stem + ".opponent.csv"), attention_csv(fwd.opponent->alpha_o, tgt_labels, src_labels));
}

int cmd_decode(const DecodeArgs& a) {
  Model model = load_model(a.checkpoint);
  require_input(a.input, "input");
  const Vocab vocab = load_vocab(a.vocab, model);
  if (!a.mask_strategy.empty() || !a.opponent_fn.empty()) {
    if (!model.opponent) throw UsageError("--mask-strategy/--opponent-fn need a contrastive checkpoint");
    if (!a.mask_strategy.empty()) model.opponent->mask = MaskStrategy::parse(a.mask_strategy);
    if (!a.opponent_fn.empty()) model.opponent->function = parse_opponent_function(a.opponent_fn);
    model.opponent->validate(model.config);
  }
  if (a.lambda < 0.0) throw UsageError("--lambda must be >= 0");
  BeamOptions opts;
  opts.beam_size = a.beam;
  opts.max_len = a.max_len;
  opts.lambda = a.lambda;
  opts.use_po = !a.no_po && model.contrastive();
  opts.length_normalize = !a.no_length_norm;
  if (opts.beam_size == 0) throw UsageError("--beam must be positive");

  const auto sources = encode_lines(read_lines(a.input), vocab, a.input);
  if (!a.dump_attention.empty()) fs::create_directories(a.dump_attention);
  std::ostringstream os;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    const auto hyps = beam_search(model, src, opts);
    const auto best = hyps.front().output();
    os << vocab.decode(best) << '\n';
    if (!a.dump_attention.empty()) dump_attention(model, vocab, src, best, a.dump_attention, i + 1);
  }
  if (a.output.empty()) {
    std::cout << os.str();
  } else {
    write_text(a.output, os.str());
  }
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string candidates, references, mode = "f1";
  std::optional<std::size_t> byte_cap;
};

int cmd_eval(const EvalArgs& a) {
  require_input(a.candidates, "candidates");
  require_input(a.references, "references");
  RougeMode mode;
  if (a.mode == "f1") {
    mode = RougeMode::kF1;
  } else if (a.mode == "recall") {
    mode = RougeMode::kRecall;
  } else {
    throw UsageError("--mode must be f1 or recall");
  }
  const auto cand_lines = read_lines(a.candidates);
  const auto ref_lines = read_lines(a.references);
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  auto tokenize = [](const std::string& s) {
    Tokens t;
    std::istringstream is(s);
    for (std::string w; is >> w;) t.push_back(w);
    return t;
  };
  for (const auto& l : cand_lines) candidates.push_back(tokenize(l));
  for (const auto& l : ref_lines) {
    std::vector<Tokens> refs;
    std::size_t start = 0;
    while (true) {
      const auto tab = l.find('\t', start);
      refs.push_back(tokenize(l.substr(start, tab == std::string::npos ? std::string::npos : tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    references.push_back(std::move(refs));
  }
  std::cout << format_report(rouge_corpus(candidates, references, mode, a.byte_cap));
  return kExitOk;
}

// -------------------------------------------------------- inspect-heads

struct InspectArgs {
  std::string checkpoint, source, target, alignments, vocab, output;
  std::size_t sample = 50;
};

int cmd_inspect_heads(const InspectArgs& a) {
  const Model model = load_model(a.checkpoint);
  require_input(a.source, "source");
  require_input(a.target, "target");
  require_input(a.alignments, "alignments");
  const Vocab vocab = load_vocab(a.vocab, model);
  ParallelText text = load_parallel(a.source, a.target, vocab);
  std::vector<AlignmentSet> gold;
  try {
    gold = load_alignments(a.alignments, text);
  } catch (const DataError& e) {
    throw UsageError(std::string("alignments do not match the corpus: ") + e.what());
  }
  if (a.sample == 0) throw UsageError("--sample must be positive");
  const std::size_t n = std::min(a.sample, text.sources.size());
  text.sources.resize(n);
  text.targets.resize(n);
  gold.resize(n);
  const auto ranking = rank_heads(model, text.sources, text.targets, gold);
  const std::string table = format_head_ranking(ranking);
  std::cout << table;
  if (!a.output.empty()) {
    write_head_selection(a.output, {ranking.front().layer, ranking.front().head},
                         "selected by lowest mean AER over " + std::to_string(n) + " pairs\n" + table);
  }
  return kExitOk;
}

// ------------------------------------------------------ export-heatmaps

struct HeatmapArgs {
  std::string checkpoint, source, target, vocab, out_dir;
  std::size_t layer = 0, head = 0;
  bool average = false;
  std::size_t limit = 0;
};

int cmd_export_heatmaps(const HeatmapArgs& a) {
  const Model model = load_model(a.checkpoint);
  require_input(a.source, "source");
  require_input(a.target, "target");
  const Vocab vocab = load_vocab(a.vocab, model);
  if (a.layer >= model.config.n_layers) {
    throw UsageError("--layer " + std::to_string(a.layer) + " out of range (model has " +
                     std::to_string(model.config.n_layers) + " layers)");
  }
  if (!a.average && a.head >= model.config.n_heads) {
    throw UsageError("--head " + std::to_string(a.head) + " out of range (model has " +
                     std::to_string(model.config.n_heads) + " heads)");
  }
  const ParallelText text = load_parallel(a.source, a.target, vocab);
  fs::create_directories(a.out_dir);
  const std::size_t n = a.limit ? std::min(a.limit, text.sources.size()) : text.sources.size();
  NoGradScope no_grad;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& src = text.sources[i];
    const auto& tgt = text.targets[i];
    const auto fwd = forward_sequence(model, src, decoder_input_for(tgt), model.contrastive());
    Tensor weights;
    std::string what;
    if (a.average) {
      std::vector<Tensor> heads;
      for (std::size_t h = 0; h < model.config.n_heads; ++h) heads.push_back(fwd.decoded.record.weight(a.layer, h));
      weights = mean_of(heads);
      what = "layer " + std::to_string(a.layer) + ", mean of heads";
    } else {
      weights = fwd.decoded.record.weight(a.layer, a.head);
      what = "layer " + std::to_string(a.layer) + ", head " + std::to_string(a.head);
    }
    const auto src_labels = labels(src, vocab);
    const auto tgt_labels = labels(gold_output_for(tgt), vocab);
    const std::string stem = "sentence-" + std::to_string(i + 1);
    write_text(fs::path(a.out_dir) / (stem + ".csv"), attention_csv(weights, tgt_labels, src_labels));
    write_text(fs::path(a.out_dir) / (stem + ".svg"),
               attention_svg(weights, tgt_labels, src_labels, stem + ": conventional attention, " + what));
    if (fwd.opponent) {
      const auto& oc = *model.opponent;
      const std::string o_what = oc.average_heads ? "layer " + std::to_string(oc.selected_layer) + ", mean of heads"
                                                  : "layer " + std::to_string(oc.selected_layer) + ", head " +
                                                        std::to_string(oc.selected_head);
      write_text(fs::path(a.out_dir) / (stem + ".opponent.csv"),
                 attention_csv(fwd.opponent->alpha_o, tgt_labels, src_labels));
      write_text(fs::path(a.out_dir) / (stem + ".opponent.svg"),
                 attention_svg(fwd.opponent->alpha_o, tgt_labels, src_labels,
                               stem + ": opponent attention (" + oc.mask.name() + "), " + o_what));
    }
  }
  std::cout << "wrote " << n << " heatmap set(s) to " << a.out_dir << '\n';
  return kExitOk;
}

// ----------------------------------------------------------- gen-corpus

struct GenArgs {
  std::string task = "salient_extract", prefix;
  std::size_t pairs = 1000, vocab_size = 64, min_len = 6, max_len = 12;
  double salience = 0.5;
  std::uint64_t seed = 1;
};

int cmd_gen_corpus(const GenArgs& a) {
  SyntheticTaskSpec spec;
  if (a.task == "copy") {
    spec.task = SyntheticTask::kCopy;
  } else if (a.task == "salient_extract") {
    spec.task = SyntheticTask::kSalientExtract;
  } else {
    throw UsageError("--task must be copy or salient_extract");
  }
  spec.vocab_size = a.vocab_size;
  spec.min_source_length = a.min_len;
  spec.max_source_length = a.max_len;
  spec.salience_ratio = a.salience;
  spec.seed = a.seed;
  spec.validate();
  if (a.pairs == 0) throw UsageError("--pairs must be positive");
  const Corpus corpus = generate(spec, a.pairs);
  const Vocab vocab = Vocab::synthetic(a.vocab_size);
  const fs::path prefix(a.prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  write_corpus(prefix, corpus, vocab);
  vocab.save(prefix.string() + ".vocab");
  std::cout << "wrote " << corpus.size() << " pairs to " << prefix.string() << ".{src,tgt,align,vocab}\n";
  return kExitOk;
}

// ------------------------------------------------------- study / ablate

struct StudyArgs {
  std::size_t train_pairs = 5000, dev_pairs = 200, test_pairs = 500;
  std::size_t pretrain_epochs = 3, continue_epochs = 2;
  std::vector<double> lambdas{0.1, 0.3, 1.0, 3.0};
  std::uint64_t seed = 1;
  std::string output;
  bool quiet = false;
};

StudyConfig study_config(const StudyArgs& a) {
  StudyConfig c = StudyConfig::desk();
  c.train_pairs = a.train_pairs;
  c.dev_pairs = a.dev_pairs;
  c.test_pairs = a.test_pairs;
  c.pretrain_epochs = a.pretrain_epochs;
  c.continue_epochs = a.continue_epochs;
  c.lambda_grid = a.lambdas;
  c.init_seed = a.seed;
  c.train.seed = a.seed;
  c.continue_seed = a.seed + 1;
  c.validate();
  return c;
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
  } else {
    write_text(output, text);
    std::cout << "wrote " << output << '\n';
  }
}

int cmd_study(const StudyArgs& a) {
  const StudyConfig c = study_config(a);
  std::ostream* log = a.quiet ? nullptr : &std::cerr;
  const Pretrained p = pretrain_baseline(c, log);
  emit(format_study(run_directional_study(c, p, log)), a.output);
  return kExitOk;
}

int cmd_ablate(const StudyArgs& a) {
  const StudyConfig c = study_config(a);
  std::ostream* log = a.quiet ? nullptr : &std::cerr;
  const Pretrained p = pretrain_baseline(c, log);
  emit(format_ablation_table(run_ablation(c, p, a.lambdas.front(), log)), a.output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrast: seq2seq transformer with contrastive attention"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "contrast 1.0.0");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", train_args.config, "key = value config file")->required();
  train->add_option("--set", train_args.overrides, "override one config key (key=value); repeatable");
  train->add_flag("--quiet", train_args.quiet, "suppress progress on stderr");

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "beam-search summaries for source lines");
  decode->add_option("--checkpoint", dec.checkpoint, "model checkpoint")->required();
  decode->add_option("--input", dec.input, "source text, one sentence per line")->required();
  decode->add_option("--output", dec.output, "output file (default: stdout)");
  decode->add_option("--vocab", dec.vocab, "vocabulary file (default: synthetic ids)");
  decode->add_option("--beam", dec.beam, "beam size")->capture_default_str();
  decode->add_option("--max-len", dec.max_len, "maximum output length (0: source length + 10)");
  decode->add_option("--lambda", dec.lambda, "weight of log P_o in the beam score")->capture_default_str();
  decode->add_flag("--no-po", dec.no_po, "score with log P_c only");
  decode->add_option("--mask-strategy", dec.mask_strategy, "max | top-<k> | dynamic[:<ratio>]");
  decode->add_option("--opponent-fn", dec.opponent_fn, "mask | one_minus | reciprocal");
  decode->add_flag("--no-length-norm", dec.no_length_norm, "rank finished hypotheses by raw score");
  decode->add_option("--dump-attention", dec.dump_attention, "write per-sentence attention CSVs into this directory");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "ROUGE-1/2/L of candidates against references");
  eval->add_option("--candidates", ev.candidates, "one candidate per line")->required();
  eval->add_option("--references", ev.references, "one line per candidate; tab-separated references")
      ->required();
  eval->add_option("--mode", ev.mode, "f1 | recall")->capture_default_str();
  eval->add_option("--byte-cap", ev.byte_cap, "truncate candidates to this many bytes");

  InspectArgs ins;
  auto* inspect = app.add_subcommand("inspect-heads", "rank encoder-decoder heads by alignment error rate");
  inspect->add_option("--checkpoint", ins.checkpoint, "model checkpoint")->required();
  inspect->add_option("--source", ins.source, "source text")->required();
  inspect->add_option("--target", ins.target, "target text")->required();
  inspect->add_option("--alignments", ins.alignments, "gold alignments, one line per pair")->required();
  inspect->add_option("--vocab", ins.vocab, "vocabulary file (default: synthetic ids)");
  inspect->add_option("--sample", ins.sample, "number of leading pairs to score")->capture_default_str();
  inspect->add_option("--output", ins.output, "write the selected head as a config fragment");

  HeatmapArgs hm;
  auto* heat = app.add_subcommand("export-heatmaps", "write attention matrices as CSV and SVG");
  heat->add_option("--checkpoint", hm.checkpoint, "model checkpoint")->required();
  heat->add_option("--source", hm.source, "source text")->required();
  heat->add_option("--target", hm.target, "target text")->required();
  heat->add_option("--vocab", hm.vocab, "vocabulary file (default: synthetic ids)");
  heat->add_option("--out-dir", hm.out_dir, "output directory")->required();
  heat->add_option("--layer", hm.layer, "decoder layer")->capture_default_str();
  auto* head_opt = heat->add_option("--head", hm.head, "head within the layer")->capture_default_str();
  heat->add_flag("--average", hm.average, "average over the heads of the layer")->excludes(head_opt);
  heat->add_option("--limit", hm.limit, "export only the first N pairs (0: all)");

  GenArgs gen;
  auto* gc = app.add_subcommand("gen-corpus", "generate a synthetic corpus with gold alignments");
  gc->add_option("--task", gen.task, "copy | salient_extract")->capture_default_str();
  gc->add_option("--pairs", gen.pairs, "number of pairs")->capture_default_str();
  gc->add_option("--vocab-size", gen.vocab_size, "ids including the 4 reserved")->capture_default_str();
  gc->add_option("--min-len", gen.min_len, "minimum source length")->capture_default_str();
  gc->add_option("--max-len", gen.max_len, "maximum source length")->capture_default_str();
  gc->add_option("--salience", gen.salience, "fraction of salient source tokens")->capture_default_str();
  gc->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gc->add_option("--prefix", gen.prefix, "writes <prefix>.src/.tgt/.align/.vocab")->required();

  StudyArgs st;
  double ablate_lambda = 1.0;
  auto add_study_options = [&](CLI::App* cmd, bool sweep) {
    cmd->add_option("--train-pairs", st.train_pairs, "training pairs")->capture_default_str();
    cmd->add_option("--test-pairs", st.test_pairs, "test pairs")->capture_default_str();
    cmd->add_option("--pretrain-epochs", st.pretrain_epochs, "baseline epochs before branching")
        ->capture_default_str();
    cmd->add_option("--continue-epochs", st.continue_epochs, "epochs after branching")->capture_default_str();
    cmd->add_option("--seed", st.seed, "initialization and shuffling seed")->capture_default_str();
    cmd->add_option("--output", st.output, "write the table here (default: stdout)");
    cmd->add_flag("--quiet", st.quiet, "suppress progress on stderr");
    if (sweep) {
      cmd->add_option("--dev-pairs", st.dev_pairs, "dev pairs for the lambda sweep")->capture_default_str();
      cmd->add_option("--lambda", st.lambdas, "lambda grid")->capture_default_str();
    } else {
      cmd->add_option("--lambda", ablate_lambda, "lambda")->capture_default_str();
    }
  };
  auto* study = app.add_subcommand("study", "baseline vs contrastive on synthetic salient_extract data");
  add_study_options(study, true);
  auto* ablate = app.add_subcommand("ablate", "mask-strategy and head-choice ablation table");
  add_study_options(ablate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*decode) return cmd_decode(dec);
    if (*eval) return cmd_eval(ev);
    if (*inspect) return cmd_inspect_heads(ins);
    if (*heat) return cmd_export_heatmaps(hm);
    if (*gc) return cmd_gen_corpus(gen);
    if (*study) return cmd_study(st);
    if (*ablate) {
      st.lambdas = {ablate_lambda};
      return cmd_ablate(st);
    }
  } catch (const UsageError& e) {
    std::cerr << "contrast: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "contrast: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
