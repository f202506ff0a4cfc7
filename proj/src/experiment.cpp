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

#include "contrast/experiment.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

Tokens as_tokens(std::span<const TokenId> ids) {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(std::to_string(id));
  return out;
}

Corpus make_split(const StudyConfig& config, std::uint64_t seed, std::size_t n) {
  SyntheticTaskSpec spec = config.task;
  spec.seed = seed;
  return generate(spec, n);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

StudyConfig StudyConfig::desk() {
  StudyConfig c;
  c.task.task = SyntheticTask::kSalientExtract;
  c.task.vocab_size = 64;
  c.model.vocab_size = 64;
  c.model.dropout = 0.1;
  c.train.batch_size = 32;
  c.train.warmup_steps = 400;
  c.beam.beam_size = 4;
  return c;
}

void StudyConfig::validate() const {
  task.validate();
  model.validate();
  train.validate();
  if (task.vocab_size != model.vocab_size) throw UsageError("study: task and model vocabulary sizes differ");
  if (train_pairs == 0 || test_pairs == 0) throw UsageError("study: train and test sets must be nonempty");
  if (pretrain_epochs == 0) throw UsageError("study: pretrain_epochs must be positive");
  if (lambda_grid.empty()) throw UsageError("study: lambda grid is empty");
  if (lambda_grid.size() > 1 && dev_pairs == 0) throw UsageError("study: a lambda sweep needs dev pairs");
  if (head_sample == 0) throw UsageError("study: head_sample must be positive");
}

Pretrained pretrain_baseline(const StudyConfig& config, std::ostream* log) {
  config.validate();
  Pretrained out;
  out.train = make_split(config, config.train_seed, config.train_pairs);
  if (config.dev_pairs) out.dev = make_split(config, config.dev_seed, config.dev_pairs);
  out.test = make_split(config, config.test_seed, config.test_pairs);

  const auto t0 = std::chrono::steady_clock::now();
  out.baseline = make_baseline(config.model, config.init_seed);
  TrainConfig tc = config.train;
  tc.lambda = 0.0;
  tc.max_epochs = config.pretrain_epochs;
  const auto result = train(out.baseline, out.train, tc, &out.optimizer);
  if (log) {
    *log << "pretrain: " << result.steps.size() << " steps, epoch losses";
    for (double l : result.epoch_mean_loss) *log << ' ' << l;
    *log << ", " << std::fixed << std::setprecision(1) << seconds_since(t0) << "s\n"
         << std::defaultfloat << std::setprecision(6);
  }

  const std::size_t n = std::min(config.head_sample, out.train.size());
  std::vector<std::vector<TokenId>> sources, targets;
  std::vector<AlignmentSet> gold;
  for (std::size_t i = 0; i < n; ++i) {
    sources.push_back(out.train[i].source);
    targets.push_back(out.train[i].target);
    gold.push_back(out.train[i].alignment);
  }
  out.ranking = rank_heads(out.baseline, sources, targets, gold);
  out.synchronous = {out.ranking.front().layer, out.ranking.front().head};
  out.non_synchronous = {out.ranking.back().layer, out.ranking.back().head};
  if (log) *log << format_head_ranking(out.ranking);
  return out;
}

Model continue_training(const StudyConfig& config, const Pretrained& from, const OpponentConfig* opponent,
                        double lambda, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  Model model = opponent ? attach_branch(from.baseline, *opponent, config.init_seed) : from.baseline.clone();
  if (config.continue_epochs == 0) return model;
  AdamState state = from.optimizer;
  TrainConfig tc = config.train;
  tc.lambda = opponent ? lambda : 0.0;
  tc.max_epochs = config.continue_epochs;
  tc.seed = config.continue_seed;
  const auto result = train(model, from.train, tc, &state);
  if (log) {
    *log << "continue (" << (opponent ? "contrastive, lambda " + std::to_string(lambda) : std::string("baseline"))
         << "): epoch losses";
    for (double l : result.epoch_mean_loss) *log << ' ' << l;
    *log << ", degenerate pairs " << result.degenerate_pairs << ", " << std::fixed << std::setprecision(1)
         << seconds_since(t0) << "s\n"
         << std::defaultfloat << std::setprecision(6);
  }
  return model;
}

TestScores score_model(const StudyConfig& config, const Model& model, const Corpus& data, const HeadChoice& head,
                       bool use_po, double lambda) {
  std::vector<std::vector<TokenId>> sources;
  sources.reserve(data.size());
  for (const auto& p : data) sources.push_back(p.source);
  BeamOptions beam = config.beam;
  beam.use_po = use_po && model.contrastive();
  beam.lambda = lambda;
  const auto outputs = decode_corpus(model, sources, beam);

  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  for (std::size_t i = 0; i < data.size(); ++i) {
    candidates.push_back(as_tokens(outputs[i]));
    references.push_back({as_tokens(data[i].target)});
  }
  TestScores scores;
  scores.rouge = rouge_corpus(candidates, references);

  NoGradScope no_grad;
  double total = 0.0;
  for (const auto& p : data) {
    const auto fwd = forward_sequence(model, p.source, decoder_input_for(p.target), false);
    total += attention_entropy(fwd.decoded.record, head.layer, head.head, fwd.encoded.padding);
  }
  scores.entropy = total / static_cast<double>(data.size());
  return scores;
}

StudyResult run_directional_study(const StudyConfig& config, const Pretrained& pretrained, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult result;
  result.head = pretrained.synchronous;
  OpponentConfig oc;
  oc.selected_layer = result.head.layer;
  oc.selected_head = result.head.head;

  const Model baseline = continue_training(config, pretrained, nullptr, 0.0, log);

  Model best;
  double best_dev = -1.0;
  for (double lambda : config.lambda_grid) {
    Model candidate = continue_training(config, pretrained, &oc, lambda, log);
    if (config.lambda_grid.size() == 1) {
      best = std::move(candidate);
      result.lambda = lambda;
      break;
    }
    const double dev = score_model(config, candidate, pretrained.dev, result.head, true, lambda).rouge.r1.f1;
    result.dev_rouge1.emplace_back(lambda, dev);
    if (log) *log << "dev ROUGE-1 F1 at lambda " << lambda << ": " << dev << '\n';
    if (dev > best_dev) {
      best_dev = dev;
      best = std::move(candidate);
      result.lambda = lambda;
    }
  }

  result.baseline = score_model(config, baseline, pretrained.test, result.head, false, 0.0);
  result.contrastive = score_model(config, best, pretrained.test, result.head, true, result.lambda);
  result.contrastive_no_po = score_model(config, best, pretrained.test, result.head, false, result.lambda);
  result.seconds = seconds_since(t0);
  if (log) *log << format_study(result);
  return result;
}

std::string format_study(const StudyResult& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "selected_head\t" << r.head.layer << '\t' << r.head.head << '\n';
  for (const auto& [lambda, dev] : r.dev_rouge1) os << "dev_rouge1\t" << lambda << '\t' << dev << '\n';
  os << "lambda\t" << r.lambda << '\n';
  os << "model\tR-1\tR-2\tR-L\tentropy\n";
  auto row = [&](const char* name, const TestScores& s) {
    os << name << '\t' << s.rouge.r1.f1 << '\t' << s.rouge.r2.f1 << '\t' << s.rouge.rl.f1 << '\t' << s.entropy
       << '\n';
  };
  row("baseline", r.baseline);
  row("contrastive", r.contrastive);
  row("contrastive_no_po", r.contrastive_no_po);
  return os.str();
}

std::vector<AblationRow> run_ablation(const StudyConfig& config, const Pretrained& pretrained, double lambda,
                                      std::ostream* log) {
  struct Variant {
    std::string name;
    MaskStrategy mask;
    std::string head_choice;
  };
  const std::vector<Variant> variants = {
      {"opponent-max", MaskStrategy::max(), "synchronous"},
      {"opponent-top2", MaskStrategy::top_k(2), "synchronous"},
      {"opponent-top3", MaskStrategy::top_k(3), "synchronous"},
      {"opponent-dynamic", MaskStrategy::dynamic(1.02), "synchronous"},
      {"synchronous-head", MaskStrategy::max(), "synchronous"},
      {"non-synchronous-head", MaskStrategy::max(), "non-synchronous"},
      {"averaged-heads", MaskStrategy::max(), "averaged"},
  };

  std::vector<AblationRow> rows;
  std::optional<RougeReport> sync_max;
  for (const auto& v : variants) {
    OpponentConfig oc;
    oc.mask = v.mask;
    const HeadChoice head = v.head_choice == "non-synchronous" ? pretrained.non_synchronous : pretrained.synchronous;
    oc.selected_layer = head.layer;
    oc.selected_head = head.head;
    oc.average_heads = v.head_choice == "averaged";

    AblationRow row{v.name, v.mask.name(), v.head_choice, head.layer, head.head, {}};
    const bool reuse = v.mask == MaskStrategy::max() && v.head_choice == "synchronous" && sync_max;
    if (reuse) {
      row.rouge = *sync_max;
    } else {
      const Model model = continue_training(config, pretrained, &oc, lambda, log);
      row.rouge = score_model(config, model, pretrained.test, head, true, lambda).rouge;
      if (v.mask == MaskStrategy::max() && v.head_choice == "synchronous") sync_max = row.rouge;
    }
    if (log) *log << "ablation " << v.name << ": R-1 " << row.rouge.r1.f1 << '\n';
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "variant\tmask\thead_choice\tlayer\thead\tR-1\tR-2\tR-L\n";
  for (const auto& r : rows) {
    os << r.variant << '\t' << r.mask << '\t' << r.head_choice << '\t' << r.layer << '\t'
       << (r.head_choice == "averaged" ? std::string("all") : std::to_string(r.head)) << '\t' << r.rouge.r1.f1
       << '\t' << r.rouge.r2.f1 << '\t' << r.rouge.rl.f1 << '\n';
  }
  return os.str();
}

}  // namespace contrast
