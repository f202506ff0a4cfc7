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

// Acceptance gate: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes, except those named by --expect-fail: those
// must fail, and an unexpected pass is an error so the record gets updated.
// Artifacts of the desk-scale runs (study summary, ablation table) are
// written to --out-dir.

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "contrast/decoding.hpp"
#include "contrast/errors.hpp"
#include "contrast/evaluation.hpp"
#include "contrast/experiment.hpp"
#include "contrast/head_selection.hpp"
#include "decode_oracle.hpp"
#include "lcs_oracle.hpp"
#include "test_util.hpp"

using namespace contrast;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

double cpu_seconds_since(std::clock_t start) {
  return static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
}

// 1
Verdict gradient_integrity() {
  const std::clock_t start = std::clock();
  OpponentConfig oc;
  oc.selected_head = 1;
  Model m = make_contrastive(testutil::tiny_config(11), oc, 21);
  testutil::jitter(m.params, 22);
  const std::vector<TokenId> src{4, 8, 6}, tgt{9, 5};
  const auto errors = testutil::model_grad_errors(
      m.params, [&](const ModelParams& p) { return testutil::pair_loss(m, p, src, tgt, 1.0); });
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : errors) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  const double secs = cpu_seconds_since(start);
  return {worst < 1e-4 && secs < 30.0, std::to_string(errors.size()) + " tensors, max relative error " +
                                           fmt(worst, 3) + " (" + worst_name + "), " + fmt(secs, 3) + "s"};
}

// 2
Verdict duality_and_mask() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng() % 20);
    for (double& x : v) x = n(rng);
    const Tensor a = softmin(Tensor::vector(v));
    const Tensor b = softmax(scale(Tensor::vector(v), -1.0));
    for (std::size_t k = 0; k < v.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  }
  std::size_t bad_mask = 0;
  std::gamma_distribution<double> g(0.5, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> alpha(2 + rng() % 15);
    double total = 0.0;
    for (double& x : alpha) total += (x = g(rng) + 1e-12);
    for (double& x : alpha) x /= total;
    const std::size_t top = std::max_element(alpha.begin(), alpha.end()) - alpha.begin();
    const Tensor w = opponent_weights(opponent_mask(Tensor::vector(alpha), MaskStrategy::max()));
    if (w[top] != 0.0) ++bad_mask;
  }
  return {worst <= 1e-12 && bad_mask == 0,
          "max |softmin(v) - softmax(-v)| = " + fmt(worst, 3) + " over 1000 vectors; argmax weight nonzero in " +
              std::to_string(bad_mask) + "/1000 distributions"};
}

// 3
Verdict opponent_weight_oracle() {
  const double inf = std::numeric_limits<double>::infinity();
  const Tensor w = opponent_weights(Tensor::vector({-inf, 0.3, 0.2}));
  const bool example = w[0] == 0.0 && std::abs(w[1] - 0.5250) < 1e-4 && std::abs(w[2] - 0.4750) < 1e-4;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> alpha(2 + rng() % 12);
    double total = 0.0;
    for (double& x : alpha) total += (x = u(rng));
    for (double& x : alpha) x /= total;
    const Tensor o = opponent_weights(opponent_mask(Tensor::vector(alpha), MaskStrategy::max()));
    const std::size_t top = std::max_element(alpha.begin(), alpha.end()) - alpha.begin();
    double z = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k)
      if (k != top) z += std::exp(alpha[k]);
    for (std::size_t k = 0; k < alpha.size(); ++k)
      if (k != top) worst = std::max(worst, std::abs(o[k] - std::exp(alpha[k]) / z));
  }
  return {example && worst < 1e-9, "example [" + fmt(w[0]) + ", " + fmt(w[1], 4) + ", " + fmt(w[2], 4) +
                                       "]; max deviation from exp-proportional " + fmt(worst, 3)};
}

// 4
Verdict lambda_zero_reduction() {
  ModelConfig c;
  c.n_layers = 1;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ffn = 32;
  c.vocab_size = 20;
  c.dropout = 0.1;
  c.max_seq_len = 20;
  SyntheticTaskSpec spec;
  spec.vocab_size = 20;
  spec.min_source_length = 4;
  spec.max_source_length = 8;
  spec.seed = 41;
  const Corpus corpus = generate(spec, 120);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 2;
  tc.warmup_steps = 20;
  tc.seed = 5;

  Model baseline = make_baseline(c, 6);
  train(baseline, corpus, tc);
  OpponentConfig oc;
  Model contrastive = make_contrastive(c, oc, 6);
  tc.lambda = 0.0;
  train(contrastive, corpus, tc);
  const bool hash_equal = params_hash(contrastive.params, false) == params_hash(baseline.params);

  spec.seed = 42;
  const Corpus sentences = generate(spec, 100);
  std::size_t differ = 0;
  BeamOptions zero;
  zero.lambda = 0.0;
  BeamOptions plain;
  plain.use_po = false;
  for (const auto& p : sentences) {
    const auto a = beam_search(contrastive, p.source, zero);
    const auto b = beam_search(baseline, p.source, plain);
    if (a.size() != b.size()) {
      ++differ;
      continue;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].tokens != b[k].tokens || a[k].score != b[k].score) {
        ++differ;
        break;
      }
    }
  }
  return {hash_equal && differ == 0, std::string("transformer hash ") +
                                         (hash_equal ? "equal" : "DIFFERENT") + " (" +
                                         hash_hex(params_hash(baseline.params)) + "); decode mismatches " +
                                         std::to_string(differ) + "/100"};
}

// 5
Verdict beam_oracle() {
  const std::clock_t start = std::clock();
  std::size_t mismatches = 0;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    OpponentConfig oc;
    oc.selected_head = seed % 2;
    // Six ids, of which pad and bos are never emitted: four candidates per step.
    Model m = make_contrastive(testutil::tiny_config(6), oc, seed);
    testutil::jitter(m.params, seed * 7 + 1, 1.0);
    std::vector<TokenId> src(2 + rng() % 3);
    for (auto& t : src) t = static_cast<TokenId>(3 + rng() % 3);
    const double lambda = 0.5 + static_cast<double>(seed % 3) * 0.5;
    ModelScorer scorer(m, src, true);
    BeamOptions opts;
    opts.beam_size = 64;  // 4^3
    opts.max_len = 3;
    opts.lambda = lambda;
    const auto hyps = beam_search(scorer, opts);
    const auto oracle = testutil::exhaustive_best(scorer, 3, lambda, true);
    const std::vector<TokenId> got(hyps.front().tokens.begin() + 1, hyps.front().tokens.end());
    if (got != oracle.tokens || std::abs(final_score(hyps.front(), true) - oracle.score) > 1e-12) ++mismatches;
  }
  const double secs = cpu_seconds_since(start);
  return {mismatches == 0 && secs < 60.0,
          std::to_string(mismatches) + "/50 models disagree with exhaustive search, " + fmt(secs, 3) + "s"};
}

// 6 and 7 share one desk-scale study.
struct DeskStudy {
  Pretrained pretrained;
  StudyResult result;
  double cpu_seconds = 0.0;
};

DeskStudy run_desk_study(const fs::path& out_dir) {
  const std::clock_t start = std::clock();
  const StudyConfig config = StudyConfig::desk();
  std::ofstream log(out_dir / "study.log");
  DeskStudy s;
  s.pretrained = pretrain_baseline(config, &log);
  s.result = run_directional_study(config, s.pretrained, &log);
  s.cpu_seconds = cpu_seconds_since(start);
  std::ofstream(out_dir / "study.tsv") << format_study(s.result) << "cpu_seconds\t" << s.cpu_seconds << '\n';
  return s;
}

Verdict directional(const DeskStudy& s) {
  const auto& r = s.result;
  const double base = r.baseline.rouge.r1.f1, con = r.contrastive.rouge.r1.f1, no_po = r.contrastive_no_po.rouge.r1.f1;
  const bool pass = con >= base && no_po <= con && s.cpu_seconds <= 900.0;
  return {pass, "ROUGE-1 F1 baseline " + fmt(base) + ", contrastive " + fmt(con) + ", contrastive --no-po " +
                    fmt(no_po) + " (lambda " + fmt(r.lambda) + ", head " + std::to_string(r.head.layer) + "/" +
                    std::to_string(r.head.head) + ", " + fmt(s.cpu_seconds, 4) + "s CPU)"};
}

Verdict focus(const DeskStudy& s) {
  const double b = s.result.baseline.entropy, c = s.result.contrastive.entropy;
  return {c < b, "selected-head mean entropy baseline " + fmt(b) + " nats, contrastive " + fmt(c) + " nats"};
}

// 8: every variant continues the desk study's pretrained baseline for one
// epoch at the lambda the study selected.
Verdict ablation(const DeskStudy& s, const fs::path& out_dir) {
  StudyConfig config = StudyConfig::desk();
  config.continue_epochs = 1;
  std::ofstream log(out_dir / "ablation.log");
  const auto rows = run_ablation(config, s.pretrained, s.result.lambda, &log);
  const std::string table = format_ablation_table(rows);
  std::ofstream(out_dir / "ablation.tsv") << table;
  std::size_t valid = 0;
  for (const auto& r : rows) {
    bool ok = true;
    for (const auto* s : {&r.rouge.r1, &r.rouge.r2, &r.rouge.rl}) ok = ok && s->f1 >= 0.0 && s->f1 <= 1.0;
    valid += ok;
  }
  std::set<std::string> masks, heads;
  for (const auto& r : rows) {
    masks.insert(r.mask);
    heads.insert(r.head_choice);
  }
  const bool covered = masks == std::set<std::string>{"max", "top-2", "top-3", "dynamic:1.02"} &&
                       heads == std::set<std::string>{"synchronous", "non-synchronous", "averaged"};
  return {covered && valid == rows.size(),
          std::to_string(rows.size()) + " variants, " + std::to_string(valid) + " with valid scores; table in " +
              (out_dir / "ablation.tsv").string()};
}

// 9
Verdict rouge_correctness() {
  auto toks = [](const std::string& s) {
    Tokens t;
    std::istringstream in(s);
    for (std::string w; in >> w;) t.push_back(w);
    return t;
  };
  const auto r1 = rouge_n(toks("the cat sat"), {toks("the cat sat on the mat")}, 1);
  const auto rl = rouge_l(toks("a c b"), {toks("a b c")});
  const bool fixtures = std::abs(r1.recall - 0.5) < 1e-4 && std::abs(r1.precision - 1.0) < 1e-4 &&
                        std::abs(r1.f1 - 0.6667) < 1e-4 && std::abs(rl.recall - 2.0 / 3.0) < 1e-4 &&
                        std::abs(rl.precision - 2.0 / 3.0) < 1e-4 && std::abs(rl.f1 - 0.6667) < 1e-4;
  const testutil::LcsOracle oracle(8);
  const std::size_t bad = testutil::rouge_l_mismatches(oracle);
  const std::size_t pairs = oracle.size() * (oracle.size() + 1) / 2;
  return {fixtures && bad == 0, "unigram f1 " + fmt(r1.f1, 4) + ", LCS f1 " + fmt(rl.f1, 4) + "; " +
                                    std::to_string(bad) + " mismatches over " + std::to_string(pairs) +
                                    " sequence pairs (length <= 8, 3 tokens)"};
}

// 10
Verdict head_selection() {
  const Model m = testutil::planted_diagonal_model();
  const auto sample = testutil::diagonal_sample(30, 8, 10);
  const auto ranking = rank_heads(m, sample.sources, sample.targets, sample.gold);
  const bool planted_first = ranking.front().layer == 0 && ranking.front().head == 0 && ranking.front().mean_aer == 0.0;
  AlignmentSet a, s;
  a.pairs = {{0, 0}, {1, 1}, {3, 2}};
  s.pairs = {{0, 0}, {1, 1}, {2, 2}};
  a.source_length = s.source_length = 4;
  a.target_length = s.target_length = 3;
  const double hand = aer(a, s);
  const bool example = hand == 1.0 - 4.0 / 6.0;
  return {planted_first && example, "top head " + std::to_string(ranking.front().layer) + "/" +
                                        std::to_string(ranking.front().head) + " with AER " +
                                        fmt(ranking.front().mean_aer) + "; hand example " + fmt(hand, 4)};
}

// 11
Verdict negated_softmax_guard(const fs::path& out_dir) {
  const fs::path cfg = out_dir / "negated.cfg";
  std::ofstream(cfg) << "objective = negated_softmax\nlambda = 1\n";
  const std::string cmd = "'" CONTRAST_CLI "' train --config '" + cfg.string() + "' 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "could not start the CLI"};
  std::string out;
  std::array<char, 1024> buf{};
  for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), pipe)) > 0;) out.append(buf.data(), n);
  const int status = pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const bool cites = out.find("Known pitfall: negated-softmax objective") != std::string::npos &&
                     out.find("failed to train because") != std::string::npos;
  return {code == 2 && cites, "exit code " + std::to_string(code) + ", pitfall " + (cites ? "cited" : "NOT cited")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out_dir = "acceptance_results";
  std::vector<int> only, expect_fail;
  app.add_option("--out-dir", out_dir, "where run artifacts go")->capture_default_str();
  app.add_option("--only", only, "run just these criteria");
  app.add_option("--expect-fail", expect_fail, "criteria known to fail; the exit status tolerates them");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out_dir);

  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  std::optional<DeskStudy> study;
  auto desk = [&]() -> const DeskStudy& {
    if (!study) study = run_desk_study(out_dir);
    return *study;
  };

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient integrity", gradient_integrity},
      {"softmin/softmax duality and mask exactness", duality_and_mask},
      {"opponent-weight oracle", opponent_weight_oracle},
      {"lambda=0 reduction", lambda_zero_reduction},
      {"beam-search oracle", beam_oracle},
      {"directional reproduction", [&] { return directional(desk()); }},
      {"attention focus", [&] { return focus(desk()); }},
      {"ablation harness", [&] { return ablation(desk(), out_dir); }},
      {"ROUGE correctness", rouge_correctness},
      {"head-selection fixture", head_selection},
      {"negated-softmax guard", [&] { return negated_softmax_guard(out_dir); }},
  };

  auto expected_red = [&](int n) { return std::find(expect_fail.begin(), expect_fail.end(), n) != expect_fail.end(); };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!wanted(n)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const bool red = expected_red(n);
    failed += v.pass == red;
    std::cout << "criterion " << n << " [" << (v.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << ": "
              << v.detail << (red ? (v.pass ? " (UNEXPECTED PASS: listed as known failure)" : " (known failure)") : "")
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
