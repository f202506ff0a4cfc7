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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "contrast/errors.hpp"
#include "contrast/training.hpp"
#include "test_util.hpp"

using namespace contrast;

namespace {

Corpus copy_pairs(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  SyntheticTaskSpec spec;
  spec.task = SyntheticTask::kCopy;
  spec.vocab_size = vocab;
  spec.min_source_length = 3;
  spec.max_source_length = 6;
  spec.seed = seed;
  return generate(spec, n);
}

ModelConfig small_config(std::size_t vocab) {
  ModelConfig c;
  c.n_layers = 1;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ffn = 32;
  c.vocab_size = vocab;
  c.dropout = 0.1;
  c.max_seq_len = 16;
  return c;
}

}  // namespace

TEST_CASE("joint_loss examples") {
  Tensor log_pc({1, 6}, -5.0), log_po({1, 6}, -7.0);
  log_pc.mutable_values()[4] = -1.0;
  log_po.mutable_values()[4] = -2.0;
  const std::vector<TokenId> gold{4};
  CHECK(joint_loss(log_pc, log_po, gold, 0.5).item() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(joint_loss(log_pc, log_po, gold, 0.0).item() == 1.0);

  // Padding positions do not count; degenerate rows drop the P_o term.
  Tensor pc2 = Tensor::matrix(3, 3, {-1, -2, -3, -4, -5, -6, -7, -8, -9});
  Tensor po2 = Tensor::matrix(3, 3, {-0.5, -1, -1.5, -2, -2.5, -3, -3.5, -4, -4.5});
  const std::vector<TokenId> g2{2, 1, kPadId};
  const std::vector<std::uint8_t> degenerate{0, 1, 0};
  // (-(-3) - (-5) + 1.0 * (1.5)) / 2
  CHECK(joint_loss(pc2, po2, g2, 1.0, degenerate).item() == doctest::Approx((3.0 + 5.0 + 1.5) / 2.0).epsilon(1e-15));
  const std::vector<TokenId> all_pad{kPadId, kPadId, kPadId};
  CHECK_THROWS_AS(joint_loss(pc2, po2, all_pad, 1.0), DataError);
}

TEST_CASE("joint gradient on shared attention is the sum of branch gradients") {
  OpponentConfig oc;
  oc.selected_head = 1;
  Model m = make_contrastive(testutil::tiny_config(11), oc, 12);
  testutil::jitter(m.params, 13);
  const std::vector<TokenId> src{4, 7, 9}, tgt{5, 8};
  const double lambda = 0.7;
  const std::string shared = "decoder.layer0.cross_attn.wq";

  auto grad_of = [&](double pc_weight, double po_weight) {
    auto loss = [&m, &src, &tgt, pc_weight, po_weight](const ModelParams& p) {
      Model mm = m;
      mm.params = p;
      auto fwd = forward_sequence(mm, src, decoder_input_for(tgt), true);
      auto terms = gold_log_likelihood(fwd.log_pc, &fwd.opponent->log_probs, gold_output_for(tgt),
                                       fwd.opponent->degenerate);
      return scale(add(scale(terms.pc_sum, pc_weight), scale(terms.po_sum, po_weight)),
                   -1.0 / static_cast<double>(terms.tokens));
    };
    Tensor w = m.params.at(shared);
    w.set_requires_grad(true);
    Tape tape;
    Tensor y;
    {
      TapeScope scope(tape);
      y = loss(m.params);
    }
    auto g = tape.backward(y).of(w);
    w.set_requires_grad(false);
    return std::make_pair(g, loss);
  };
  auto [joint, joint_fn] = grad_of(1.0, lambda);
  auto [pc, pc_fn] = grad_of(1.0, 0.0);
  auto [po, po_fn] = grad_of(0.0, lambda);
  double po_norm = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    CHECK(joint[i] == doctest::Approx(pc[i] + po[i]).epsilon(1e-10));
    po_norm += std::abs(po[i]);
  }
  CHECK(po_norm > 0.0);
  auto joint_loss_fn = [&](const Tensor& t) {
    ModelParams p = m.params;
    p.at(shared) = t;
    return joint_fn(p);
  };
  CHECK(finite_diff_check(joint_loss_fn, m.params.at(shared)).max_relative_error < 1e-4);
}

TEST_CASE("lr_schedule examples") {
  CHECK(lr_schedule(4000, 5e-4, 4000) == 5e-4);
  CHECK(lr_schedule(16000, 5e-4, 4000) == doctest::Approx(2.5e-4).epsilon(1e-15));
  CHECK(lr_schedule(1, 5e-4, 4000) == doctest::Approx(5e-4 / 4000).epsilon(1e-15));
  for (std::size_t s = 2; s < 3000; ++s) {
    if (s <= 400) CHECK(lr_schedule(s, 1.0, 400) > lr_schedule(s - 1, 1.0, 400));
    else CHECK(lr_schedule(s, 1.0, 400) < lr_schedule(s - 1, 1.0, 400));
  }
}

TEST_CASE("adam_step examples") {
  ModelParams p;
  p.add("w", Tensor::vector({1.0, -2.0, 3.0}));
  AdamState st;
  AdamHyper hyper;
  std::map<std::string, std::vector<double>> g{{"w", {0.5, -3.0, 1e-3}}};
  adam_step(p, g, st, 0.01, hyper);
  // First step: bias correction makes every update lr * sign(g).
  CHECK(p.at("w")[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-9));
  CHECK(p.at("w")[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-9));
  CHECK(p.at("w")[2] == doctest::Approx(3.0 - 0.01).epsilon(1e-6));

  const auto before = std::vector<double>(p.at("w").values().begin(), p.at("w").values().end());
  const auto m_before = st.first_moment["w"];
  const auto v_before = st.second_moment["w"];
  std::map<std::string, std::vector<double>> zeros{{"w", {0.0, 0.0, 0.0}}};
  AdamState frozen = st;
  ModelParams q = p.clone();
  adam_step(q, zeros, frozen, 0.0, hyper);
  CHECK(std::vector<double>(q.at("w").values().begin(), q.at("w").values().end()) == before);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(frozen.first_moment["w"][i]) < std::abs(m_before[i]));
    CHECK(frozen.second_moment["w"][i] < v_before[i]);
  }

  std::map<std::string, std::vector<double>> bad{{"w", {0.0, std::numeric_limits<double>::quiet_NaN(), 0.0}}};
  try {
    adam_step(p, bad, st, 0.01, hyper);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("parameter w") != std::string::npos);
  }
}

TEST_CASE("negated softmax objective is rejected with the pitfall") {
  TrainConfig tc;
  tc.objective = parse_objective("negated_softmax");
  try {
    tc.validate();
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("failed to train because") != std::string::npos);
    CHECK(msg.find("Known pitfall: negated-softmax objective") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_objective("softmax"), UsageError);
}

TEST_CASE("200 steps on 100 copy pairs reduce the loss and log every step") {
  auto corpus = copy_pairs(100, 20, 3);
  Model m = make_baseline(small_config(20), 4);
  TrainConfig tc;
  tc.batch_size = 10;
  tc.max_epochs = 100;
  tc.max_steps = 200;
  tc.warmup_steps = 50;
  tc.base_lr = 3e-3;
  std::ostringstream log;
  auto r = train(m, corpus, tc, nullptr, &log);
  REQUIRE(r.steps.size() == 200);
  for (const auto& s : r.steps) CHECK(std::isfinite(s.loss));
  CHECK(r.steps.back().loss < r.steps.front().loss);
  const std::string text = log.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 200);
  CHECK(text.rfind(format_step(r.steps.front()) + "\n", 0) == 0);
}

TEST_CASE("contrastive training is finite and runs the checkpoint hook") {
  auto corpus = copy_pairs(60, 20, 5);
  OpponentConfig oc;
  Model m = make_contrastive(small_config(20), oc, 6);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 2;
  tc.checkpoint_every = 4;
  std::vector<std::size_t> seen;
  auto r = train(m, corpus, tc, nullptr, nullptr, [&](std::size_t step, const Model&) { seen.push_back(step); });
  CHECK(r.steps.size() == 16);
  CHECK(seen == std::vector<std::size_t>{4, 8, 12, 16});
  for (const auto& s : r.steps) {
    CHECK(std::isfinite(s.loss));
    CHECK(s.po_nll > 0.0);
  }
}

TEST_CASE("identical runs are bit-identical; lambda 0 reproduces the baseline") {
  auto corpus = copy_pairs(40, 20, 7);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 2;
  tc.seed = 9;
  Model a = make_baseline(small_config(20), 10), b = make_baseline(small_config(20), 10);
  train(a, corpus, tc);
  train(b, corpus, tc);
  CHECK(params_hash(a.params) == params_hash(b.params));

  OpponentConfig oc;
  Model c = make_contrastive(small_config(20), oc, 10);
  const auto branch_before = params_hash(c.params);
  CHECK(params_hash(c.params, false) == params_hash(make_baseline(small_config(20), 10).params));
  tc.lambda = 0.0;
  train(c, corpus, tc);
  CHECK(params_hash(c.params, false) == params_hash(a.params));
  CHECK(params_hash(c.params) != branch_before);  // transformer moved
  Model untouched = make_contrastive(small_config(20), oc, 10);
  for (const auto& name : c.params.names()) {
    if (name.rfind("branch.", 0) != 0) continue;
    CHECK(std::vector<double>(c.params.at(name).values().begin(), c.params.at(name).values().end()) ==
          std::vector<double>(untouched.params.at(name).values().begin(), untouched.params.at(name).values().end()));
  }
}

TEST_CASE("epoch-mean loss does not rise over the first three epochs") {
  auto corpus = copy_pairs(400, 64, 11);
  ModelConfig c;
  c.vocab_size = 64;
  c.dropout = 0.1;
  Model m = make_baseline(c, 12);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.warmup_steps = 20;
  tc.base_lr = 1e-3;
  auto r = train(m, corpus, tc);
  REQUIRE(r.epoch_mean_loss.size() == 3);
  CHECK(r.epoch_mean_loss[1] <= r.epoch_mean_loss[0]);
  CHECK(r.epoch_mean_loss[2] <= r.epoch_mean_loss[1]);
}

TEST_CASE("training rejects bad configurations") {
  auto corpus = copy_pairs(4, 20, 1);
  Model m = make_baseline(small_config(20), 1);
  TrainConfig tc;
  tc.lambda = -1.0;
  CHECK_THROWS_AS(train(m, corpus, tc), UsageError);
  tc = {};
  tc.batch_size = 0;
  CHECK_THROWS_AS(train(m, corpus, tc), UsageError);
  tc = {};
  CHECK_THROWS_AS(train(m, std::span<const SentencePair>(), tc), UsageError);
}
