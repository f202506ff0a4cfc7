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

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "contrast/config.hpp"
#include "contrast/decoding.hpp"
#include "contrast/evaluation.hpp"
#include "contrast/head_selection.hpp"

namespace contrast {

// Desk-scale comparison on synthetic data. A baseline is pretrained, its
// encoder-decoder heads are ranked by AER, and then every compared model
// continues from that baseline for the same number of epochs.
struct StudyConfig {
  SyntheticTaskSpec task;
  std::size_t train_pairs = 5000;
  std::size_t dev_pairs = 200;
  std::size_t test_pairs = 500;
  std::uint64_t train_seed = 7;
  std::uint64_t dev_seed = 9;
  std::uint64_t test_seed = 8;

  ModelConfig model;
  TrainConfig train;
  std::size_t pretrain_epochs = 3;
  std::size_t continue_epochs = 2;
  std::uint64_t init_seed = 1;
  std::uint64_t continue_seed = 2;

  std::vector<double> lambda_grid{0.1, 0.3, 1.0, 3.0};
  std::size_t head_sample = 50;
  BeamOptions beam;

  // Desk defaults: 2 layers, d_model 64, 4 heads, dropout 0.1, batch 32.
  static StudyConfig desk();
  void validate() const;
};

struct Pretrained {
  Corpus train, dev, test;
  Model baseline;
  AdamState optimizer;
  std::vector<HeadRank> ranking;
  HeadChoice synchronous;      // lowest mean AER
  HeadChoice non_synchronous;  // highest mean AER
};

Pretrained pretrain_baseline(const StudyConfig& config, std::ostream* log = nullptr);

// Continues `from` for config.continue_epochs at `lambda`; attaches a fresh
// branch first when `opponent` is given.
Model continue_training(const StudyConfig& config, const Pretrained& from, const OpponentConfig* opponent,
                        double lambda, std::ostream* log = nullptr);

struct TestScores {
  RougeReport rouge;
  double entropy = 0.0;  // mean over the test set, selected head, teacher forced
};

TestScores score_model(const StudyConfig& config, const Model& model, const Corpus& data, const HeadChoice& head,
                       bool use_po, double lambda);

struct StudyResult {
  HeadChoice head;
  std::vector<std::pair<double, double>> dev_rouge1;  // (lambda, dev ROUGE-1 F1)
  double lambda = 0.0;
  TestScores baseline;
  TestScores contrastive;
  TestScores contrastive_no_po;
  double seconds = 0.0;
};

StudyResult run_directional_study(const StudyConfig& config, const Pretrained& pretrained,
                                  std::ostream* log = nullptr);

// Tab-separated summary of a study.
std::string format_study(const StudyResult& result);

struct AblationRow {
  std::string variant;
  std::string mask;
  std::string head_choice;
  std::size_t layer = 0;
  std::size_t head = 0;
  RougeReport rouge;
};

// Mask strategies {max, top-2, top-3, dynamic:1.02} on the synchronous
// head, then head choices {synchronous, non-synchronous, averaged} under
// the max strategy. The synchronous/max model is trained once.
std::vector<AblationRow> run_ablation(const StudyConfig& config, const Pretrained& pretrained, double lambda,
                                      std::ostream* log = nullptr);

// Header plus one row per variant: variant, mask, head_choice, layer,
// head, R-1, R-2, R-L (F1).
std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace contrast
