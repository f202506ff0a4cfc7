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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "contrast/training.hpp"

namespace contrast {

// Everything `contrast train` needs. The text form is one `key = value`
// per line; `#` starts a comment. Relative paths resolve against the
// directory of the file they were read from.
struct RunConfig {
  ModelConfig model;
  bool contrastive = true;
  OpponentConfig opponent;
  TrainConfig train;

  std::filesystem::path train_source;
  std::filesystem::path train_target;
  // Empty: the synthetic vocabulary of model.vocab_size ids.
  std::filesystem::path vocab;
  // Empty: train from a fresh initialization. Otherwise the transformer
  // weights are loaded from here and any branch is re-initialized.
  std::filesystem::path init_checkpoint;
  // Written by `contrast inspect-heads`; overrides opponent.layer/head.
  std::filesystem::path head_selection_file;
  std::filesystem::path output_dir = "run";
  std::uint64_t init_seed = 1;

  // Informational keys carried by manifests; ignored when training.
  std::map<std::string, std::string> manifest;

  bool operator==(const RunConfig&) const = default;
};

// Parses and validates. UsageError messages name the offending key; a
// negated-softmax objective is rejected here with the pitfall text.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// One `key=value` override as given to `--set`; paths resolve against
// the current directory.
void apply_override(RunConfig& config, const std::string& assignment);

// Checks cross-key consistency (opponent head in range, objective, ...).
void validate_run_config(const RunConfig& config);

// Canonical text form with absolute paths and round-trip exact numbers;
// parse_run_config(format_run_config(c), any) == c.
std::string format_run_config(const RunConfig& config);

struct HeadChoice {
  std::size_t layer = 0;
  std::size_t head = 0;
};

// Head-selection files are config fragments holding only
// opponent.layer and opponent.head.
void write_head_selection(const std::filesystem::path& path, const HeadChoice& choice,
                          const std::string& comment = "");
HeadChoice read_head_selection(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place.
void write_file_atomically(const std::filesystem::path& path, const std::string& text);

}  // namespace contrast
