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

#include <filesystem>
#include <ostream>

#include "contrast/config.hpp"

namespace contrast {

struct RunOutcome {
  Model model;
  TrainResult result;
  // The config as actually trained: absolute paths, head selection
  // applied, architecture taken from init_checkpoint when one is given.
  RunConfig resolved;
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::uint64_t checkpoint_hash = 0;
};

// Resolves file references, applies the head-selection file and fills in
// the architecture of init_checkpoint. Throws UsageError naming any
// missing input file.
RunConfig resolve_run_config(const RunConfig& config);

// Trains per `config` and writes into output_dir:
//   metrics.tsv                 one line per step (see format_step)
//   model.ckpt, manifest.cfg    final checkpoint and its manifest
//   step-<n>.ckpt, step-<n>.cfg scheduled checkpoints and manifests
// Every manifest is itself a config that reproduces the run.
RunOutcome execute_run(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace contrast
