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
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "contrast/ops.hpp"

namespace contrast {

// Gold or predicted (source, target) links of one sentence pair.
struct AlignmentSet {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t source_length = 0;
  std::size_t target_length = 0;

  bool operator==(const AlignmentSet&) const = default;
};

// "src-tgt" tokens separated by spaces.
AlignmentSet parse_alignment_line(const std::string& line, std::size_t source_length,
                                  std::size_t target_length);
std::string format_alignment_line(const AlignmentSet& alignment);

class Vocab {
 public:
  // Reserved entries only.
  Vocab();
  explicit Vocab(const std::vector<std::string>& tokens);

  // Synthetic vocabulary of `size` ids with tokens "t4", "t5", ...
  static Vocab synthetic(std::size_t size);
  // One token per line; line n holds id n + 4.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId add(const std::string& token);
  // Unknown tokens map to the unk id.
  TokenId id(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<TokenId> encode(const std::string& line) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> ids_;
};

enum class SyntheticTask { kCopy, kSalientExtract };

struct SyntheticTaskSpec {
  SyntheticTask task = SyntheticTask::kSalientExtract;
  std::size_t vocab_size = 64;
  std::size_t min_source_length = 6;
  std::size_t max_source_length = 12;
  // Fraction of source tokens that belong to the summary.
  double salience_ratio = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  AlignmentSet alignment;
};

using Corpus = std::vector<SentencePair>;

// Ids below `salient_boundary(vocab)` (and at least kReservedTokens) are
// salient; the rest are distractors.
TokenId salient_boundary(std::size_t vocab_size);
bool is_salient(TokenId id, std::size_t vocab_size);

Corpus generate(const SyntheticTaskSpec& spec, std::size_t n_pairs);

struct ParallelText {
  std::vector<std::vector<TokenId>> sources;
  std::vector<std::vector<TokenId>> targets;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

// Whitespace tokenization; unknown tokens become unk and are reported once
// per type to `unknown_tokens` when given.
ParallelText load_parallel(const std::filesystem::path& source_path,
                           const std::filesystem::path& target_path, const Vocab& vocab,
                           std::set<std::string>* unknown_tokens = nullptr);

std::vector<AlignmentSet> load_alignments(const std::filesystem::path& path,
                                          const ParallelText& text);

// Writes <prefix>.src, <prefix>.tgt and <prefix>.align.
void write_corpus(const std::filesystem::path& prefix, const Corpus& corpus, const Vocab& vocab);

}  // namespace contrast
