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

#include "contrast/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "contrast/errors.hpp"
#include "contrast/transformer.hpp"

namespace contrast {

namespace {

const char* const kReservedNames[kReservedTokens] = {"<pad>", "<s>", "</s>", "<unk>"};

std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

AlignmentSet parse_alignment_line(const std::string& line, std::size_t source_length,
                                  std::size_t target_length) {
  AlignmentSet out;
  out.source_length = source_length;
  out.target_length = target_length;
  for (const auto& tok : split_whitespace(line)) {
    const auto dash = tok.find('-');
    std::size_t s = 0, t = 0;
    try {
      if (dash == std::string::npos) throw std::invalid_argument(tok);
      std::size_t used = 0;
      s = std::stoul(tok.substr(0, dash), &used);
      if (used != dash) throw std::invalid_argument(tok);
      t = std::stoul(tok.substr(dash + 1), &used);
      if (used != tok.size() - dash - 1) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError("malformed alignment link '" + tok + "'");
    }
    if (s >= source_length || t >= target_length) {
      throw DataError("alignment link " + tok + " outside a " + std::to_string(source_length) + "x" +
                      std::to_string(target_length) + " sentence pair");
    }
    out.pairs.insert({s, t});
  }
  return out;
}

std::string format_alignment_line(const AlignmentSet& alignment) {
  std::string out;
  for (const auto& [s, t] : alignment.pairs) {
    if (!out.empty()) out += ' ';
    out += std::to_string(s) + "-" + std::to_string(t);
  }
  return out;
}

Vocab::Vocab() {
  for (const char* name : kReservedNames) add(name);
}

Vocab::Vocab(const std::vector<std::string>& tokens) : Vocab() {
  for (const auto& t : tokens) {
    if (contains(t)) throw DataError("duplicate vocabulary entry '" + t + "'");
    add(t);
  }
}

Vocab Vocab::synthetic(std::size_t size) {
  if (size <= kReservedTokens) throw UsageError("synthetic vocabulary needs more than 4 entries");
  Vocab v;
  for (std::size_t i = kReservedTokens; i < size; ++i) v.add("t" + std::to_string(i));
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::vector<std::string> tokens;
  for (const auto& line : read_lines(path)) {
    auto parts = split_whitespace(line);
    if (parts.size() != 1) throw DataError("vocabulary line '" + line + "' must hold one token");
    tokens.push_back(parts[0]);
  }
  return Vocab(tokens);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines(tokens_.begin() + kReservedTokens, tokens_.end());
  write_lines(path, lines);
}

TokenId Vocab::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  ids_[token] = id;
  return id;
}

TokenId Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocab::encode(const std::string& line) const {
  std::vector<TokenId> out;
  for (const auto& tok : split_whitespace(line)) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kEosId) break;
    if (id == kPadId || id == kBosId) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

void SyntheticTaskSpec::validate() const {
  if (vocab_size < kReservedTokens + 2) {
    throw UsageError("vocab_size " + std::to_string(vocab_size) +
                     " is too small to split into salient and distractor halves");
  }
  if (min_source_length < 2 || max_source_length < min_source_length) {
    throw UsageError("source lengths must satisfy 2 <= min <= max");
  }
  if (!(salience_ratio > 0.0 && salience_ratio <= 1.0)) {
    throw UsageError("salience ratio must be in (0, 1]");
  }
}

TokenId salient_boundary(std::size_t vocab_size) {
  const std::size_t content = vocab_size - kReservedTokens;
  return static_cast<TokenId>(kReservedTokens + content / 2);
}

bool is_salient(TokenId id, std::size_t vocab_size) {
  return id >= static_cast<TokenId>(kReservedTokens) && id < salient_boundary(vocab_size);
}

Corpus generate(const SyntheticTaskSpec& spec, std::size_t n_pairs) {
  spec.validate();
  if (n_pairs == 0) throw UsageError("generate needs at least one pair");
  std::mt19937_64 rng(spec.seed);
  const TokenId first = static_cast<TokenId>(kReservedTokens);
  const TokenId boundary = salient_boundary(spec.vocab_size);
  const TokenId last = static_cast<TokenId>(spec.vocab_size) - 1;
  std::uniform_int_distribution<std::size_t> length(spec.min_source_length, spec.max_source_length);
  std::uniform_int_distribution<TokenId> any_token(first, last);
  std::uniform_int_distribution<TokenId> salient_token(first, boundary - 1);
  std::uniform_int_distribution<TokenId> distractor_token(boundary, last);

  Corpus corpus;
  corpus.reserve(n_pairs);
  for (std::size_t n = 0; n < n_pairs; ++n) {
    SentencePair pair;
    const std::size_t len = length(rng);
    if (spec.task == SyntheticTask::kCopy) {
      for (std::size_t i = 0; i < len; ++i) pair.source.push_back(any_token(rng));
      pair.target = pair.source;
      for (std::size_t i = 0; i < len; ++i) pair.alignment.pairs.insert({i, i});
    } else {
      auto n_salient = static_cast<std::size_t>(std::lround(spec.salience_ratio * static_cast<double>(len)));
      n_salient = std::clamp<std::size_t>(n_salient, 1, len);
      std::vector<std::size_t> positions(len);
      for (std::size_t i = 0; i < len; ++i) positions[i] = i;
      std::shuffle(positions.begin(), positions.end(), rng);
      std::vector<std::uint8_t> salient(len, 0);
      for (std::size_t i = 0; i < n_salient; ++i) salient[positions[i]] = 1;
      for (std::size_t i = 0; i < len; ++i) {
        if (salient[i]) {
          pair.alignment.pairs.insert({i, pair.target.size()});
          pair.source.push_back(salient_token(rng));
          pair.target.push_back(pair.source.back());
        } else {
          pair.source.push_back(distractor_token(rng));
        }
      }
    }
    pair.alignment.source_length = pair.source.size();
    pair.alignment.target_length = pair.target.size();
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

ParallelText load_parallel(const std::filesystem::path& source_path,
                           const std::filesystem::path& target_path, const Vocab& vocab,
                           std::set<std::string>* unknown_tokens) {
  const auto src = read_lines(source_path);
  const auto tgt = read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw DataError("line-count mismatch: " + source_path.string() + " has " +
                    std::to_string(src.size()) + " lines, " + target_path.string() + " has " +
                    std::to_string(tgt.size()));
  }
  ParallelText out;
  std::string empty_lines;
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto s = split_whitespace(src[i]);
    auto t = split_whitespace(tgt[i]);
    if (s.empty() || t.empty()) {
      if (!empty_lines.empty()) empty_lines += ", ";
      empty_lines += std::to_string(i + 1);
      continue;
    }
    std::vector<TokenId> sid, tid;
    for (const auto& tok : s) {
      sid.push_back(vocab.id(tok));
      if (unknown_tokens && sid.back() == kUnkId && !vocab.contains(tok)) unknown_tokens->insert(tok);
    }
    for (const auto& tok : t) {
      tid.push_back(vocab.id(tok));
      if (unknown_tokens && tid.back() == kUnkId && !vocab.contains(tok)) unknown_tokens->insert(tok);
    }
    out.sources.push_back(std::move(sid));
    out.targets.push_back(std::move(tid));
  }
  if (!empty_lines.empty()) throw DataError("empty source or target on line(s) " + empty_lines);
  return out;
}

std::vector<AlignmentSet> load_alignments(const std::filesystem::path& path,
                                          const ParallelText& text) {
  const auto lines = read_lines(path);
  if (lines.size() != text.sources.size()) {
    throw DataError("alignment file " + path.string() + " has " + std::to_string(lines.size()) +
                    " lines for " + std::to_string(text.sources.size()) + " sentence pairs");
  }
  std::vector<AlignmentSet> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(parse_alignment_line(lines[i], text.sources[i].size(), text.targets[i].size()));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& prefix, const Corpus& corpus, const Vocab& vocab) {
  std::vector<std::string> src, tgt, align;
  for (const auto& p : corpus) {
    src.push_back(vocab.decode(p.source));
    tgt.push_back(vocab.decode(p.target));
    align.push_back(format_alignment_line(p.alignment));
  }
  write_lines(prefix.string() + ".src", src);
  write_lines(prefix.string() + ".tgt", tgt);
  write_lines(prefix.string() + ".align", align);
}

}  // namespace contrast
