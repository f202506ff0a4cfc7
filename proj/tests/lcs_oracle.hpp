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
#include <string>
#include <vector>

#include "contrast/evaluation.hpp"

namespace testutil {

// Exhaustive LCS oracle over every sequence of length <= max_len on a
// 3-letter alphabet. A common subsequence of length l exists iff the two
// sequences' sets of length-l subsequences intersect; each set is a bitset
// over all length-l sequences, built by enumerating index subsets.
class LcsOracle {
 public:
  explicit LcsOracle(std::size_t max_len) : max_len_(max_len) {
    offset_.push_back(0);
    std::size_t count = 1;
    for (std::size_t l = 0; l <= max_len_; ++l) {
      count_.push_back(count);
      words_.push_back((count + 63) / 64);
      offset_.push_back(offset_.back() + count);
      count *= 3;
    }
    word_offset_.push_back(0);
    for (std::size_t l = 0; l <= max_len_; ++l) word_offset_.push_back(word_offset_.back() + words_[l]);
    for (std::size_t l = 0; l <= max_len_; ++l) {
      for (std::size_t code = 0; code < count_[l]; ++code) sequences_.push_back(decode(l, code));
    }
    bits_.assign(sequences_.size() * word_offset_.back(), 0);
    for (std::size_t i = 0; i < sequences_.size(); ++i) {
      const auto& s = sequences_[i];
      std::uint64_t* row = &bits_[i * word_offset_.back()];
      for (std::uint32_t subset = 0; subset < (1u << s.size()); ++subset) {
        std::size_t code = 0, len = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
          if (subset & (1u << k)) {
            code = code * 3 + static_cast<std::size_t>(s[k]);
            ++len;
          }
        }
        row[word_offset_[len] + code / 64] |= std::uint64_t{1} << (code % 64);
      }
    }
  }

  std::size_t size() const { return sequences_.size(); }
  const std::vector<int>& sequence(std::size_t i) const { return sequences_[i]; }

  contrast::Tokens tokens(std::size_t i) const {
    static const char* names[] = {"a", "b", "c"};
    contrast::Tokens out;
    for (int x : sequences_[i]) out.push_back(names[x]);
    return out;
  }

  std::size_t lcs(std::size_t i, std::size_t j) const {
    const std::size_t stride = word_offset_.back();
    const std::uint64_t* a = &bits_[i * stride];
    const std::uint64_t* b = &bits_[j * stride];
    for (std::size_t l = std::min(sequences_[i].size(), sequences_[j].size()); l > 0; --l) {
      for (std::size_t w = word_offset_[l]; w < word_offset_[l + 1]; ++w) {
        if (a[w] & b[w]) return l;
      }
    }
    return 0;
  }

 private:
  std::vector<int> decode(std::size_t len, std::size_t code) const {
    std::vector<int> out(len);
    for (std::size_t k = len; k > 0; --k) {
      out[k - 1] = static_cast<int>(code % 3);
      code /= 3;
    }
    return out;
  }

  std::size_t max_len_;
  std::vector<std::size_t> count_, words_, offset_, word_offset_;
  std::vector<std::vector<int>> sequences_;
  std::vector<std::uint64_t> bits_;
};

// Number of unordered pairs where rouge_l's precision or recall disagrees
// with the oracle LCS divided by the sequence lengths.
inline std::size_t rouge_l_mismatches(const LcsOracle& oracle) {
  std::vector<contrast::Tokens> toks(oracle.size());
  std::vector<std::vector<contrast::Tokens>> refs(oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    toks[i] = oracle.tokens(i);
    refs[i] = {toks[i]};
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  std::size_t bad = 0;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    for (std::size_t j = i; j < oracle.size(); ++j) {
      const auto score = contrast::rouge_l(toks[i], refs[j]);
      const std::size_t expected = oracle.lcs(i, j);
      if (score.recall != ratio(expected, toks[j].size()) ||
          score.precision != ratio(expected, toks[i].size())) {
        ++bad;
      }
    }
  }
  return bad;
}

}  // namespace testutil
