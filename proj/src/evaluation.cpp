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

#include "contrast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

RougeScore best_of(const std::vector<RougeScore>& scores) {
  RougeScore best;
  bool first = true;
  for (const auto& s : scores) {
    if (first || s.f1 > best.f1) best = s;
    first = false;
  }
  return best;
}

RougeScore make_score(double overlap, double candidate_total, double reference_total) {
  RougeScore s;
  s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

void accumulate(RougeScore& total, const RougeScore& s) {
  total.precision += s.precision;
  total.recall += s.recall;
  total.f1 += s.f1;
}

void divide(RougeScore& s, double n) {
  s.precision /= n;
  s.recall /= n;
  s.f1 /= n;
}

}  // namespace

double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

RougeScore rouge_n(const Tokens& candidate, const std::vector<Tokens>& references, std::size_t n) {
  if (n == 0) throw UsageError("rouge_n needs n >= 1");
  if (references.empty()) throw UsageError("rouge_n needs at least one reference");
  const auto cand = ngram_counts(candidate, n);
  std::size_t cand_total = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  std::vector<RougeScore> scores;
  for (const auto& ref : references) {
    const auto ref_counts = ngram_counts(ref, n);
    std::size_t ref_total = 0, overlap = 0;
    for (const auto& [g, c] : ref_counts) {
      ref_total += c;
      auto it = cand.find(g);
      if (it != cand.end()) overlap += std::min(c, it->second);
    }
    scores.push_back(make_score(static_cast<double>(overlap), static_cast<double>(cand_total),
                                static_cast<double>(ref_total)));
  }
  return best_of(scores);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (references.empty()) throw UsageError("rouge_l needs at least one reference");
  std::vector<RougeScore> scores;
  for (const auto& ref : references) {
    scores.push_back(make_score(static_cast<double>(lcs_length(candidate, ref)),
                                static_cast<double>(candidate.size()),
                                static_cast<double>(ref.size())));
  }
  return best_of(scores);
}

Tokens truncate_to_bytes(const Tokens& tokens, std::size_t cap) {
  Tokens out;
  std::size_t used = 0;
  for (const auto& t : tokens) {
    const std::size_t need = (out.empty() ? 0 : 1) + t.size();
    if (used + need > cap) break;
    out.push_back(t);
    used += need;
  }
  return out;
}

RougeReport rouge_corpus(const std::vector<Tokens>& candidates,
                         const std::vector<std::vector<Tokens>>& references, RougeMode mode,
                         std::optional<std::size_t> byte_cap) {
  if (candidates.size() != references.size()) {
    throw DataError("rouge: " + std::to_string(candidates.size()) + " candidates for " +
                    std::to_string(references.size()) + " reference sets");
  }
  RougeReport report;
  report.mode = mode;
  report.byte_cap = byte_cap;
  report.sentences = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens cand = byte_cap ? truncate_to_bytes(candidates[i], *byte_cap) : candidates[i];
    accumulate(report.r1, rouge_n(cand, references[i], 1));
    accumulate(report.r2, rouge_n(cand, references[i], 2));
    accumulate(report.rl, rouge_l(cand, references[i]));
  }
  if (!candidates.empty()) {
    const double n = static_cast<double>(candidates.size());
    divide(report.r1, n);
    divide(report.r2, n);
    divide(report.rl, n);
  }
  return report;
}

std::string format_report(const RougeReport& report) {
  std::string out = "metric\tprecision\trecall\tf1\treported\n";
  const bool recall = report.mode == RougeMode::kRecall;
  auto row = [&](const char* name, const RougeScore& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.6f\t%.6f\t%.6f\n", name, s.precision, s.recall, s.f1,
                  recall ? s.recall : s.f1);
    out += buf;
  };
  row("ROUGE-1", report.r1);
  row("ROUGE-2", report.r2);
  row("ROUGE-L", report.rl);
  return out;
}

double attention_entropy(const Tensor& weights, const Mask& source_padding) {
  const std::size_t n = weights.cols(), rows = weights.rows();
  if (!source_padding.empty() && source_padding.size() != n) {
    throw ShapeError("attention_entropy: padding width mismatch");
  }
  if (rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double h = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!source_padding.empty() && source_padding[c]) continue;
      const double p = weights.at(r, c);
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
  }
  return total / static_cast<double>(rows);
}

double attention_entropy(const AttentionRecord& record, std::size_t layer, std::size_t head,
                         const Mask& source_padding) {
  return attention_entropy(record.weight(layer, head), source_padding);
}

}  // namespace contrast
