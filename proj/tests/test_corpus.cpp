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

#include <fstream>

#include "contrast/corpus.hpp"
#include "contrast/errors.hpp"
#include "test_util.hpp"

using namespace contrast;

namespace {

void write_raw(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("copy task example and invariants") {
  SyntheticTaskSpec spec;
  spec.task = SyntheticTask::kCopy;
  spec.min_source_length = 3;
  spec.max_source_length = 3;
  spec.vocab_size = 12;
  auto corpus = generate(spec, 50);
  for (const auto& p : corpus) {
    CHECK(p.source.size() == 3);
    CHECK(p.target == p.source);
    CHECK(p.alignment.pairs == std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}});
    for (TokenId t : p.source) CHECK(t >= static_cast<TokenId>(kReservedTokens));
  }
}

TEST_CASE("salient extraction structure") {
  SyntheticTaskSpec spec;
  spec.seed = 42;
  auto corpus = generate(spec, 300);
  for (const auto& p : corpus) {
    CHECK(p.source.size() >= 2);
    std::vector<TokenId> salient;
    for (TokenId t : p.source)
      if (is_salient(t, spec.vocab_size)) salient.push_back(t);
    CHECK(salient == p.target);
    CHECK(!p.target.empty());
    // Each target position aligned exactly once, to an equal source token.
    std::vector<int> seen(p.target.size(), 0);
    for (auto [s, t] : p.alignment.pairs) {
      ++seen[t];
      CHECK(p.source[s] == p.target[t]);
    }
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("salience 1.0 degenerates to copy and seeds are deterministic") {
  SyntheticTaskSpec spec;
  spec.salience_ratio = 1.0;
  for (const auto& p : generate(spec, 40)) {
    CHECK(p.target == p.source);
    for (std::size_t i = 0; i < p.source.size(); ++i) CHECK(p.alignment.pairs.count({i, i}) == 1);
  }
  spec.salience_ratio = 0.4;
  auto a = generate(spec, 30), b = generate(spec, 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].source == b[i].source);
    CHECK(a[i].target == b[i].target);
    CHECK(a[i].alignment == b[i].alignment);
  }
}

TEST_CASE("generator rejects bad specs") {
  SyntheticTaskSpec spec;
  spec.vocab_size = 5;
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
  spec = {};
  spec.min_source_length = 1;
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
  spec = {};
  spec.salience_ratio = 0.0;
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
  CHECK_THROWS_AS(generate(SyntheticTaskSpec{}, 0), UsageError);
}

TEST_CASE("vocabulary round trips") {
  Vocab v({"the", "cat", "sat"});
  CHECK(v.size() == kReservedTokens + 3);
  CHECK(v.id("the") == 4);
  CHECK(v.id("dog") == kUnkId);
  CHECK(v.decode(v.encode("the cat sat")) == "the cat sat");
  std::vector<TokenId> with_marks{kBosId, 4, 5, kEosId, 6};
  CHECK(v.decode(with_marks) == "the cat");

  auto dir = testutil::temp_dir("vocab");
  v.save(dir / "v.txt");
  CHECK(read_lines(dir / "v.txt") == std::vector<std::string>{"the", "cat", "sat"});
  Vocab back = Vocab::load(dir / "v.txt");
  for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) CHECK(back.token(i) == v.token(i));
  CHECK_THROWS_AS(Vocab({"a", "a"}), DataError);
}

TEST_CASE("alignment lines") {
  auto a = parse_alignment_line("0-0 2-1 1-1", 3, 2);
  CHECK(a.pairs == std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 1}});
  CHECK(format_alignment_line(a) == "0-0 1-1 2-1");
  CHECK_THROWS_AS(parse_alignment_line("0-3", 3, 2), DataError);
  CHECK_THROWS_AS(parse_alignment_line("0:1", 3, 2), DataError);
}

TEST_CASE("parallel loading: CRLF, unknown tokens, mismatches") {
  auto dir = testutil::temp_dir("parallel");
  Vocab v({"a", "b", "c"});
  write_raw(dir / "lf.src", "a b c\nc b\n");
  write_raw(dir / "lf.tgt", "a\nb\n");
  write_raw(dir / "crlf.src", "a b c\r\nc b\r\n");
  write_raw(dir / "crlf.tgt", "a\r\nb\r\n");
  auto lf = load_parallel(dir / "lf.src", dir / "lf.tgt", v);
  auto crlf = load_parallel(dir / "crlf.src", dir / "crlf.tgt", v);
  CHECK(lf.sources == crlf.sources);
  CHECK(lf.targets == crlf.targets);
  CHECK(lf.sources[0] == std::vector<TokenId>{4, 5, 6});

  write_raw(dir / "unk.src", "a zz b zz\nyy\n");
  std::set<std::string> unknown;
  auto u = load_parallel(dir / "unk.src", dir / "lf.tgt", v, &unknown);
  CHECK(u.sources[0] == std::vector<TokenId>{4, kUnkId, 5, kUnkId});
  CHECK(unknown == std::set<std::string>{"yy", "zz"});

  write_raw(dir / "short.tgt", "a\n");
  try {
    load_parallel(dir / "lf.src", dir / "short.tgt", v);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('1') != std::string::npos);
  }
  write_raw(dir / "gap.tgt", "a\n\n");
  try {
    load_parallel(dir / "lf.src", dir / "gap.tgt", v);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("written corpora load back with their alignments") {
  SyntheticTaskSpec spec;
  auto corpus = generate(spec, 25);
  Vocab v = Vocab::synthetic(spec.vocab_size);
  auto dir = testutil::temp_dir("corpus");
  write_corpus(dir / "train", corpus, v);
  auto text = load_parallel(dir / "train.src", dir / "train.tgt", v);
  auto align = load_alignments(dir / "train.align", text);
  REQUIRE(text.sources.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(text.sources[i] == corpus[i].source);
    CHECK(text.targets[i] == corpus[i].target);
    CHECK(align[i] == corpus[i].alignment);
  }
}
