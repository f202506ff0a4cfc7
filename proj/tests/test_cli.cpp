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

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "contrast/config.hpp"
#include "contrast/corpus.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr together
};

Result run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" CONTRAST_CLI "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Generated corpus plus a trained two-layer checkpoint shared by the cases.
const fs::path& workspace() {
  static const fs::path dir = [] {
    const fs::path d = testutil::temp_dir("cli");
    auto g = run("gen-corpus --task salient_extract --pairs 80 --vocab-size 24 --min-len 4 --max-len 8 "
                 "--seed 3 --prefix data/c",
                 d);
    REQUIRE(g.code == 0);
    std::ofstream(d / "desk.cfg") << "model.n_layers = 2\nmodel.d_model = 16\nmodel.n_heads = 2\n"
                                     "model.d_ffn = 32\nmodel.vocab_size = 24\nmodel.dropout = 0.1\n"
                                     "train_source = data/c.src\ntrain_target = data/c.tgt\n"
                                     "vocab = data/c.vocab\nbatch_size = 8\nmax_epochs = 2\n"
                                     "output_dir = run\n";
    auto t = run("train --config desk.cfg --quiet", d);
    REQUIRE(t.code == 0);
    std::ofstream src(d / "few.src"), tgt(d / "few.tgt");
    const auto s = lines_of(slurp(d / "data/c.src")), tt = lines_of(slurp(d / "data/c.tgt"));
    for (int i = 0; i < 6; ++i) {
      src << s[i] << '\n';
      tgt << tt[i] << '\n';
    }
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("exit code contract") {
  const fs::path& d = workspace();
  auto missing = run("train --config desk.cfg --set train_source=data/none.src --quiet", d);
  CHECK(missing.code == 2);
  CHECK(missing.out.find("data/none.src") != std::string::npos);

  auto negated = run("train --config desk.cfg --set objective=negated_softmax", d);
  CHECK(negated.code == 2);
  CHECK(negated.out.find("Known pitfall: negated-softmax objective") != std::string::npos);
  std::ofstream(d / "negated.cfg") << "objective = negated_softmax\n";
  auto in_file = run("train --config negated.cfg", d);
  CHECK(in_file.code == 2);
  CHECK(in_file.out.find("failed to train because") != std::string::npos);

  CHECK(run("train --config desk.cfg --set nonsense=1", d).out.find("'nonsense'") != std::string::npos);
  CHECK(run("decode --checkpoint run/model.ckpt", d).code == 2);
  CHECK(run("frobnicate", d).code == 2);
  CHECK(run("eval --candidates few.tgt --references nowhere.txt", d).code == 2);
  CHECK(run("decode --checkpoint run/model.ckpt --input few.src --vocab data/c.vocab --beam 0", d).code == 2);
  CHECK(run("--help", d).code == 0);

  std::ofstream(d / "corrupt.ckpt") << "garbage\n";
  CHECK(run("decode --checkpoint corrupt.ckpt --input few.src", d).code == 1);
}

TEST_CASE("decode --no-po equals decode --lambda 0") {
  const fs::path& d = workspace();
  auto a = run("decode --checkpoint run/model.ckpt --vocab data/c.vocab --input few.src --no-po", d);
  auto b = run("decode --checkpoint run/model.ckpt --vocab data/c.vocab --input few.src --lambda 0", d);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(lines_of(a.out).size() == 6);
  auto c = run("decode --checkpoint run/model.ckpt --vocab data/c.vocab --input few.src --mask-strategy top-2 "
               "--opponent-fn reciprocal --output dec.txt",
               d);
  CHECK(c.code == 0);
  CHECK(lines_of(slurp(d / "dec.txt")).size() == 6);
}

TEST_CASE("decode --dump-attention writes one CSV per head plus the opponent") {
  const fs::path& d = workspace();
  auto r = run("decode --checkpoint run/model.ckpt --vocab data/c.vocab --input few.src --dump-attention att", d);
  REQUIRE(r.code == 0);
  const auto outputs = lines_of(r.out);
  REQUIRE(outputs.size() == 6);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d / "att")) files += e.path().extension() == ".csv";
  CHECK(files == 6 * (2 * 2 + 1));
  const auto vocab = contrast::Vocab::synthetic(24);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    CAPTURE(i);
    const auto rows = lines_of(slurp(d / "att" / ("sentence-" + std::to_string(i + 1) + ".layer-1.head-0.csv")));
    CHECK(rows.size() == vocab.encode(outputs[i]).size() + 2);  // header, tokens, eos
  }
}

TEST_CASE("eval on identical files prints 1.0 rows") {
  const fs::path& d = workspace();
  auto r = run("eval --candidates few.tgt --references few.tgt", d);
  REQUIRE(r.code == 0);
  const auto rows = lines_of(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "metric\tprecision\trecall\tf1\treported");
  for (std::size_t i = 1; i < 4; ++i) CHECK(rows[i].find("\t1.000000\t1.000000\t1.000000\t1.000000") != std::string::npos);

  std::ofstream(d / "multi.ref") << "x y\ta b c\nq\n";
  std::ofstream(d / "multi.cand") << "a b c\nq\n";
  auto m = run("eval --candidates multi.cand --references multi.ref --mode recall --byte-cap 75", d);
  CHECK(m.code == 0);
  CHECK(m.out.find("ROUGE-1\t1.000000\t1.000000\t1.000000\t1.000000") != std::string::npos);
}

TEST_CASE("inspect-heads is deterministic and its file feeds train") {
  const fs::path& d = workspace();
  const std::string args = "inspect-heads --checkpoint run/model.ckpt --vocab data/c.vocab --source data/c.src "
                           "--target data/c.tgt --alignments data/c.align --output heads.cfg";
  auto a = run(args, d);
  auto b = run(args, d);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(lines_of(a.out).size() == 1 + 2 * 2);
  const auto choice = contrast::read_head_selection(d / "heads.cfg");
  auto t = run("train --config desk.cfg --set head_selection_file=heads.cfg --set init_checkpoint=run/model.ckpt "
               "--set max_epochs=1 --set output_dir=cont --quiet",
               d);
  REQUIRE(t.code == 0);
  const auto manifest = contrast::load_run_config(d / "cont" / "manifest.cfg");
  CHECK(manifest.opponent.selected_layer == choice.layer);
  CHECK(manifest.opponent.selected_head == choice.head);

  std::ofstream(d / "short.align") << "0-0\n";
  CHECK(run("inspect-heads --checkpoint run/model.ckpt --vocab data/c.vocab --source data/c.src "
            "--target data/c.tgt --alignments short.align",
            d)
            .code == 2);
}

TEST_CASE("export-heatmaps writes normalized CSV, matching SVG and masked opponent CSV") {
  const fs::path& d = workspace();
  auto r = run("export-heatmaps --checkpoint run/model.ckpt --vocab data/c.vocab --source few.src --target few.tgt "
               "--out-dir hm --layer 1 --head 1",
               d);
  REQUIRE(r.code == 0);
  const auto sources = lines_of(slurp(d / "few.src"));
  const auto targets = lines_of(slurp(d / "few.tgt"));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    CAPTURE(i);
    const std::string stem = "hm/sentence-" + std::to_string(i + 1);
    const auto src_len = contrast::Vocab::synthetic(24).encode(sources[i]).size();
    const auto tgt_len = contrast::Vocab::synthetic(24).encode(targets[i]).size() + 1;  // plus eos
    for (const char* kind : {".csv", ".opponent.csv"}) {
      const auto rows = lines_of(slurp(d / (stem + kind)));
      REQUIRE(rows.size() == tgt_len + 1);
      for (std::size_t row = 1; row < rows.size(); ++row) {
        std::istringstream cells(rows[row]);
        std::string cell;
        std::getline(cells, cell, ',');
        double total = 0.0;
        std::size_t n = 0, zeros = 0;
        while (std::getline(cells, cell, ',')) {
          const double v = std::stod(cell);
          total += v;
          zeros += v == 0.0;
          ++n;
        }
        CHECK(n == src_len);
        CHECK(std::abs(total - 1.0) < 1e-6);
        if (std::string(kind) == ".opponent.csv") CHECK(zeros == 1);
      }
    }
    const std::string svg = slurp(d / (stem + ".svg"));
    const std::regex cell("<rect class=\"cell\"");
    CHECK(static_cast<std::size_t>(std::distance(std::sregex_iterator(svg.begin(), svg.end(), cell),
                                                 std::sregex_iterator())) == tgt_len * src_len);
  }
  CHECK(run("export-heatmaps --checkpoint run/model.ckpt --vocab data/c.vocab --source few.src --target few.tgt "
            "--out-dir hm2 --layer 2",
            d)
            .code == 2);
  CHECK(run("export-heatmaps --checkpoint run/model.ckpt --vocab data/c.vocab --source few.src --target few.tgt "
            "--out-dir hm3 --average --layer 0",
            d)
            .code == 0);
}

TEST_CASE("train is reproducible from its manifest; lambda 0 matches the baseline transformer") {
  const fs::path& d = workspace();
  auto rerun = run("train --config run/manifest.cfg --set output_dir=rerun --quiet", d);
  REQUIRE(rerun.code == 0);
  const auto original = contrast::load_run_config(d / "run" / "manifest.cfg");
  CHECK(rerun.out.find("hash\t" + original.manifest.at("manifest.checkpoint_hash")) != std::string::npos);

  REQUIRE(run("train --config desk.cfg --set lambda=0 --set output_dir=l0 --quiet", d).code == 0);
  REQUIRE(run("train --config desk.cfg --set contrastive=false --set output_dir=plain --quiet", d).code == 0);
  const auto l0 = contrast::load_checkpoint(d / "l0" / "model.ckpt");
  const auto plain = contrast::load_checkpoint(d / "plain" / "model.ckpt");
  CHECK(contrast::params_hash(l0.params, false) == contrast::params_hash(plain.params));
}

TEST_CASE("gen-corpus is deterministic") {
  const fs::path& d = workspace();
  REQUIRE(run("gen-corpus --pairs 30 --seed 11 --prefix g1/x", d).code == 0);
  REQUIRE(run("gen-corpus --pairs 30 --seed 11 --prefix g2/x", d).code == 0);
  for (const char* ext : {".src", ".tgt", ".align", ".vocab"}) {
    CHECK(slurp(d / "g1" / (std::string("x") + ext)) == slurp(d / "g2" / (std::string("x") + ext)));
  }
  CHECK(run("gen-corpus --task summarize --prefix g3/x", d).code == 2);
}

TEST_CASE("ablate emits the comparison table") {
  const fs::path& d = workspace();
  auto r = run("ablate --train-pairs 40 --test-pairs 6 --pretrain-epochs 1 --continue-epochs 1 --lambda 0.5 "
               "--quiet --output ablation.tsv",
               d);
  REQUIRE(r.code == 0);
  const auto rows = lines_of(slurp(d / "ablation.tsv"));
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].rfind("variant\tmask\thead_choice", 0) == 0);
}
