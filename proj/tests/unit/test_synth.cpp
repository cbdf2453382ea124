/* Copyright 2026 The xlad Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <doctest.h>

#include <fstream>
#include <iterator>
#include <set>

#include "run_dir.hpp"
#include "xlad/drain.hpp"
#include "xlad/embedder.hpp"
#include "xlad/pipeline.hpp"
#include "xlad/synth.hpp"

using namespace xlad;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One-hot vector per word of both logs, so words shared by no template pair
// have exactly zero cosine (hashed vectors are only nearly orthogonal).
std::filesystem::path write_one_hot_table(const RunConfig& cfg) {
  std::set<std::string> words;
  for (const auto& log : {cfg.source.log, cfg.target.log}) {
    const Preprocessor pre(PreprocessConfig{cfg.source.header_fields, default_mask_patterns()});
    std::ifstream in(log);
    for (std::string line; std::getline(in, line);) {
      Template t;
      t.tokens = pre(line);
      for (auto& w : template_words(t)) words.insert(w);
    }
  }
  const auto path = cfg.output_dir / "one_hot.txt";
  std::ofstream out(path);
  std::size_t k = 0;
  for (const auto& w : words) {
    out << w;
    for (std::size_t j = 0; j < words.size(); ++j) out << (j == k ? " 1" : " 0");
    out << '\n';
    ++k;
  }
  return path;
}

SyntheticCorpusSpec small_spec() {
  SyntheticCorpusSpec spec;
  spec.sequences_per_system = 400;
  spec.templates_per_system = 20;
  spec.long_tail_templates = 10;
  return spec;
}

}  // namespace

TEST_CASE("synthetic corpus is seed-deterministic") {
  testing::TempDir a("synth_a");
  testing::TempDir b("synth_b");
  const auto pa = write_synthetic_corpus(generate_synthetic_corpus(small_spec()), a.path());
  const auto pb = write_synthetic_corpus(generate_synthetic_corpus(small_spec()), b.path());
  CHECK(slurp(pa.source_log) == slurp(pb.source_log));
  CHECK(slurp(pa.target_log) == slurp(pb.target_log));
  CHECK(slurp(pa.target_labels) == slurp(pb.target_labels));
  auto other = small_spec();
  other.seed += 1;
  CHECK(generate_synthetic_corpus(other).target.lines != generate_synthetic_corpus(small_spec()).target.lines);
}

TEST_CASE("synthetic corpus shape") {
  const auto spec = small_spec();
  const auto corpus = generate_synthetic_corpus(spec);
  for (const auto* sys : {&corpus.source, &corpus.target}) {
    CHECK(sys->sessions.size() == spec.sequences_per_system);
    std::size_t anomalous = 0;
    std::set<std::string> ids;
    for (const auto& s : sys->sessions) {
      anomalous += s.label == Label::kAnomalous ? 1 : 0;
      ids.insert(s.block_id);
    }
    CHECK(ids.size() == sys->sessions.size());
    const double rate = static_cast<double>(anomalous) / static_cast<double>(sys->sessions.size());
    CHECK(rate == doctest::Approx(spec.anomaly_rate).epsilon(0.5));
  }
  CHECK(corpus.source.system_id == spec.source_system);
}

TEST_CASE("synthetic spec validation") {
  auto spec = small_spec();
  spec.anomaly_rate = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.shared_fraction = 1.0;
  spec.vocabulary_overlap = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.target_system = spec.source_system;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.rare_event = false;
  spec.order_corruption = false;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("fully shared templates route every target sequence general") {
  testing::TempDir dir("synth_shared");
  auto cfg = testing::tiny_config(dir.path());
  cfg.synthetic->shared_fraction = 1.0;
  cfg.synthetic->proprietary_fraction = 0.0;
  cfg.router = ThresholdPolicy::fixed(1.0 - 1e-9);
  Pipeline p(cfg);
  p.synthesize();
  p.parse();
  p.embed();
  p.route();
  CHECK(p.routing().proprietary.empty());
  CHECK(p.routing().general.size() == p.target().size());
}

TEST_CASE("no shared templates and disjoint vocabulary route every target sequence proprietary") {
  testing::TempDir dir("synth_disjoint");
  auto cfg = testing::tiny_config(dir.path());
  cfg.synthetic->shared_fraction = 0.0;
  cfg.synthetic->vocabulary_overlap = 0.0;
  cfg.synthetic->proprietary_fraction = 1.0;
  cfg.router = ThresholdPolicy::fixed(1e-6);
  Pipeline(cfg).synthesize();
  cfg.embedding.table = write_one_hot_table(cfg);
  Pipeline p(cfg);
  p.parse();
  p.embed();
  p.route();
  CHECK(p.routing().general.empty());
  CHECK(p.routing().proprietary.size() == p.target().size());
}
