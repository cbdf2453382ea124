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
#include <sstream>

#include "run_dir.hpp"
#include "xlad/pipeline.hpp"

using namespace xlad;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("end-to-end run writes every artifact and predicts each target once") {
  testing::TempDir dir("pipe_full");
  const auto cfg = testing::tiny_config(dir.path());
  Pipeline p(cfg);
  const auto eval = p.run();
  const RunPaths& paths = p.paths();
  for (const auto& f : {paths.routing(), paths.initial_model(), paths.round_model(1), paths.initial_kb(),
                        paths.final_kb(), paths.rounds(), paths.selections(), paths.predictions(), paths.metrics(),
                        paths.report(), paths.effective_config(), paths.training_log(), paths.templates()}) {
    CHECK_MESSAGE(std::filesystem::exists(f), f.string());
  }
  std::set<std::string> ids;
  for (const auto& r : p.predictions()) CHECK(ids.insert(r.sequence_id).second);
  std::set<std::string> targets;
  for (const auto& t : p.target()) targets.insert(t.sequence_id);
  CHECK(ids == targets);
  CHECK(eval.overall.total() == p.target().size());
  CHECK(p.report()["distillation"]["skipped"] == false);
  CHECK(config_to_json(load_config(paths.effective_config())) == config_to_json(cfg));
}

TEST_CASE("same config twice gives the same metrics file") {
  testing::TempDir a("pipe_det_a");
  testing::TempDir b("pipe_det_b");
  Pipeline(testing::tiny_config(a.path())).run();
  Pipeline(testing::tiny_config(b.path())).run();
  CHECK(slurp(RunPaths{a.path()}.metrics()) == slurp(RunPaths{b.path()}.metrics()));
  CHECK(slurp(RunPaths{a.path()}.predictions()) == slurp(RunPaths{b.path()}.predictions()));
}

TEST_CASE("zero rounds skip distillation and keep the initial model's labels") {
  testing::TempDir dir("pipe_r0");
  auto cfg = testing::tiny_config(dir.path());
  cfg.distillation.rounds = 0;
  Pipeline p(cfg);
  p.run();
  CHECK(p.report()["distillation"]["skipped"] == true);
  for (const auto& r : p.predictions()) CHECK(r.origin == "theta-0");
  CHECK_FALSE(std::filesystem::exists(p.paths().round_model(1)));
}

TEST_CASE("stages run one at a time reload earlier artifacts") {
  testing::TempDir dir("pipe_stages");
  const auto cfg = testing::tiny_config(dir.path());
  {
    Pipeline p(cfg);
    p.synthesize();
    p.parse();
  }
  { Pipeline(cfg).embed(); }
  { Pipeline(cfg).route(); }
  { Pipeline(cfg).train(); }
  { Pipeline(cfg).distill(); }
  const auto staged = Pipeline(cfg).evaluate();

  testing::TempDir whole("pipe_whole");
  const auto full = Pipeline(testing::tiny_config(whole.path())).run();
  CHECK(staged.overall.tp == full.overall.tp);
  CHECK(staged.overall.fp == full.overall.fp);
  CHECK(staged.overall.fn == full.overall.fn);
}

TEST_CASE("a failing stage is named in the error") {
  testing::TempDir dir("pipe_fail");
  auto cfg = testing::tiny_config(dir.path());
  cfg.synthetic.reset();
  cfg.source.system_id = "a";
  cfg.source.log = dir.path() / "missing.log";
  cfg.target.system_id = "b";
  cfg.target.log = dir.path() / "missing_too.log";
  Pipeline p(cfg);
  try {
    p.parse();
    FAIL("parse should have failed");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
  }

  testing::TempDir empty("pipe_empty");
  Pipeline q(testing::tiny_config(empty.path()));
  try {
    q.train();
    FAIL("train without parsed artifacts should fail");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load-parsed");
  }
}

TEST_CASE("evaluation splits metrics by branch") {
  GroundTruth truth;
  truth.insert("a", Label::kAnomalous);
  truth.insert("b", Label::kNormal);
  truth.insert("c", Label::kAnomalous);
  const std::vector<PredictionRecord> preds{{"a", Branch::kGeneral, Label::kAnomalous, "theta-0"},
                                            {"b", Branch::kProprietary, Label::kAnomalous, "clean-round-0"},
                                            {"c", Branch::kProprietary, Label::kNormal, "final-inference"}};
  const auto eval = evaluate_predictions(preds, truth);
  CHECK(eval.overall.tp == 1);
  CHECK(eval.overall.fp == 1);
  CHECK(eval.overall.fn == 1);
  REQUIRE(eval.general.has_value());
  CHECK(eval.general->tp == 1);
  REQUIRE(eval.proprietary.has_value());
  CHECK(eval.proprietary->tp == 0);

  std::stringstream io;
  write_predictions(io, preds);
  const auto back = read_predictions(io);
  REQUIRE(back.size() == 3);
  CHECK(back[2].origin == "final-inference");
  CHECK(back[1].branch == Branch::kProprietary);

  GroundTruth partial;
  partial.insert("a", Label::kNormal);
  CHECK_THROWS_AS(evaluate_predictions(preds, partial), Error);
}
