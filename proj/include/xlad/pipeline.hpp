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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlad/config.hpp"
#include "xlad/distiller.hpp"
#include "xlad/embedder.hpp"
#include "xlad/meta_trainer.hpp"
#include "xlad/metrics.hpp"
#include "xlad/rag_kb.hpp"
#include "xlad/router.hpp"

namespace xlad {

/// File names inside a run directory.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path corpus() const { return dir / "corpus"; }
  std::filesystem::path source_sessions() const { return dir / "source_sessions.jsonl"; }
  std::filesystem::path target_sessions() const { return dir / "target_sessions.jsonl"; }
  /// Held-out target labels, `sequence_id<TAB>0|1`.
  std::filesystem::path ground_truth() const { return dir / "ground_truth.tsv"; }
  std::filesystem::path templates() const { return dir / "templates.tsv"; }
  std::filesystem::path embeddings() const { return dir / "embeddings.txt"; }
  std::filesystem::path routing() const { return dir / "routing.tsv"; }
  std::filesystem::path training_log() const { return dir / "training_log.jsonl"; }
  std::filesystem::path initial_model() const { return dir / "theta_0.ckpt"; }
  std::filesystem::path round_model(int r) const { return dir / ("theta_" + std::to_string(r) + ".ckpt"); }
  std::filesystem::path initial_kb() const { return dir / "kb_0.tsv"; }
  std::filesystem::path final_kb() const { return dir / "kb_final.tsv"; }
  std::filesystem::path rounds() const { return dir / "rounds.jsonl"; }
  std::filesystem::path selections() const { return dir / "selections.tsv"; }
  std::filesystem::path predictions() const { return dir / "predictions.tsv"; }
  std::filesystem::path metrics() const { return dir / "metrics.tsv"; }
  std::filesystem::path metrics_table() const { return dir / "metrics.txt"; }
  std::filesystem::path report() const { return dir / "report.json"; }
  std::filesystem::path effective_config() const { return dir / "effective_config.json"; }
  std::filesystem::path transcript() const { return dir / "llm_transcript.jsonl"; }
};

enum class Branch { kGeneral, kProprietary };

/// Which model or round produced a final label.
struct PredictionRecord {
  std::string sequence_id;
  Branch branch = Branch::kGeneral;
  Label label = Label::kNormal;
  /// "theta-0", "clean-round-<r>" or "final-inference".
  std::string origin;
};

/// `sequence_id<TAB>branch<TAB>label<TAB>origin` under a header row.
void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);

struct Evaluation {
  Metrics overall;
  std::optional<Metrics> general;
  std::optional<Metrics> proprietary;
  /// Initial and final small model on the proprietary subset.
  std::optional<Metrics> proprietary_theta0;
  std::optional<Metrics> proprietary_final_model;
};

/// Overall metrics and the per-branch ones for every branch that is present.
/// Every prediction must have a truth entry.
Evaluation evaluate_predictions(std::span<const PredictionRecord> predictions, const GroundTruth& truth);

/// `metric<TAB>value` lines; subsets are prefixed `general.`, `proprietary.`.
void write_evaluation(std::ostream& out, const Evaluation& eval);

/// Runs the stages over one run directory. Each stage either uses what an
/// earlier stage left in memory or reloads it from the directory, so the CLI
/// can run stages one at a time. Stage failures surface as StageError.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = nullptr);
  ~Pipeline();

  const RunConfig& config() const noexcept { return cfg_; }
  const RunPaths& paths() const noexcept { return paths_; }

  /// Writes the synthetic corpus (no-op without a synthetic section).
  void synthesize();
  /// Loads both systems, parses them with one shared template store.
  void parse();
  void embed();
  void route();
  void train();
  /// Builds K(0), runs the rounds and assigns every target sequence a label.
  void distill();
  Evaluation evaluate();

  /// Every stage in order; writes the report and the effective config.
  Evaluation run();

  /// Replaces the labeler built from the config (tests inject fakes).
  void set_labeler(std::unique_ptr<Labeler> labeler);

  // Results of the stages that ran or were reloaded.
  const std::vector<LogSequence>& source() const { return source_; }
  const std::vector<LogSequence>& target() const { return target_; }
  const GroundTruth& truth() const { return truth_; }
  const EventEmbeddings& embeddings() const { return embeddings_; }
  const RoutingResult& routing() const { return *routing_; }
  const ModelParameters& initial_model() const { return *theta0_; }
  const std::optional<TrainingResult>& training() const { return training_; }
  const std::optional<DistillationResult>& distillation() const { return distillation_; }
  const std::vector<PredictionRecord>& predictions() const { return predictions_; }
  const nlohmann::json& report() const { return report_; }

 private:
  template <typename F>
  void stage(const char* name, F&& body);
  void note(const std::string& line);

  void ensure_parsed();
  void ensure_embedded();
  void ensure_routed();
  void ensure_trained();
  void ensure_predictions();
  void write_report() const;

  RunConfig cfg_;
  RunPaths paths_;
  std::ostream* log_;
  std::vector<LogSequence> source_;
  std::vector<LogSequence> target_;
  GroundTruth truth_;
  bool parsed_ = false;
  std::size_t template_count_ = 0;
  EventEmbeddings embeddings_;
  bool embedded_ = false;
  std::optional<RoutingResult> routing_;
  std::optional<ModelParameters> theta0_;
  std::optional<TrainingResult> training_;
  std::optional<DistillationResult> distillation_;
  std::vector<PredictionRecord> predictions_;
  std::unique_ptr<Labeler> labeler_;
  nlohmann::json report_;
};

}  // namespace xlad
