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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlad/embedder.hpp"
#include "xlad/ingest.hpp"
#include "xlad/llm_labeler.hpp"
#include "xlad/model.hpp"
#include "xlad/optimizer.hpp"
#include "xlad/rag_kb.hpp"

namespace xlad {

enum class EpsilonPolicy { kDynamic, kStatic };

EpsilonPolicy parse_epsilon_policy(const std::string& text);
std::string to_string(EpsilonPolicy policy);

struct DistillerConfig {
  int rounds = 5;
  double epsilon_start = 0.9;
  double epsilon_step = 0.05;
  double epsilon_min = 0.5;
  EpsilonPolicy policy = EpsilonPolicy::kDynamic;
  std::size_t fine_tune_epochs = 3;
  double learning_rate = 3e-3;
  std::size_t batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  /// Fine-tune only the anomaly head.
  bool freeze_extractor = false;
  /// Train each round on every clean sample so far. When false, only that
  /// round's selections are used, which lets small late pools overwrite what
  /// earlier rounds taught.
  bool cumulative_fine_tune = true;
  std::uint64_t seed = 42;

  void validate() const;
};

/// max(eps0 - r * step, eps_min)
double dynamic_threshold(int r, double eps0 = 0.9, double step = 0.05, double eps_min = 0.5);
/// The configured policy's threshold for round r (static keeps eps0).
double round_threshold(const DistillerConfig& cfg, int r);

enum class PoolVerdict { kClean, kNoisy };

/// Clean iff both labels agree and the small model's confidence reaches eps.
PoolVerdict select(Label y_llm, Label y_sm, double confidence, double eps);

struct SelectionOutcome {
  std::string sequence_id;
  std::optional<Label> y_llm;
  Label y_sm = Label::kNormal;
  double confidence = 0.5;
  PoolVerdict verdict = PoolVerdict::kNoisy;
  LabelStatus llm_status = LabelStatus::kLabeled;
  int round = 0;
};

/// Supervised BCE on (sequence, label) pairs for a fixed number of epochs;
/// an empty pool returns the parameters unchanged.
ModelParameters fine_tune(const ModelParameters& params, const Matrix& inputs,
                          std::span<const std::pair<const LogSequence*, Label>> clean, const DistillerConfig& cfg,
                          std::uint64_t seed);

struct RoundReport {
  int round = 0;
  double epsilon = 0.0;
  std::size_t pool = 0;
  std::size_t clean = 0;
  std::size_t noisy = 0;
  std::size_t cumulative_clean = 0;
  std::size_t proprietary = 0;
  /// Over sequences that received an LLM label.
  double agreement_rate = 0.0;
  std::size_t llm_unavailable = 0;
  std::size_t llm_defaulted = 0;
  std::size_t llm_dropped = 0;
  /// Small-model confidence over [0.5, 1] in 10 equal bins; 1.0 falls in the last.
  std::array<std::size_t, 10> confidence_histogram{};
  double fine_tune_loss_before = 0.0;
  double fine_tune_loss_after = 0.0;
  /// Filled by evaluation code when ground truth is available.
  std::optional<double> clean_accuracy;
};

void write_round_report(std::ostream& out, const RoundReport& report);

enum class LabelSource { kClean, kFinalInference };

struct FinalLabel {
  std::string sequence_id;
  Label label = Label::kNormal;
  LabelSource source = LabelSource::kFinalInference;
  /// Round in which a clean label was assigned, -1 for final inference.
  int round = -1;
};

struct DistillationResult {
  /// theta(0) ... theta(rounds executed).
  std::vector<ModelParameters> models;
  /// One per proprietary sequence, in input order.
  std::vector<FinalLabel> labels;
  std::vector<RoundReport> rounds;
  /// Per round, every selection decision in pool order.
  std::vector<std::vector<SelectionOutcome>> selections;
  KnowledgeBase kb;

  const ModelParameters& final_model() const { return models.back(); }
};

/// Up to cfg.rounds rounds of: label the remaining pool with the LLM and the
/// small model, move agreeing confident sequences to the clean pool with
/// their agreed label, fine-tune on the clean samples (all so far, or only
/// the round's, per cfg) and add the round's samples to the knowledge base. Whatever is still noisy afterwards is labeled by
/// the final model.
DistillationResult run_distillation(std::span<const LogSequence> proprietary, const ModelParameters& sm0,
                                    KnowledgeBase kb0, Labeler& labeler, const EventEmbeddings& embeddings,
                                    const DistillerConfig& cfg);

}  // namespace xlad
