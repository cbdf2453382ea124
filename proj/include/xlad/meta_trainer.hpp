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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xlad/ingest.hpp"
#include "xlad/metrics.hpp"
#include "xlad/model.hpp"
#include "xlad/optimizer.hpp"

namespace xlad {

struct TrainingConfig {
  double delta = 1e-3;   // inner adaptation step
  double lambda = 3e-3;  // domain head rate
  double kappa = 3e-3;   // anomaly head rate
  double alpha = 3e-3;   // meta (extractor) rate
  double beta = 1.0;     // adversarial weight
  double gamma = 1.0;    // classification weight
  int inner_steps = 1;
  std::size_t batch_size = 256;
  std::size_t tasks_per_epoch = 16;
  /// Tasks sharing one head update and one meta update.
  std::size_t tasks_per_step = 1;
  std::size_t epochs = 12;
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double holdout_fraction = 0.1;
  std::size_t patience = 5;
  std::size_t hidden = 128;

  /// Throws Error naming the first invalid field.
  void validate() const;
};

/// Indices into the source and target pools.
struct TaskBatch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

/// Support and query batches never share a sequence.
struct MetaTask {
  std::size_t task_id = 0;
  TaskBatch support;
  TaskBatch query;
};

/// Sequences the trainer reads, with events indexing the columns of `inputs`.
/// Source sequences must be labeled; target labels are never read.
struct TrainingPools {
  std::span<const LogSequence> source;
  std::span<const LogSequence> target;
  const Matrix* inputs = nullptr;
};

/// Class-balanced source batches (half normal, half anomalous while both
/// classes last) and uniform target batches, support and query disjoint.
std::vector<MetaTask> sample_meta_tasks(std::span<const LogSequence> source, std::span<const LogSequence> target,
                                        const TrainingConfig& cfg, std::size_t count, std::mt19937_64& rng);

/// Samples for one batch: labeled source, unlabeled target.
std::vector<Sample> make_samples(const TrainingPools& pools, const TaskBatch& batch);

/// Updates only the domain head. The head descends the domain BCE over every
/// support batch, i.e. it learns to tell the systems apart.
BatchLoss step_domain_classifier(ModelParameters& params, const TrainingPools& pools,
                                 std::span<const MetaTask> tasks, Optimizer& opt);

/// Updates only the anomaly head by descending the classification loss on the
/// labeled source support data.
BatchLoss step_anomaly_classifier(ModelParameters& params, const TrainingPools& pools,
                                  std::span<const MetaTask> tasks, Optimizer& opt);

/// Extractor parameters after `inner_steps` plain gradient steps of size
/// delta on gamma * L_c - beta * L_ad over the task's support set. `params`
/// is not modified.
Vector inner_adapt(const ModelParameters& params, const TrainingPools& pools, const MetaTask& task,
                   const TrainingConfig& cfg);

/// First-order meta update: for each task the query gradient is taken at the
/// adapted extractor, the gradients are summed in task order and applied to
/// the extractor. Returns the summed query objective.
double meta_step(ModelParameters& params, const TrainingPools& pools, std::span<const MetaTask> tasks,
                 const TrainingConfig& cfg, Optimizer& opt);

struct EpochRecord {
  std::size_t epoch = 0;
  double classification_loss = 0.0;
  double adversarial_loss = 0.0;
  double query_loss = 0.0;
  double holdout_loss = 0.0;
  double holdout_f1 = 0.0;
};

struct TrainingResult {
  ModelParameters params;
  std::vector<EpochRecord> log;
  /// Source indices held out for early stopping.
  std::vector<std::size_t> holdout;
  std::size_t best_epoch = 0;
  Metrics holdout_metrics;
};

/// 10%-style stratified split of labeled sequences: returns held-out indices
/// in ascending order.
std::vector<std::size_t> stratified_holdout(std::span<const LogSequence> source, double fraction,
                                            std::mt19937_64& rng);

/// Runs domain step, anomaly step, inner adaptation and meta step over
/// tasks_per_epoch tasks per epoch. The parameters with the lowest held-out
/// source BCE are returned; training stops after `patience` epochs without
/// improvement.
TrainingResult train(std::span<const LogSequence> source, std::span<const LogSequence> target_general,
                     const Matrix& inputs, const TrainingConfig& cfg);

void write_training_log(std::ostream& out, std::span<const EpochRecord> log);

/// Predictions for labeled sequences against their labels.
Metrics evaluate_sequences(const ModelParameters& params, const Matrix& inputs,
                           std::span<const LogSequence> sequences);

}  // namespace xlad
