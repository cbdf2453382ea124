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

// Data-parallel inner loops. Every kernel has an OpenMP version used by the
// library and a serial twin kept as the reference for tests and benchmarks.
// OpenMP reductions use a fixed chunking that does not depend on the thread
// count, so results are reproducible for any OMP_NUM_THREADS.

#include <cstddef>
#include <span>
#include <vector>

#include "xlad/common.hpp"
#include "xlad/ingest.hpp"
#include "xlad/model.hpp"

namespace xlad::kernels {

/// For each column of `events` (d x V), the best cosine against any column of
/// `prototypes` (d x m). Zero vectors score 0.
std::vector<double> event_max_similarity_serial(const Matrix& events, const Matrix& prototypes);
std::vector<double> event_max_similarity_omp(const Matrix& events, const Matrix& prototypes);

/// Per sequence, the minimum of `event_best` over its events.
std::vector<double> sequence_min_scores_serial(std::span<const LogSequence> sequences,
                                               std::span<const double> event_best);
std::vector<double> sequence_min_scores_omp(std::span<const LogSequence> sequences,
                                            std::span<const double> event_best);

/// Cosine of `query` against every column of `entries` (d x n).
std::vector<double> cosine_scan_serial(const Eigen::Ref<const Matrix>& entries, const Eigen::Ref<const Vector>& query);
std::vector<double> cosine_scan_omp(const Eigen::Ref<const Matrix>& entries, const Eigen::Ref<const Vector>& query);

std::vector<ForwardTrace> forward_batch_serial(const ModelParameters& params, const Matrix& projected,
                                               std::span<const Sample> batch);
std::vector<ForwardTrace> forward_batch_omp(const ModelParameters& params, const Matrix& projected,
                                            std::span<const Sample> batch);

/// Gradient of the weighted batch objective from cached traces. Logits are
/// recomputed from the traces' representations with the current heads, so
/// traces stay valid after head-only updates.
BatchResult gradient_batch_serial(const ModelParameters& params, const Matrix& inputs,
                                  std::span<const ForwardTrace> traces, std::span<const Sample> batch,
                                  LossWeights weights, GradientScope scope);
BatchResult gradient_batch_omp(const ModelParameters& params, const Matrix& inputs,
                               std::span<const ForwardTrace> traces, std::span<const Sample> batch,
                               LossWeights weights, GradientScope scope);

/// Predictions for sequences whose events index the columns of `inputs`.
std::vector<Prediction> predict_batch_serial(const ModelParameters& params, const Matrix& inputs,
                                             std::span<const LogSequence> sequences);
std::vector<Prediction> predict_batch_omp(const ModelParameters& params, const Matrix& inputs,
                                          std::span<const LogSequence> sequences);

}  // namespace xlad::kernels
