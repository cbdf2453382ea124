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

#include "xlad/kernels.hpp"

#include <algorithm>
#include <limits>

#include "model_detail.hpp"

namespace xlad::kernels {
namespace {

// Reductions split work into at most this many contiguous chunks regardless of
// the number of threads, then combine the chunk partials in chunk order.
constexpr std::ptrdiff_t kReductionChunks = 16;

Vector column_norms(const Matrix& m) { return m.colwise().norm().transpose(); }

double best_similarity(const Matrix& events, const Vector& event_norms, const Matrix& prototypes,
                       const Vector& proto_norms, Eigen::Index i) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < prototypes.cols(); ++j) {
    double cos = 0.0;
    if (event_norms[i] > 0.0 && proto_norms[j] > 0.0) {
      cos = events.col(i).dot(prototypes.col(j)) / (event_norms[i] * proto_norms[j]);
    }
    best = std::max(best, cos);
  }
  return best;
}

void check_similarity_inputs(const Matrix& events, const Matrix& prototypes) {
  if (prototypes.cols() == 0) throw Error("source prototype set is empty");
  if (events.rows() != prototypes.rows()) throw Error("embedding/prototype dimension mismatch");
  if (!events.allFinite() || !prototypes.allFinite()) throw Error("non-finite embedding");
}

double sequence_min(const LogSequence& seq, std::span<const double> event_best) {
  if (seq.events.empty()) throw Error("cannot score empty sequence " + seq.sequence_id);
  double score = std::numeric_limits<double>::infinity();
  for (const int e : seq.events) {
    if (e < 0 || static_cast<std::size_t>(e) >= event_best.size()) {
      throw Error("event " + std::to_string(e) + " of " + seq.sequence_id + " has no embedding");
    }
    score = std::min(score, event_best[static_cast<std::size_t>(e)]);
  }
  return score;
}

// Runs `body(i)` for i in [0, n) in parallel, rethrowing the first error after
// the parallel region.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(xlad_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

struct Partial {
  BatchLoss loss;
  Gradients grads;
  Matrix d_projected;
};

Partial make_partial(const ModelParameters& params, Eigen::Index columns) {
  return Partial{BatchLoss{}, Gradients(params.dims()),
                 Matrix::Zero(static_cast<Eigen::Index>(3 * params.dims().hidden), columns)};
}

void accumulate(const ModelParameters& params, std::span<const ForwardTrace> traces, std::span<const Sample> batch,
                LossWeights weights, GradientScope scope, const detail::BatchNormalizer& norm, std::size_t begin,
                std::size_t end, Partial& partial) {
  for (std::size_t i = begin; i < end; ++i) {
    const auto up = detail::sample_upstream(params, traces[i], batch[i], weights, norm, partial.loss);
    detail::backprop_sequence(params, traces[i], up, scope, partial.grads, partial.d_projected);
  }
}

void check_traces(std::span<const ForwardTrace> traces, std::span<const Sample> batch) {
  if (traces.size() != batch.size()) throw Error("one forward trace per sample required");
}

}  // namespace

std::vector<double> event_max_similarity_serial(const Matrix& events, const Matrix& prototypes) {
  check_similarity_inputs(events, prototypes);
  const Vector en = column_norms(events);
  const Vector pn = column_norms(prototypes);
  std::vector<double> out(static_cast<std::size_t>(events.cols()));
  for (Eigen::Index i = 0; i < events.cols(); ++i) out[static_cast<std::size_t>(i)] = best_similarity(events, en, prototypes, pn, i);
  return out;
}

std::vector<double> event_max_similarity_omp(const Matrix& events, const Matrix& prototypes) {
  check_similarity_inputs(events, prototypes);
  const Vector en = column_norms(events);
  const Vector pn = column_norms(prototypes);
  std::vector<double> out(static_cast<std::size_t>(events.cols()));
  const std::ptrdiff_t n = events.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = best_similarity(events, en, prototypes, pn, i);
  return out;
}

std::vector<double> sequence_min_scores_serial(std::span<const LogSequence> sequences,
                                               std::span<const double> event_best) {
  std::vector<double> out(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) out[i] = sequence_min(sequences[i], event_best);
  return out;
}

std::vector<double> sequence_min_scores_omp(std::span<const LogSequence> sequences,
                                            std::span<const double> event_best) {
  std::vector<double> out(sequences.size());
  parallel_for(static_cast<std::ptrdiff_t>(sequences.size()), [&](std::ptrdiff_t i) {
    out[static_cast<std::size_t>(i)] = sequence_min(sequences[static_cast<std::size_t>(i)], event_best);
  });
  return out;
}

std::vector<double> cosine_scan_serial(const Eigen::Ref<const Matrix>& entries, const Eigen::Ref<const Vector>& query) {
  if (entries.cols() > 0 && entries.rows() != query.size()) throw Error("query dimension mismatch");
  const double qn = query.norm();
  std::vector<double> out(static_cast<std::size_t>(entries.cols()));
  for (Eigen::Index j = 0; j < entries.cols(); ++j) {
    const double en = entries.col(j).norm();
    out[static_cast<std::size_t>(j)] = (qn > 0.0 && en > 0.0) ? entries.col(j).dot(query) / (qn * en) : 0.0;
  }
  return out;
}

std::vector<double> cosine_scan_omp(const Eigen::Ref<const Matrix>& entries, const Eigen::Ref<const Vector>& query) {
  if (entries.cols() > 0 && entries.rows() != query.size()) throw Error("query dimension mismatch");
  const double qn = query.norm();
  std::vector<double> out(static_cast<std::size_t>(entries.cols()));
  const std::ptrdiff_t n = entries.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const double en = entries.col(j).norm();
    out[static_cast<std::size_t>(j)] = (qn > 0.0 && en > 0.0) ? entries.col(j).dot(query) / (qn * en) : 0.0;
  }
  return out;
}

std::vector<ForwardTrace> forward_batch_serial(const ModelParameters& params, const Matrix& projected,
                                               std::span<const Sample> batch) {
  std::vector<ForwardTrace> traces;
  traces.reserve(batch.size());
  for (const auto& sample : batch) traces.push_back(forward_projected(params, projected, sample.steps));
  return traces;
}

std::vector<ForwardTrace> forward_batch_omp(const ModelParameters& params, const Matrix& projected,
                                            std::span<const Sample> batch) {
  std::vector<ForwardTrace> traces(batch.size());
  parallel_for(static_cast<std::ptrdiff_t>(batch.size()), [&](std::ptrdiff_t i) {
    traces[static_cast<std::size_t>(i)] = forward_projected(params, projected, batch[static_cast<std::size_t>(i)].steps);
  });
  return traces;
}

BatchResult gradient_batch_serial(const ModelParameters& params, const Matrix& inputs,
                                  std::span<const ForwardTrace> traces, std::span<const Sample> batch,
                                  LossWeights weights, GradientScope scope) {
  check_traces(traces, batch);
  const auto norm = detail::normalizer_for(batch, weights);
  Partial partial = make_partial(params, inputs.cols());
  accumulate(params, traces, batch, weights, scope, norm, 0, batch.size(), partial);
  if (scope == GradientScope::kAll) detail::finalize_gradients(inputs, partial.d_projected, partial.grads);
  detail::finish_loss(weights, partial.loss);
  return BatchResult{partial.loss, std::move(partial.grads)};
}

BatchResult gradient_batch_omp(const ModelParameters& params, const Matrix& inputs,
                               std::span<const ForwardTrace> traces, std::span<const Sample> batch,
                               LossWeights weights, GradientScope scope) {
  check_traces(traces, batch);
  const auto norm = detail::normalizer_for(batch, weights);
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  const std::ptrdiff_t chunks = std::min<std::ptrdiff_t>(kReductionChunks, n);
  std::vector<Partial> partials;
  partials.reserve(static_cast<std::size_t>(chunks));
  for (std::ptrdiff_t c = 0; c < chunks; ++c) partials.push_back(make_partial(params, inputs.cols()));

  parallel_for(chunks, [&](std::ptrdiff_t c) {
    const auto begin = static_cast<std::size_t>(n * c / chunks);
    const auto end = static_cast<std::size_t>(n * (c + 1) / chunks);
    accumulate(params, traces, batch, weights, scope, norm, begin, end, partials[static_cast<std::size_t>(c)]);
  });

  Partial& total = partials.front();
  for (std::size_t c = 1; c < partials.size(); ++c) {
    total.loss.classification += partials[c].loss.classification;
    total.loss.adversarial += partials[c].loss.adversarial;
    total.loss.labeled += partials[c].loss.labeled;
    total.loss.samples += partials[c].loss.samples;
    total.grads.values() += partials[c].grads.values();
    total.d_projected += partials[c].d_projected;
  }
  if (scope == GradientScope::kAll) detail::finalize_gradients(inputs, total.d_projected, total.grads);
  detail::finish_loss(weights, total.loss);
  return BatchResult{total.loss, std::move(total.grads)};
}

std::vector<Prediction> predict_batch_serial(const ModelParameters& params, const Matrix& inputs,
                                             std::span<const LogSequence> sequences) {
  const Matrix projected = project_inputs(params, inputs);
  std::vector<Prediction> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    out.push_back(prediction_from_logit(forward_projected(params, projected, seq.events).anomaly_logit));
  }
  return out;
}

std::vector<Prediction> predict_batch_omp(const ModelParameters& params, const Matrix& inputs,
                                          std::span<const LogSequence> sequences) {
  const Matrix projected = project_inputs(params, inputs);
  std::vector<Prediction> out(sequences.size());
  parallel_for(static_cast<std::ptrdiff_t>(sequences.size()), [&](std::ptrdiff_t i) {
    const auto& seq = sequences[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = prediction_from_logit(forward_projected(params, projected, seq.events).anomaly_logit);
  });
  return out;
}

}  // namespace xlad::kernels
