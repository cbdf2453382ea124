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

#include "xlad/model.hpp"

namespace xlad::detail {

/// Upstream derivatives of the batch objective w.r.t. one sample's logits,
/// plus that sample's contribution to the losses.
struct SampleUpstream {
  double d_anomaly = 0.0;
  double d_domain = 0.0;
};

struct BatchNormalizer {
  std::size_t labeled = 0;
  std::size_t samples = 0;
};

BatchNormalizer normalizer_for(std::span<const Sample> batch, LossWeights weights);

/// Adds one sample's losses to `loss` and returns the logit derivatives.
SampleUpstream sample_upstream(const ModelParameters& params, const ForwardTrace& trace, const Sample& sample,
                               LossWeights weights, const BatchNormalizer& norm, BatchLoss& loss);

/// Accumulates one sequence's gradient. Input-weight and gate-bias gradients
/// are collected per projected column in `d_projected` and folded in by
/// finalize_gradients.
void backprop_sequence(const ModelParameters& params, const ForwardTrace& trace, SampleUpstream upstream,
                       GradientScope scope, Gradients& grads, Matrix& d_projected);

void finalize_gradients(const Matrix& inputs, const Matrix& d_projected, Gradients& grads);

void finish_loss(LossWeights weights, BatchLoss& loss);

}  // namespace xlad::detail
