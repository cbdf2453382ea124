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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlad/common.hpp"

namespace xlad {

struct ModelDims {
  std::size_t input = 300;
  std::size_t hidden = 128;

  bool operator==(const ModelDims&) const = default;
};

/// The three independently-updated parameter groups.
enum class ParamGroup { kExtractor, kAnomalyHead, kDomainHead };

struct BlockInfo {
  std::string name;
  ParamGroup group;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;

  Eigen::Index size() const noexcept { return rows * cols; }
};

/// All model parameters in one flat vector, grouped contiguously as
/// extractor | anomaly head | domain head. Matrices are stored column-major.
///
/// Extractor: GRU input weights (3h x d, gate rows ordered update, reset,
/// candidate), recurrent weights (3h x h), gate biases (3h), attention
/// projection (h) and attention bias. Each head is an affine map h -> 1.
/// The same type doubles as a gradient container.
class ModelParameters {
 public:
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  ModelParameters() = default;
  /// All-zero parameters.
  explicit ModelParameters(ModelDims dims);

  /// Recurrent/input weights and the attention projection uniform in
  /// (-1/sqrt(h), 1/sqrt(h)); biases and both heads zero.
  static ModelParameters initialized(ModelDims dims, std::uint64_t seed);

  const ModelDims& dims() const noexcept { return dims_; }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }

  Vector& values() noexcept { return values_; }
  const Vector& values() const noexcept { return values_; }
  std::span<const BlockInfo> blocks() const noexcept { return blocks_; }

  Eigen::Index group_offset(ParamGroup group) const;
  Eigen::Index group_size(ParamGroup group) const;
  auto group(ParamGroup g) { return values_.segment(group_offset(g), group_size(g)); }
  auto group(ParamGroup g) const { return values_.segment(group_offset(g), group_size(g)); }

  MatrixMap input_weights() { return matrix(0); }
  ConstMatrixMap input_weights() const { return matrix(0); }
  MatrixMap recurrent_weights() { return matrix(1); }
  ConstMatrixMap recurrent_weights() const { return matrix(1); }
  VectorMap gate_bias() { return vector(2); }
  ConstVectorMap gate_bias() const { return vector(2); }
  VectorMap attention_weights() { return vector(3); }
  ConstVectorMap attention_weights() const { return vector(3); }
  double& attention_bias() { return values_[blocks_[4].offset]; }
  double attention_bias() const { return values_[blocks_[4].offset]; }
  VectorMap anomaly_weights() { return vector(5); }
  ConstVectorMap anomaly_weights() const { return vector(5); }
  double& anomaly_bias() { return values_[blocks_[6].offset]; }
  double anomaly_bias() const { return values_[blocks_[6].offset]; }
  VectorMap domain_weights() { return vector(7); }
  ConstVectorMap domain_weights() const { return vector(7); }
  double& domain_bias() { return values_[blocks_[8].offset]; }
  double domain_bias() const { return values_[blocks_[8].offset]; }

  bool all_finite() const { return values_.allFinite(); }

  /// Versioned text checkpoint; values are written as hex floats so a
  /// save/load round trip is bit-exact.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static ModelParameters load(std::istream& in);
  static ModelParameters load(const std::filesystem::path& path);

 private:
  MatrixMap matrix(std::size_t b) {
    return MatrixMap(values_.data() + blocks_[b].offset, blocks_[b].rows, blocks_[b].cols);
  }
  ConstMatrixMap matrix(std::size_t b) const {
    return ConstMatrixMap(values_.data() + blocks_[b].offset, blocks_[b].rows, blocks_[b].cols);
  }
  VectorMap vector(std::size_t b) { return VectorMap(values_.data() + blocks_[b].offset, blocks_[b].size()); }
  ConstVectorMap vector(std::size_t b) const {
    return ConstVectorMap(values_.data() + blocks_[b].offset, blocks_[b].size());
  }

  ModelDims dims_{};
  std::uint64_t seed_ = 0;
  std::vector<BlockInfo> blocks_;
  Vector values_;
};

using Gradients = ModelParameters;

/// Per-sequence activations kept for backpropagation.
struct ForwardTrace {
  /// Column of the projected input used at each step.
  std::vector<int> steps;
  Matrix hidden;     // h x T
  Matrix update;     // h x T
  Matrix reset;      // h x T
  Matrix candidate;  // h x T
  Vector attention;  // T, softmax weights
  Vector representation;
  double anomaly_logit = 0.0;
  double domain_logit = 0.0;

  std::size_t length() const noexcept { return steps.size(); }
};

/// W_in * inputs + gate bias, one column per input column (3h x V). Sequences
/// that share events share projections, so the d-dimensional inputs are
/// touched once per batch instead of once per step.
Matrix project_inputs(const ModelParameters& params, const Matrix& inputs);

/// Runs the GRU from a zero state, attention pooling and both heads.
ForwardTrace forward_projected(const ModelParameters& params, const Matrix& projected, std::span<const int> steps);

/// Forward over explicit d-vectors.
ForwardTrace forward(const ModelParameters& params, std::span<const Vector> sequence);

double sigmoid(double z) noexcept;

/// max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_with_logits(double logit, int y);

enum class Domain : std::uint8_t { kSource = 0, kTarget = 1 };

/// One training sequence: steps index the columns of the batch's input table.
struct Sample {
  std::span<const int> steps;
  std::optional<Label> label;
  Domain domain = Domain::kSource;
};

/// Objective = classification * L_c + adversarial * L_ad, where L_c is the mean
/// BCE over labeled samples and L_ad the mean domain BCE over all samples
/// (source = 0, target = 1).
struct LossWeights {
  double classification = 1.0;
  double adversarial = 0.0;

  static LossWeights c() { return {1.0, 0.0}; }
  static LossWeights ad() { return {0.0, 1.0}; }
  /// gamma * L_c - beta * L_ad
  static LossWeights combined(double gamma, double beta) { return {gamma, -beta}; }
};

struct BatchLoss {
  double classification = 0.0;
  double adversarial = 0.0;
  double objective = 0.0;
  std::size_t labeled = 0;
  std::size_t samples = 0;
};

struct BatchResult {
  BatchLoss loss;
  Gradients gradients;
};

/// Which gradient blocks to produce. Heads-only skips backpropagation
/// through attention and the GRU.
enum class GradientScope { kHeadsOnly, kAll };

/// Exact gradient of the weighted objective for a batch over `inputs`
/// (d x V table of input vectors).
BatchResult backward(const ModelParameters& params, const Matrix& inputs, std::span<const Sample> batch,
                     LossWeights weights, GradientScope scope = GradientScope::kAll);

/// Loss only (no gradients).
BatchLoss evaluate_loss(const ModelParameters& params, const Matrix& inputs, std::span<const Sample> batch,
                        LossWeights weights);

struct Prediction {
  Label label = Label::kNormal;
  /// max(p, 1 - p) with p the anomaly probability.
  double confidence = 0.5;
  double probability = 0.5;
};

/// Anomalous iff p > 0.5; the tie p == 0.5 resolves to normal.
Prediction prediction_from_logit(double logit);
Prediction predict(const ModelParameters& params, std::span<const Vector> sequence);

}  // namespace xlad
