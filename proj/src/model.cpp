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

#include "xlad/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "model_detail.hpp"
#include "xlad/kernels.hpp"

namespace xlad {
namespace {

std::vector<BlockInfo> make_layout(const ModelDims& dims) {
  const auto d = static_cast<Eigen::Index>(dims.input);
  const auto h = static_cast<Eigen::Index>(dims.hidden);
  std::vector<BlockInfo> blocks = {
      {"extractor.input_weights", ParamGroup::kExtractor, 3 * h, d, 0},
      {"extractor.recurrent_weights", ParamGroup::kExtractor, 3 * h, h, 0},
      {"extractor.gate_bias", ParamGroup::kExtractor, 3 * h, 1, 0},
      {"extractor.attention_weights", ParamGroup::kExtractor, h, 1, 0},
      {"extractor.attention_bias", ParamGroup::kExtractor, 1, 1, 0},
      {"anomaly_head.weights", ParamGroup::kAnomalyHead, h, 1, 0},
      {"anomaly_head.bias", ParamGroup::kAnomalyHead, 1, 1, 0},
      {"domain_head.weights", ParamGroup::kDomainHead, h, 1, 0},
      {"domain_head.bias", ParamGroup::kDomainHead, 1, 1, 0},
  };
  Eigen::Index offset = 0;
  for (auto& block : blocks) {
    block.offset = offset;
    offset += block.size();
  }
  return blocks;
}

std::string hex(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

}  // namespace

ModelParameters::ModelParameters(ModelDims dims) : dims_(dims), blocks_(make_layout(dims)) {
  if (dims.input == 0 || dims.hidden == 0) throw Error("model dimensions must be positive");
  const auto& last = blocks_.back();
  values_ = Vector::Zero(last.offset + last.size());
}

ModelParameters ModelParameters::initialized(ModelDims dims, std::uint64_t seed) {
  ModelParameters params(dims);
  params.seed_ = seed;
  std::mt19937_64 engine(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (const auto& block : params.blocks_) {
    const bool weights = block.name == "extractor.input_weights" || block.name == "extractor.recurrent_weights" ||
                         block.name == "extractor.attention_weights";
    if (!weights) continue;
    for (Eigen::Index i = 0; i < block.size(); ++i) params.values_[block.offset + i] = uniform(engine);
  }
  return params;
}

Eigen::Index ModelParameters::group_offset(ParamGroup group) const {
  for (const auto& block : blocks_) {
    if (block.group == group) return block.offset;
  }
  throw Error("parameters are not initialised");
}

Eigen::Index ModelParameters::group_size(ParamGroup group) const {
  Eigen::Index size = 0;
  for (const auto& block : blocks_) {
    if (block.group == group) size += block.size();
  }
  return size;
}

void ModelParameters::save(std::ostream& out) const {
  out << "xlad-checkpoint v1\n";
  out << "dims input=" << dims_.input << " hidden=" << dims_.hidden << '\n';
  out << "seed " << seed_ << '\n';
  for (const auto& block : blocks_) {
    out << "block " << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
    for (Eigen::Index c = 0; c < block.cols; ++c) {
      for (Eigen::Index r = 0; r < block.rows; ++r) {
        if (r > 0) out << ' ';
        out << hex(values_[block.offset + c * block.rows + r]);
      }
      out << '\n';
    }
  }
  out << "end\n";
}

void ModelParameters::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  save(out);
}

ModelParameters ModelParameters::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "xlad-checkpoint v1") throw Error("not an xlad v1 checkpoint");
  ModelDims dims;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "dims input=%zu hidden=%zu", &dims.input, &dims.hidden) != 2) {
    throw Error("checkpoint: malformed dims line");
  }
  std::uint64_t seed = 0;
  if (!std::getline(in, line) || line.rfind("seed ", 0) != 0) throw Error("checkpoint: malformed seed line");
  seed = std::stoull(line.substr(5));

  ModelParameters params(dims);
  params.seed_ = seed;
  for (const auto& block : params.blocks_) {
    if (!std::getline(in, line)) throw Error("checkpoint: truncated before " + block.name);
    std::istringstream header(line);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    header >> tag >> name >> rows >> cols;
    if (tag != "block" || name != block.name || rows != block.rows || cols != block.cols) {
      throw Error("checkpoint: expected block " + block.name + " " + std::to_string(block.rows) + "x" +
                  std::to_string(block.cols) + ", got '" + line + "'");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!std::getline(in, line)) throw Error("checkpoint: truncated block " + block.name);
      const char* cursor = line.c_str();
      for (Eigen::Index r = 0; r < rows; ++r) {
        char* end = nullptr;
        const double value = std::strtod(cursor, &end);
        if (end == cursor) throw Error("checkpoint: bad value in block " + block.name);
        params.values_[block.offset + c * rows + r] = value;
        cursor = end;
      }
    }
  }
  if (!std::getline(in, line) || line != "end") throw Error("checkpoint: missing end marker");
  return params;
}

ModelParameters ModelParameters::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  return load(in);
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logits(double logit, int y) {
  if (y != 0 && y != 1) throw Error("bce_with_logits: label must be 0 or 1");
  if (!std::isfinite(logit)) throw Error("bce_with_logits: non-finite logit");
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

Matrix project_inputs(const ModelParameters& params, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != params.dims().input) {
    throw Error("input dimension " + std::to_string(inputs.rows()) + " does not match model input " +
                std::to_string(params.dims().input));
  }
  Matrix projected = params.input_weights() * inputs;
  projected.colwise() += params.gate_bias();
  return projected;
}

namespace {

// Elementwise forms built on exp, which Eigen vectorizes for doubles (its
// tanh is scalar). Saturation is exact: exp overflow gives 0 or 1 and -1 or 1.
template <typename A>
auto logistic(const A& x) {
  return (1.0 + (-x).exp()).inverse().matrix();
}

template <typename A>
auto hyperbolic_tangent(const A& x) {
  return (1.0 - 2.0 / ((2.0 * x).exp() + 1.0)).matrix();
}

}  // namespace

ForwardTrace forward_projected(const ModelParameters& params, const Matrix& projected, std::span<const int> steps) {
  if (steps.empty()) throw Error("forward: empty sequence");
  const auto h = static_cast<Eigen::Index>(params.dims().hidden);
  const auto length = static_cast<Eigen::Index>(steps.size());
  const auto recurrent = params.recurrent_weights();
  const auto gates_ur = recurrent.topRows(2 * h);
  const auto gates_n = recurrent.bottomRows(h);

  ForwardTrace trace;
  trace.steps.assign(steps.begin(), steps.end());
  trace.hidden.resize(h, length);
  trace.update.resize(h, length);
  trace.reset.resize(h, length);
  trace.candidate.resize(h, length);

  Vector prev = Vector::Zero(h);
  Vector ur(2 * h);
  for (Eigen::Index t = 0; t < length; ++t) {
    const int col = steps[static_cast<std::size_t>(t)];
    if (col < 0 || col >= projected.cols()) throw Error("forward: step index out of range");
    const auto p = projected.col(col);
    ur.noalias() = gates_ur * prev;
    ur += p.head(2 * h);
    auto z = trace.update.col(t);
    auto r = trace.reset.col(t);
    auto n = trace.candidate.col(t);
    z = logistic(ur.head(h).array());
    r = logistic(ur.tail(h).array());
    const Vector gated = r.cwiseProduct(prev);
    n.noalias() = gates_n * gated;
    n = hyperbolic_tangent((n + p.tail(h)).array());
    trace.hidden.col(t) = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(prev);
    prev = trace.hidden.col(t);
  }

  Vector scores = trace.hidden.transpose() * params.attention_weights();
  scores.array() += params.attention_bias();
  const double peak = scores.maxCoeff();
  trace.attention = (scores.array() - peak).exp().matrix();
  trace.attention /= trace.attention.sum();
  trace.representation = trace.hidden * trace.attention;
  trace.anomaly_logit = params.anomaly_weights().dot(trace.representation) + params.anomaly_bias();
  trace.domain_logit = params.domain_weights().dot(trace.representation) + params.domain_bias();
  return trace;
}

namespace {

Matrix columns_of(std::span<const Vector> sequence, std::size_t dimension) {
  Matrix inputs(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(sequence.size()));
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (static_cast<std::size_t>(sequence[i].size()) != dimension) {
      throw Error("forward: step " + std::to_string(i) + " has dimension " + std::to_string(sequence[i].size()) +
                  ", expected " + std::to_string(dimension));
    }
    inputs.col(static_cast<Eigen::Index>(i)) = sequence[i];
  }
  return inputs;
}

std::vector<int> iota_steps(std::size_t n) {
  std::vector<int> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = static_cast<int>(i);
  return steps;
}

}  // namespace

ForwardTrace forward(const ModelParameters& params, std::span<const Vector> sequence) {
  if (sequence.empty()) throw Error("forward: empty sequence");
  const Matrix inputs = columns_of(sequence, params.dims().input);
  const auto steps = iota_steps(sequence.size());
  return forward_projected(params, project_inputs(params, inputs), steps);
}

Prediction prediction_from_logit(double logit) {
  const double p = sigmoid(logit);
  Prediction out;
  out.probability = p;
  out.label = p > 0.5 ? Label::kAnomalous : Label::kNormal;
  out.confidence = std::max(p, 1.0 - p);
  return out;
}

Prediction predict(const ModelParameters& params, std::span<const Vector> sequence) {
  return prediction_from_logit(forward(params, sequence).anomaly_logit);
}

BatchResult backward(const ModelParameters& params, const Matrix& inputs, std::span<const Sample> batch,
                     LossWeights weights, GradientScope scope) {
  const Matrix projected = project_inputs(params, inputs);
  const auto traces = kernels::forward_batch_omp(params, projected, batch);
  return kernels::gradient_batch_omp(params, inputs, traces, batch, weights, scope);
}

BatchLoss evaluate_loss(const ModelParameters& params, const Matrix& inputs, std::span<const Sample> batch,
                        LossWeights weights) {
  const Matrix projected = project_inputs(params, inputs);
  const auto traces = kernels::forward_batch_omp(params, projected, batch);
  const auto norm = detail::normalizer_for(batch, weights);
  BatchLoss loss;
  for (std::size_t i = 0; i < batch.size(); ++i) detail::sample_upstream(params, traces[i], batch[i], weights, norm, loss);
  detail::finish_loss(weights, loss);
  return loss;
}

namespace detail {

BatchNormalizer normalizer_for(std::span<const Sample> batch, LossWeights weights) {
  if (batch.empty()) throw Error("empty batch");
  BatchNormalizer norm;
  norm.samples = batch.size();
  for (const auto& sample : batch) norm.labeled += sample.label.has_value() ? 1 : 0;
  if (weights.classification != 0.0 && norm.labeled == 0) {
    throw Error("classification loss requested but the batch has no labeled samples");
  }
  return norm;
}

SampleUpstream sample_upstream(const ModelParameters& params, const ForwardTrace& trace, const Sample& sample,
                               LossWeights weights, const BatchNormalizer& norm, BatchLoss& loss) {
  const double anomaly_logit = params.anomaly_weights().dot(trace.representation) + params.anomaly_bias();
  const double domain_logit = params.domain_weights().dot(trace.representation) + params.domain_bias();
  SampleUpstream up;
  if (sample.label) {
    const int y = to_int(*sample.label);
    loss.classification += bce_with_logits(anomaly_logit, y) / static_cast<double>(norm.labeled);
    up.d_anomaly = weights.classification * (sigmoid(anomaly_logit) - y) / static_cast<double>(norm.labeled);
    ++loss.labeled;
  }
  const int dom = static_cast<int>(sample.domain);
  loss.adversarial += bce_with_logits(domain_logit, dom) / static_cast<double>(norm.samples);
  up.d_domain = weights.adversarial * (sigmoid(domain_logit) - dom) / static_cast<double>(norm.samples);
  ++loss.samples;
  return up;
}

void finish_loss(LossWeights weights, BatchLoss& loss) {
  loss.objective = weights.classification * loss.classification + weights.adversarial * loss.adversarial;
}

void backprop_sequence(const ModelParameters& params, const ForwardTrace& trace, SampleUpstream upstream,
                       GradientScope scope, Gradients& grads, Matrix& d_projected) {
  const auto& rep = trace.representation;
  grads.anomaly_weights() += upstream.d_anomaly * rep;
  grads.anomaly_bias() += upstream.d_anomaly;
  grads.domain_weights() += upstream.d_domain * rep;
  grads.domain_bias() += upstream.d_domain;
  if (scope == GradientScope::kHeadsOnly) return;
  if (upstream.d_anomaly == 0.0 && upstream.d_domain == 0.0) return;

  const auto h = static_cast<Eigen::Index>(params.dims().hidden);
  const auto length = static_cast<Eigen::Index>(trace.length());
  const Vector d_rep = upstream.d_anomaly * params.anomaly_weights() + upstream.d_domain * params.domain_weights();

  // Attention pooling: rep = H a, a = softmax(H^T w + b).
  const Vector d_attn = trace.hidden.transpose() * d_rep;
  const double mean = trace.attention.dot(d_attn);
  const Vector d_scores = trace.attention.cwiseProduct((d_attn.array() - mean).matrix());
  Matrix d_hidden = d_rep * trace.attention.transpose();
  d_hidden.noalias() += params.attention_weights() * d_scores.transpose();
  grads.attention_weights().noalias() += trace.hidden * d_scores;
  grads.attention_bias() += d_scores.sum();

  // Backpropagation through time.
  const auto recurrent = params.recurrent_weights();
  const auto gates_ur = recurrent.topRows(2 * h);
  const auto gates_n = recurrent.bottomRows(h);
  Matrix d_pre(3 * h, length);
  Matrix prev_hidden(h, length);
  Matrix gated_prev(h, length);
  Vector d_next = Vector::Zero(h);
  Vector d_prev(h);
  for (Eigen::Index t = length - 1; t >= 0; --t) {
    const Vector prev = t > 0 ? Vector(trace.hidden.col(t - 1)) : Vector::Zero(h);
    const auto z = trace.update.col(t);
    const auto r = trace.reset.col(t);
    const auto n = trace.candidate.col(t);
    const Vector dh = d_hidden.col(t) + d_next;

    auto da_z = d_pre.col(t).segment(0, h);
    auto da_r = d_pre.col(t).segment(h, h);
    auto da_n = d_pre.col(t).segment(2 * h, h);
    da_n = (dh.array() * (1.0 - z.array()) * (1.0 - n.array().square())).matrix();
    da_z = (dh.array() * (prev - n).array() * z.array() * (1.0 - z.array())).matrix();
    d_prev = dh.cwiseProduct(z);
    const Vector d_gated = gates_n.transpose() * da_n;
    da_r = (d_gated.array() * prev.array() * r.array() * (1.0 - r.array())).matrix();
    d_prev += d_gated.cwiseProduct(r);
    d_prev.noalias() += gates_ur.transpose() * d_pre.col(t).head(2 * h);

    prev_hidden.col(t) = prev;
    gated_prev.col(t) = r.cwiseProduct(prev);
    d_projected.col(trace.steps[static_cast<std::size_t>(t)]) += d_pre.col(t);
    d_next = d_prev;
  }
  auto d_recurrent = grads.recurrent_weights();
  d_recurrent.topRows(2 * h).noalias() += d_pre.topRows(2 * h) * prev_hidden.transpose();
  d_recurrent.bottomRows(h).noalias() += d_pre.bottomRows(h) * gated_prev.transpose();
}

void finalize_gradients(const Matrix& inputs, const Matrix& d_projected, Gradients& grads) {
  grads.input_weights().noalias() += d_projected * inputs.transpose();
  grads.gate_bias() += d_projected.rowwise().sum();
}

}  // namespace detail
}  // namespace xlad
