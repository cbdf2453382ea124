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

#include "xlad/meta_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "xlad/kernels.hpp"

namespace xlad {
namespace {

// First `count` entries of a random permutation of `pool`.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t count, std::mt19937_64& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

void append(std::vector<std::size_t>& out, const std::vector<std::size_t>& from, std::size_t begin, std::size_t n) {
  out.insert(out.end(), from.begin() + static_cast<std::ptrdiff_t>(begin),
             from.begin() + static_cast<std::ptrdiff_t>(begin + n));
}

std::vector<Sample> support_samples(const TrainingPools& pools, std::span<const MetaTask> tasks) {
  std::vector<Sample> out;
  for (const auto& task : tasks) {
    auto s = make_samples(pools, task.support);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void check_pools(const TrainingPools& pools) {
  if (pools.inputs == nullptr) throw Error("training pools have no input table");
}

ModelParameters with_extractor(const ModelParameters& params, const Vector& extractor) {
  ModelParameters out = params;
  out.group(ParamGroup::kExtractor) = extractor;
  return out;
}

// Head updates share one forward pass over the support sets.
struct SupportPass {
  std::vector<Sample> samples;
  std::vector<ForwardTrace> traces;
};

SupportPass forward_support(const ModelParameters& params, const TrainingPools& pools,
                            std::span<const MetaTask> tasks) {
  SupportPass pass;
  pass.samples = support_samples(pools, tasks);
  if (pass.samples.empty()) throw Error("meta-tasks have empty support sets");
  pass.traces = kernels::forward_batch_omp(params, project_inputs(params, *pools.inputs), pass.samples);
  return pass;
}

BatchLoss domain_step(ModelParameters& params, const Matrix& inputs, const SupportPass& pass, Optimizer& opt) {
  auto res = kernels::gradient_batch_omp(params, inputs, pass.traces, pass.samples, LossWeights::ad(),
                                         GradientScope::kHeadsOnly);
  if (!std::isfinite(res.loss.objective)) throw Error("domain classifier step: non-finite loss");
  opt.step(params.group(ParamGroup::kDomainHead), res.gradients.group(ParamGroup::kDomainHead));
  return res.loss;
}

BatchLoss anomaly_step(ModelParameters& params, const Matrix& inputs, const SupportPass& pass, Optimizer& opt) {
  auto res = kernels::gradient_batch_omp(params, inputs, pass.traces, pass.samples, LossWeights::c(),
                                         GradientScope::kHeadsOnly);
  if (!std::isfinite(res.loss.objective)) throw Error("anomaly classifier step: non-finite loss");
  opt.step(params.group(ParamGroup::kAnomalyHead), res.gradients.group(ParamGroup::kAnomalyHead));
  return res.loss;
}

std::vector<LogSequence> light_copy(std::span<const LogSequence> from, std::span<const std::size_t> indices) {
  std::vector<LogSequence> out;
  out.reserve(indices.size());
  for (const auto i : indices) {
    const auto& s = from[i];
    out.push_back(LogSequence{s.sequence_id, s.system_id, s.events, s.label, {}});
  }
  return out;
}

std::vector<Sample> labeled_samples(std::span<const LogSequence> seqs) {
  std::vector<Sample> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(Sample{s.events, s.label, Domain::kSource});
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  auto rate = [](const char* name, double v) {
    if (!std::isfinite(v) || v < 0.0) throw Error(std::string("training.") + name + " must be finite and >= 0");
  };
  rate("delta", delta);
  rate("lambda", lambda);
  rate("kappa", kappa);
  rate("alpha", alpha);
  rate("beta", beta);
  rate("gamma", gamma);
  if (inner_steps < 0) throw Error("training.inner_steps must be >= 0");
  if (batch_size < 2) throw Error("training.batch_size must be >= 2");
  if (tasks_per_epoch == 0) throw Error("training.tasks_per_epoch must be > 0");
  if (tasks_per_step == 0) throw Error("training.tasks_per_step must be > 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw Error("training.holdout_fraction must be in [0,1)");
  if (hidden == 0) throw Error("training.hidden must be > 0");
}

std::vector<MetaTask> sample_meta_tasks(std::span<const LogSequence> source, std::span<const LogSequence> target,
                                        const TrainingConfig& cfg, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> normal, anomalous;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!source[i].label) throw Error("source sequence " + source[i].sequence_id + " is unlabeled");
    (*source[i].label == Label::kAnomalous ? anomalous : normal).push_back(i);
  }
  if (normal.empty() || anomalous.empty()) throw Error("source must contain both normal and anomalous sequences");
  if (target.empty()) throw Error("no target sequences to build meta-tasks from");

  // Per batch: half of each class, topped up from the other class when one
  // side runs short. Two batches per task must fit without overlap.
  const std::size_t b = cfg.batch_size;
  std::size_t n_anom = std::min(b / 2, anomalous.size() / 2);
  const std::size_t n_norm = std::min(b - n_anom, normal.size() / 2);
  n_anom = std::min(b - n_norm, anomalous.size() / 2);
  const std::size_t n_target = std::min(b, target.size() / 2);

  std::vector<std::size_t> all_target(target.size());
  std::iota(all_target.begin(), all_target.end(), std::size_t{0});

  std::vector<MetaTask> tasks(count);
  for (std::size_t t = 0; t < count; ++t) {
    MetaTask& task = tasks[t];
    task.task_id = t;
    const auto nn = draw(normal, 2 * n_norm, rng);
    const auto aa = draw(anomalous, 2 * n_anom, rng);
    const auto tt = draw(all_target, 2 * n_target, rng);
    append(task.support.source, nn, 0, n_norm);
    append(task.support.source, aa, 0, n_anom);
    append(task.query.source, nn, n_norm, n_norm);
    append(task.query.source, aa, n_anom, n_anom);
    append(task.support.target, tt, 0, n_target);
    append(task.query.target, tt, n_target, n_target);
  }
  return tasks;
}

std::vector<Sample> make_samples(const TrainingPools& pools, const TaskBatch& batch) {
  std::vector<Sample> out;
  out.reserve(batch.source.size() + batch.target.size());
  for (const auto i : batch.source) {
    const auto& s = pools.source[i];
    if (!s.label) throw Error("source sequence " + s.sequence_id + " is unlabeled");
    out.push_back(Sample{s.events, s.label, Domain::kSource});
  }
  for (const auto i : batch.target) out.push_back(Sample{pools.target[i].events, std::nullopt, Domain::kTarget});
  return out;
}

BatchLoss step_domain_classifier(ModelParameters& params, const TrainingPools& pools,
                                 std::span<const MetaTask> tasks, Optimizer& opt) {
  check_pools(pools);
  return domain_step(params, *pools.inputs, forward_support(params, pools, tasks), opt);
}

BatchLoss step_anomaly_classifier(ModelParameters& params, const TrainingPools& pools,
                                  std::span<const MetaTask> tasks, Optimizer& opt) {
  check_pools(pools);
  return anomaly_step(params, *pools.inputs, forward_support(params, pools, tasks), opt);
}

Vector inner_adapt(const ModelParameters& params, const TrainingPools& pools, const MetaTask& task,
                   const TrainingConfig& cfg) {
  check_pools(pools);
  Vector extractor = params.group(ParamGroup::kExtractor);
  if (cfg.delta == 0.0 || cfg.inner_steps == 0) return extractor;
  const auto samples = make_samples(pools, task.support);
  ModelParameters work = params;
  for (int s = 0; s < cfg.inner_steps; ++s) {
    const auto res = backward(work, *pools.inputs, samples, LossWeights::combined(cfg.gamma, cfg.beta));
    if (!std::isfinite(res.loss.objective)) throw Error("inner adaptation: non-finite loss");
    work.group(ParamGroup::kExtractor) -= cfg.delta * res.gradients.group(ParamGroup::kExtractor);
  }
  return work.group(ParamGroup::kExtractor);
}

double meta_step(ModelParameters& params, const TrainingPools& pools, std::span<const MetaTask> tasks,
                 const TrainingConfig& cfg, Optimizer& opt) {
  check_pools(pools);
  Vector meta_grad = Vector::Zero(params.group_size(ParamGroup::kExtractor));
  double objective = 0.0;
  for (const auto& task : tasks) {
    const ModelParameters adapted = with_extractor(params, inner_adapt(params, pools, task, cfg));
    const auto samples = make_samples(pools, task.query);
    const auto res = backward(adapted, *pools.inputs, samples, LossWeights::combined(cfg.gamma, cfg.beta));
    if (!std::isfinite(res.loss.objective)) throw Error("meta step: non-finite query loss");
    meta_grad += res.gradients.group(ParamGroup::kExtractor);
    objective += res.loss.objective;
  }
  if (!meta_grad.allFinite()) throw Error("meta step: non-finite meta-gradient");
  opt.step(params.group(ParamGroup::kExtractor), meta_grad);
  return objective;
}

std::vector<std::size_t> stratified_holdout(std::span<const LogSequence> source, double fraction,
                                            std::mt19937_64& rng) {
  std::vector<std::size_t> normal, anomalous;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!source[i].label) throw Error("source sequence " + source[i].sequence_id + " is unlabeled");
    (*source[i].label == Label::kAnomalous ? anomalous : normal).push_back(i);
  }
  std::vector<std::size_t> out;
  for (auto* cls : {&normal, &anomalous}) {
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(cls->size()) + 0.5));
    const auto picked = draw(*cls, take, rng);
    out.insert(out.end(), picked.begin(), picked.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainingResult train(std::span<const LogSequence> source, std::span<const LogSequence> target_general,
                     const Matrix& inputs, const TrainingConfig& cfg) {
  cfg.validate();
  const ModelDims dims{static_cast<std::size_t>(inputs.rows()), cfg.hidden};
  std::mt19937_64 rng(cfg.seed);

  TrainingResult result;
  result.holdout = stratified_holdout(source, cfg.holdout_fraction, rng);
  std::vector<std::size_t> rest;
  for (std::size_t i = 0, h = 0; i < source.size(); ++i) {
    if (h < result.holdout.size() && result.holdout[h] == i) {
      ++h;
      continue;
    }
    rest.push_back(i);
  }
  const auto train_source = light_copy(source, rest);
  const auto holdout = light_copy(source, result.holdout);
  const auto holdout_samples = labeled_samples(holdout);

  ModelParameters params = ModelParameters::initialized(dims, cfg.seed);
  if (cfg.epochs == 0) {
    result.params = std::move(params);
    return result;
  }

  const TrainingPools pools{train_source, target_general, &inputs};
  Optimizer domain_opt(cfg.optimizer, cfg.lambda);
  Optimizer anomaly_opt(cfg.optimizer, cfg.kappa);
  Optimizer meta_opt(cfg.optimizer, cfg.alpha);

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  ModelParameters best = params;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto tasks = sample_meta_tasks(train_source, target_general, cfg, cfg.tasks_per_epoch, rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t groups = 0;
    for (std::size_t first = 0; first < tasks.size(); first += cfg.tasks_per_step) {
      const std::span<const MetaTask> group(tasks.data() + first, std::min(cfg.tasks_per_step, tasks.size() - first));
      try {
        const auto pass = forward_support(params, pools, group);
        rec.adversarial_loss += domain_step(params, inputs, pass, domain_opt).adversarial;
        rec.classification_loss += anomaly_step(params, inputs, pass, anomaly_opt).classification;
        rec.query_loss += meta_step(params, pools, group, cfg, meta_opt);
      } catch (const Error& e) {
        throw Error("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      ++groups;
    }
    rec.adversarial_loss /= static_cast<double>(groups);
    rec.classification_loss /= static_cast<double>(groups);
    rec.query_loss /= static_cast<double>(groups);

    if (!holdout.empty()) {
      rec.holdout_loss = evaluate_loss(params, inputs, holdout_samples, LossWeights::c()).classification;
      rec.holdout_f1 = evaluate_sequences(params, inputs, holdout).f1;
    }
    result.log.push_back(rec);

    if (holdout.empty()) {
      best = params;
      result.best_epoch = epoch;
      continue;
    }
    if (rec.holdout_loss < best_loss) {
      best_loss = rec.holdout_loss;
      best = params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  result.params = std::move(best);
  if (!holdout.empty()) result.holdout_metrics = evaluate_sequences(result.params, inputs, holdout);
  return result;
}

void write_training_log(std::ostream& out, std::span<const EpochRecord> log) {
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf,
                  "{\"epoch\":%zu,\"l_c\":%.9g,\"l_ad\":%.9g,\"query_loss\":%.9g,\"holdout_loss\":%.9g,"
                  "\"holdout_f1\":%.9g}\n",
                  r.epoch, r.classification_loss, r.adversarial_loss, r.query_loss, r.holdout_loss, r.holdout_f1);
    out << buf;
  }
}

Metrics evaluate_sequences(const ModelParameters& params, const Matrix& inputs,
                           std::span<const LogSequence> sequences) {
  const auto preds = kernels::predict_batch_omp(params, inputs, sequences);
  std::vector<Label> p, t;
  p.reserve(preds.size());
  t.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!sequences[i].label) throw Error("cannot evaluate unlabeled sequence " + sequences[i].sequence_id);
    p.push_back(preds[i].label);
    t.push_back(*sequences[i].label);
  }
  return compute_metrics(p, t);
}

}  // namespace xlad
