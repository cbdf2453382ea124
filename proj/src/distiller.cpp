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

#include "xlad/distiller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "xlad/kernels.hpp"

namespace xlad {
namespace {

std::vector<Sample> clean_samples(std::span<const std::pair<const LogSequence*, Label>> clean) {
  std::vector<Sample> out;
  out.reserve(clean.size());
  for (const auto& [seq, label] : clean) out.push_back(Sample{seq->events, label, Domain::kTarget});
  return out;
}

std::size_t histogram_bin(double confidence) {
  const double pos = (confidence - 0.5) / 0.05;
  return static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, 9.0));
}

}  // namespace

EpsilonPolicy parse_epsilon_policy(const std::string& text) {
  if (text == "dynamic") return EpsilonPolicy::kDynamic;
  if (text == "static") return EpsilonPolicy::kStatic;
  throw Error("unknown epsilon policy '" + text + "' (expected dynamic or static)");
}

std::string to_string(EpsilonPolicy policy) { return policy == EpsilonPolicy::kDynamic ? "dynamic" : "static"; }

void DistillerConfig::validate() const {
  if (rounds < 0) throw Error("distiller.rounds must be >= 0");
  if (!(epsilon_start > 0.5 && epsilon_start <= 1.0)) throw Error("distiller.epsilon_start must be in (0.5, 1]");
  if (!(epsilon_step >= 0.0) || !std::isfinite(epsilon_step)) throw Error("distiller.epsilon_step must be >= 0");
  if (!(epsilon_min >= 0.5 && epsilon_min <= epsilon_start)) {
    throw Error("distiller.epsilon_min must be in [0.5, epsilon_start]");
  }
  if (batch_size == 0) throw Error("distiller.batch_size must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("distiller.learning_rate must be >= 0");
}

double dynamic_threshold(int r, double eps0, double step, double eps_min) {
  if (r < 0) throw Error("round index must be >= 0");
  if (!(eps0 > 0.5 && eps0 <= 1.0)) throw Error("epsilon start must be in (0.5, 1]");
  return std::max(eps0 - static_cast<double>(r) * step, eps_min);
}

double round_threshold(const DistillerConfig& cfg, int r) {
  return cfg.policy == EpsilonPolicy::kStatic ? cfg.epsilon_start
                                              : dynamic_threshold(r, cfg.epsilon_start, cfg.epsilon_step,
                                                                  cfg.epsilon_min);
}

PoolVerdict select(Label y_llm, Label y_sm, double confidence, double eps) {
  return (y_llm == y_sm && confidence >= eps) ? PoolVerdict::kClean : PoolVerdict::kNoisy;
}

ModelParameters fine_tune(const ModelParameters& params, const Matrix& inputs,
                          std::span<const std::pair<const LogSequence*, Label>> clean, const DistillerConfig& cfg,
                          std::uint64_t seed) {
  if (clean.empty() || cfg.fine_tune_epochs == 0) return params;
  ModelParameters out = params;
  const auto samples = clean_samples(clean);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  const auto scope = cfg.freeze_extractor ? GradientScope::kHeadsOnly : GradientScope::kAll;
  std::vector<Sample> batch;
  for (std::size_t epoch = 0; epoch < cfg.fine_tune_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = first; i < std::min(first + cfg.batch_size, order.size()); ++i) {
        batch.push_back(samples[order[i]]);
      }
      const auto res = backward(out, inputs, batch, LossWeights::c(), scope);
      if (!std::isfinite(res.loss.objective)) throw Error("fine-tuning: non-finite loss");
      if (cfg.freeze_extractor) {
        opt.step(out.group(ParamGroup::kAnomalyHead), res.gradients.group(ParamGroup::kAnomalyHead));
      } else {
        opt.step(out.values(), res.gradients.values());
      }
    }
  }
  return out;
}

void write_round_report(std::ostream& out, const RoundReport& r) {
  char buf[96];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  out << "{\"round\":" << r.round << ",\"epsilon\":" << real(r.epsilon) << ",\"pool\":" << r.pool
      << ",\"clean\":" << r.clean << ",\"noisy\":" << r.noisy << ",\"cumulative_clean\":" << r.cumulative_clean
      << ",\"proprietary\":" << r.proprietary << ",\"agreement_rate\":" << real(r.agreement_rate)
      << ",\"llm_unavailable\":" << r.llm_unavailable << ",\"llm_defaulted\":" << r.llm_defaulted
      << ",\"llm_dropped\":" << r.llm_dropped << ",\"confidence_histogram\":[";
  for (std::size_t i = 0; i < r.confidence_histogram.size(); ++i) {
    out << (i ? "," : "") << r.confidence_histogram[i];
  }
  out << "],\"fine_tune_loss_before\":" << real(r.fine_tune_loss_before)
      << ",\"fine_tune_loss_after\":" << real(r.fine_tune_loss_after) << ",\"clean_accuracy\":";
  if (r.clean_accuracy) {
    out << real(*r.clean_accuracy);
  } else {
    out << "null";
  }
  out << "}\n";
}

DistillationResult run_distillation(std::span<const LogSequence> proprietary, const ModelParameters& sm0,
                                    KnowledgeBase kb0, Labeler& labeler, const EventEmbeddings& embeddings,
                                    const DistillerConfig& cfg) {
  cfg.validate();
  DistillationResult result;
  result.models.push_back(sm0);
  result.kb = std::move(kb0);
  result.labels.resize(proprietary.size());
  for (std::size_t i = 0; i < proprietary.size(); ++i) result.labels[i].sequence_id = proprietary[i].sequence_id;

  std::vector<std::size_t> pool(proprietary.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::size_t cumulative = 0;
  std::vector<std::pair<const LogSequence*, Label>> all_clean;
  const Matrix& inputs = embeddings.matrix();

  for (int r = 0; r < cfg.rounds && !pool.empty(); ++r) {
    const ModelParameters& current = result.models.back();
    const double eps = round_threshold(cfg, r);
    std::vector<LogSequence> remaining;
    remaining.reserve(pool.size());
    for (const auto i : pool) remaining.push_back(proprietary[i]);

    const auto llm = labeler.label_all(remaining, result.kb, embeddings);
    const auto sm = kernels::predict_batch_omp(current, inputs, remaining);

    RoundReport report;
    report.round = r;
    report.epsilon = eps;
    report.pool = pool.size();
    report.proprietary = proprietary.size();
    std::vector<SelectionOutcome> decisions;
    std::vector<std::pair<const LogSequence*, Label>> clean;
    std::vector<std::size_t> noisy;
    std::size_t answered = 0, agreed = 0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      SelectionOutcome d{remaining[k].sequence_id, llm[k].label, sm[k].label, sm[k].confidence,
                         PoolVerdict::kNoisy, llm[k].status, r};
      ++report.confidence_histogram[histogram_bin(sm[k].confidence)];
      if (llm[k].status == LabelStatus::kUnavailable) ++report.llm_unavailable;
      if (llm[k].status == LabelStatus::kDefaulted) ++report.llm_defaulted;
      if (llm[k].status == LabelStatus::kDropped) ++report.llm_dropped;
      if (d.y_llm) {
        ++answered;
        if (*d.y_llm == d.y_sm) ++agreed;
        d.verdict = select(*d.y_llm, d.y_sm, d.confidence, eps);
      }
      if (d.verdict == PoolVerdict::kClean) {
        const std::size_t i = pool[k];
        clean.emplace_back(&proprietary[i], d.y_sm);
        result.labels[i] = FinalLabel{proprietary[i].sequence_id, d.y_sm, LabelSource::kClean, r};
      } else {
        noisy.push_back(pool[k]);
      }
      decisions.push_back(std::move(d));
    }
    cumulative += clean.size();
    report.clean = clean.size();
    report.noisy = noisy.size();
    report.cumulative_clean = cumulative;
    report.agreement_rate = answered == 0 ? 0.0 : static_cast<double>(agreed) / static_cast<double>(answered);

    all_clean.insert(all_clean.end(), clean.begin(), clean.end());
    const auto& train_pool = cfg.cumulative_fine_tune ? all_clean : clean;
    const auto samples = clean_samples(train_pool);
    if (!samples.empty()) {
      report.fine_tune_loss_before = evaluate_loss(current, inputs, samples, LossWeights::c()).classification;
    }
    ModelParameters next =
        fine_tune(current, inputs, train_pool, cfg, mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(r) + 1)));
    if (!samples.empty()) {
      report.fine_tune_loss_after = evaluate_loss(next, inputs, samples, LossWeights::c()).classification;
    }
    augment(result.kb, clean, embeddings, r);
    result.models.push_back(std::move(next));
    result.rounds.push_back(report);
    result.selections.push_back(std::move(decisions));
    pool = std::move(noisy);
  }

  if (!pool.empty()) {
    std::vector<LogSequence> residual;
    residual.reserve(pool.size());
    for (const auto i : pool) residual.push_back(proprietary[i]);
    const auto preds = kernels::predict_batch_omp(result.final_model(), inputs, residual);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      result.labels[pool[k]] =
          FinalLabel{proprietary[pool[k]].sequence_id, preds[k].label, LabelSource::kFinalInference, -1};
    }
  }
  return result;
}

}  // namespace xlad
