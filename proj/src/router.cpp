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

#include "xlad/router.hpp"

#include <algorithm>

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "xlad/kernels.hpp"

namespace xlad {

double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) {
    throw Error("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (!a.allFinite() || !b.allFinite()) throw Error("cosine: non-finite input");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::string_view to_string(Verdict verdict) noexcept {
  return verdict == Verdict::kGeneral ? "general" : "proprietary";
}

RoutingDecision score_sequence(const LogSequence& sequence, const EventEmbeddings& embeddings,
                               std::span<const EventEmbedding> prototypes) {
  if (sequence.events.empty()) throw Error("cannot score empty sequence " + sequence.sequence_id);
  if (prototypes.empty()) throw Error("source prototype set is empty");
  RoutingDecision decision;
  decision.sequence_id = sequence.sequence_id;
  decision.event_sims.reserve(sequence.events.size());
  for (const int event : sequence.events) {
    if (event < 0 || static_cast<std::size_t>(event) >= embeddings.size()) {
      throw Error("event " + std::to_string(event) + " of " + sequence.sequence_id + " has no embedding");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& proto : prototypes) best = std::max(best, cosine(embeddings.column(event), proto.vector));
    decision.event_sims.push_back(best);
  }
  decision.sequence_score = *std::min_element(decision.event_sims.begin(), decision.event_sims.end());
  return decision;
}

double choose_threshold(std::span<const double> scores, const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::kFixed) return std::clamp(policy.value, 0.0, 1.0);
  if (scores.empty()) throw Error("mean threshold needs at least one score");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

Verdict classify(double score, double tau) noexcept {
  return score >= tau ? Verdict::kGeneral : Verdict::kProprietary;
}

RoutingResult route(std::span<const LogSequence> targets, std::span<const double> scores, double tau) {
  if (scores.size() != targets.size()) throw Error("route: one score per target sequence required");
  RoutingResult result;
  result.threshold = tau;
  result.decisions.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    RoutingDecision decision;
    decision.sequence_id = targets[i].sequence_id;
    decision.sequence_score = scores[i];
    decision.threshold = tau;
    decision.verdict = classify(scores[i], tau);
    (*decision.verdict == Verdict::kGeneral ? result.general : result.proprietary).push_back(targets[i]);
    result.decisions.push_back(std::move(decision));
  }
  return result;
}

RoutingResult route_targets(std::span<const LogSequence> targets, const EventEmbeddings& embeddings,
                            std::span<const EventEmbedding> prototypes, const ThresholdPolicy& policy) {
  if (prototypes.empty()) throw Error("source prototype set is empty");
  Matrix proto(static_cast<Eigen::Index>(embeddings.dimension()), static_cast<Eigen::Index>(prototypes.size()));
  for (std::size_t j = 0; j < prototypes.size(); ++j) proto.col(static_cast<Eigen::Index>(j)) = prototypes[j].vector;

  const auto event_best = kernels::event_max_similarity_omp(embeddings.matrix(), proto);
  const auto scores = kernels::sequence_min_scores_omp(targets, event_best);
  const double tau = choose_threshold(scores, policy);
  auto result = route(targets, scores, tau);
  result.prototype_count = prototypes.size();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& decision = result.decisions[i];
    decision.event_sims.reserve(targets[i].events.size());
    for (const int e : targets[i].events) decision.event_sims.push_back(event_best[static_cast<std::size_t>(e)]);
  }
  return result;
}

void write_routing_report(std::ostream& out, const RoutingResult& result) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "# tau=" << result.threshold << " prototypes=" << result.prototype_count << '\n';
  for (const auto& decision : result.decisions) {
    out << decision.sequence_id << '\t' << decision.sequence_score << '\t'
        << to_string(decision.verdict.value_or(classify(decision.sequence_score, result.threshold))) << '\n';
  }
  out.precision(old_precision);
}

RoutingReport read_routing_report(std::istream& in) {
  RoutingReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# tau=", 0) != 0) throw Error("routing report lacks header");
  {
    std::istringstream header(line.substr(6));
    std::string rest;
    header >> report.threshold >> rest;
    if (rest.rfind("prototypes=", 0) != 0) throw Error("routing report header malformed");
    report.prototype_count = std::stoull(rest.substr(11));
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw Error("malformed routing line: " + line);
    report.scores.emplace_back(line.substr(0, t1), std::stod(line.substr(t1 + 1, t2 - t1 - 1)));
    const auto verdict = line.substr(t2 + 1);
    if (verdict == "general") {
      report.verdicts.push_back(Verdict::kGeneral);
    } else if (verdict == "proprietary") {
      report.verdicts.push_back(Verdict::kProprietary);
    } else {
      throw Error("unknown verdict '" + verdict + "'");
    }
  }
  return report;
}

}  // namespace xlad
