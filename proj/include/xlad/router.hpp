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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlad/common.hpp"
#include "xlad/embedder.hpp"
#include "xlad/ingest.hpp"

namespace xlad {

/// a.b / (|a||b|), defined as 0 when either norm is 0.
double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

enum class Verdict { kGeneral, kProprietary };

std::string_view to_string(Verdict verdict) noexcept;

struct RoutingDecision {
  std::string sequence_id;
  /// Best cosine against the source prototypes, per event.
  std::vector<double> event_sims;
  /// Minimum of event_sims: the bottleneck event's similarity.
  double sequence_score = 0.0;
  double threshold = 0.0;
  std::optional<Verdict> verdict;
};

/// Scores one sequence by the min-over-events of max-over-prototypes cosine.
RoutingDecision score_sequence(const LogSequence& sequence, const EventEmbeddings& embeddings,
                               std::span<const EventEmbedding> prototypes);

struct ThresholdPolicy {
  enum class Kind { kMean, kFixed } kind = Kind::kMean;
  double value = 0.0;

  static ThresholdPolicy mean() { return {Kind::kMean, 0.0}; }
  static ThresholdPolicy fixed(double tau) { return {Kind::kFixed, tau}; }
};

/// Mean of the scores, or the fixed value clamped to [0, 1].
double choose_threshold(std::span<const double> scores, const ThresholdPolicy& policy);

/// Ties (score == tau) go to the general branch.
Verdict classify(double score, double tau) noexcept;

struct RoutingResult {
  double threshold = 0.0;
  std::size_t prototype_count = 0;
  std::vector<LogSequence> general;
  std::vector<LogSequence> proprietary;
  /// One per input sequence, in input order.
  std::vector<RoutingDecision> decisions;
};

/// Splits `targets` by `scores` (parallel to targets) at `tau`.
RoutingResult route(std::span<const LogSequence> targets, std::span<const double> scores, double tau);

/// Scores every target with the parallel kernels, picks tau, and routes.
RoutingResult route_targets(std::span<const LogSequence> targets, const EventEmbeddings& embeddings,
                            std::span<const EventEmbedding> prototypes, const ThresholdPolicy& policy);

/// Header `# tau=<tau> prototypes=<m>` then `sequence_id<TAB>score<TAB>verdict`.
void write_routing_report(std::ostream& out, const RoutingResult& result);

struct RoutingReport {
  double threshold = 0.0;
  std::size_t prototype_count = 0;
  std::vector<std::pair<std::string, double>> scores;
  std::vector<Verdict> verdicts;
};
RoutingReport read_routing_report(std::istream& in);

}  // namespace xlad
