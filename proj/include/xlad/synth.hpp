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

// Seeded generator for a two-system log corpus with known structure: a block
// of templates shared verbatim by both systems and a block private to each,
// with anomalies injected as rare events or order corruption. Output is
// HDFS-style text (five header fields, one blk_ id per line) plus label CSVs,
// so it goes through the same ingest path as real data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "xlad/common.hpp"

namespace xlad {

struct SyntheticCorpusSpec {
  std::uint64_t seed = 7;
  std::size_t templates_per_system = 40;
  double shared_fraction = 0.5;
  /// Probability that a word of a system-specific template comes from the
  /// lexicon both systems use. Failure words of anomalous templates are
  /// always shared unless this is 0.
  double vocabulary_overlap = 0.3;
  double anomaly_rate = 0.15;
  std::size_t sequences_per_system = 5000;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  bool rare_event = true;
  bool order_corruption = false;
  /// Share of sequences that use at least one system-specific template.
  double proprietary_fraction = 0.4;
  /// Share of each template block reserved for anomalous events.
  double anomalous_template_fraction = 0.2;
  /// Extra rarely used normal templates per system, drawn only at
  /// system-specific positions. They keep novelty from reading as failure.
  std::size_t long_tail_templates = 60;
  std::string source_system = "sysa";
  std::string target_system = "sysb";

  /// Throws Error for an infeasible or out-of-range spec.
  void validate() const;
};

enum class SequenceKind { kGeneral, kProprietary };

struct SyntheticSession {
  std::string block_id;
  Label label = Label::kNormal;
  SequenceKind kind = SequenceKind::kGeneral;
};

struct SyntheticSystem {
  std::string system_id;
  std::vector<std::string> lines;
  std::vector<SyntheticSession> sessions;
  /// Template texts with parameter slots, shared block first.
  std::vector<std::string> templates;
};

struct SyntheticCorpus {
  SyntheticSystem source;
  SyntheticSystem target;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

struct SyntheticPaths {
  std::filesystem::path source_log;
  std::filesystem::path source_labels;
  std::filesystem::path target_log;
  std::filesystem::path target_labels;
  /// BlockId,Kind with Kind in {general, proprietary}; diagnostics only.
  std::filesystem::path target_kinds;
};

SyntheticPaths synthetic_paths(const std::filesystem::path& dir);
SyntheticPaths write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace xlad
