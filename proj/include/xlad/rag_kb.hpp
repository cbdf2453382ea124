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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlad/embedder.hpp"
#include "xlad/ingest.hpp"
#include "xlad/model.hpp"

namespace xlad {

/// Where a knowledge-base entry came from: a general sequence labeled by the
/// initial small model, or a clean sample selected in distillation round r.
struct Provenance {
  enum class Kind { kGeneralSmLabeled, kCleanRound } kind = Kind::kGeneralSmLabeled;
  int round = 0;

  static Provenance general() { return {}; }
  static Provenance clean(int r) { return {Kind::kCleanRound, r}; }
  bool operator==(const Provenance&) const = default;
};

/// "general-sm-labeled" or "clean-round-<r>".
std::string to_string(const Provenance& p);
Provenance parse_provenance(std::string_view text);

struct KbEntry {
  std::size_t entry_id = 0;
  Vector vector;
  Label label = Label::kNormal;
  std::vector<std::string> raw_window;
  Provenance provenance;
};

/// Mean of the sequence's event embeddings.
Vector sequence_vector(const LogSequence& sequence, const EventEmbeddings& embeddings);

/// Append-only store with exact top-k cosine retrieval. Entry ids are
/// assigned in insertion order and never reused; identical sequences added
/// twice become two entries.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::size_t dimension = 0) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  int round() const noexcept { return round_; }
  void set_round(int r) noexcept { round_ = r; }
  const std::vector<KbEntry>& entries() const noexcept { return entries_; }
  const KbEntry& at(std::size_t i) const { return entries_.at(i); }

  /// Assigns the next entry id and appends.
  const KbEntry& add(Vector vector, Label label, std::vector<std::string> raw_window, Provenance provenance);

  /// Up to k entries by descending cosine, ties by ascending entry id.
  std::vector<KbEntry> retrieve(const Eigen::Ref<const Vector>& query, std::size_t k = 3) const;

  /// `# xlad-kb v1 dim=<d> round=<r>` then one tab-separated row per entry.
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static KnowledgeBase read(std::istream& in);
  static KnowledgeBase load(const std::filesystem::path& path);

 private:
  std::size_t dimension_;
  int round_ = 0;
  std::vector<KbEntry> entries_;
  // Entry vectors as columns; capacity grows geometrically.
  Matrix columns_;
};

/// K(0): one entry per general sequence labeled by the small model.
KnowledgeBase init_kb(std::span<const LogSequence> general, const ModelParameters& params,
                      const EventEmbeddings& embeddings);

/// K(r+1) = K(r) plus the round's clean samples; earlier entries untouched.
void augment(KnowledgeBase& kb, std::span<const std::pair<const LogSequence*, Label>> clean,
             const EventEmbeddings& embeddings, int round);

/// Backslash escapes for \\, newline, tab and carriage return; lines of a
/// window are joined by an escaped newline.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

}  // namespace xlad
