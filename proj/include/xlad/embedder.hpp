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
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlad/common.hpp"
#include "xlad/drain.hpp"

namespace xlad {

/// Token -> vector lookup in the shared semantic space. Lookups are
/// case-insensitive. Either loaded from a text file or generated on demand
/// from a hash of the token bytes (unit-norm pseudo-random vectors).
class TokenVectorTable {
 public:
  static TokenVectorTable from_entries(std::size_t dimension,
                                       std::unordered_map<std::string, Vector> entries);
  /// `token v1 ... vd` per line, space separated; the first line fixes d.
  static TokenVectorTable load(const std::filesystem::path& path);
  static TokenVectorTable read(std::istream& in);
  static TokenVectorTable hashed(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const noexcept { return dimension_; }
  bool is_hashed() const noexcept { return hashed_; }
  std::optional<Vector> lookup(std::string_view token) const;

 private:
  std::size_t dimension_ = 0;
  bool hashed_ = false;
  std::uint64_t seed_ = 0;
  std::unordered_map<std::string, Vector> entries_;
};

/// Deterministic unit-norm vector for `token`, seeded by its bytes.
Vector hashed_token_vector(std::string_view token, std::size_t dimension, std::uint64_t seed);

/// Lower-cased words of a template's literal tokens. Tokens are split at
/// non-alphanumeric characters and camelCase boundaries; wildcards are skipped.
std::vector<std::string> template_words(const Template& tmpl);

using IdfTable = std::unordered_map<std::string, double>;

/// Smoothed idf over templates (each template counted once):
/// idf(w) = ln((1 + N) / (1 + df(w))) + 1.
IdfTable compute_idf(std::span<const Template> templates);

struct EventEmbedding {
  int event_id = 0;
  Vector vector;
};

/// Weighted mean of the template's word vectors; zero vector when no word is
/// known to the table. A missing idf table means unit weights.
EventEmbedding embed_event(const Template& tmpl, const TokenVectorTable& table, const IdfTable* idf);

/// Dense embedding matrix, one column per event id (d x events).
class EventEmbeddings {
 public:
  EventEmbeddings() = default;
  EventEmbeddings(std::size_t dimension, std::size_t events) : columns_(Matrix::Zero(dimension, events)) {}
  explicit EventEmbeddings(Matrix columns) : columns_(std::move(columns)) {}

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(columns_.rows()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(columns_.cols()); }
  auto column(int event_id) const { return columns_.col(event_id); }
  auto column(int event_id) { return columns_.col(event_id); }
  const Matrix& matrix() const noexcept { return columns_; }

  void write(std::ostream& out) const;
  static EventEmbeddings read(std::istream& in);

 private:
  Matrix columns_;
};

/// Embeds every template of the store (parallel over templates).
EventEmbeddings embed_all(const TemplateStore& store, const TokenVectorTable& table, const IdfTable* idf);

/// One entry per distinct event id used by the source sequences, ascending id.
std::vector<EventEmbedding> build_source_prototypes(std::span<const LogSequence> source,
                                                    const EventEmbeddings& embeddings);

}  // namespace xlad
