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
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xlad/ingest.hpp"

namespace xlad {

inline constexpr std::string_view kWildcard = "<*>";

inline bool is_wildcard(std::string_view token) noexcept { return token == kWildcard; }

/// Default masking patterns: block ids, IPv4 (optional leading '/' and port),
/// hex literals and plain numbers. Each must match a whole token.
std::vector<std::string> default_mask_patterns();

struct PreprocessConfig {
  /// Leading whitespace-delimited header columns stripped before tokenizing
  /// (HDFS: 5, BGL: 9).
  std::size_t header_fields = 0;
  std::vector<std::string> mask_patterns = default_mask_patterns();
};

/// Header stripping, whitespace tokenization and parameter masking.
class Preprocessor {
 public:
  explicit Preprocessor(PreprocessConfig config = {});

  /// Never returns an empty list: a line with no content becomes {"<*>"}.
  std::vector<std::string> operator()(std::string_view raw_text) const;

  const PreprocessConfig& config() const noexcept { return config_; }

 private:
  PreprocessConfig config_;
  std::optional<std::regex> mask_;
};

std::vector<std::string> preprocess(std::string_view raw_text, const Preprocessor& preprocessor);

struct Template {
  int event_id = 0;
  std::vector<std::string> tokens;
  std::size_t support_count = 0;

  std::string text() const;
};

struct DrainConfig {
  /// Tree depth counting the root, the length layer, the token layers and the
  /// leaf; depth 4 descends one leading token.
  std::size_t depth = 4;
  double similarity_threshold = 0.4;
  std::size_t max_children = 100;
};

/// Fraction of positions where the template holds the same literal token.
double seq_distance(std::span<const std::string> template_tokens, std::span<const std::string> tokens);

/// Drain fixed-depth parse tree plus the template list it indexes.
///
/// Template ids are assigned in first-seen order. Every preprocessed token
/// sequence seen by `parse` is remembered together with the id it received,
/// so re-parsing or matching a seen line always returns its original id even
/// after later merges generalize other templates.
class TemplateStore {
 public:
  explicit TemplateStore(DrainConfig config = {});
  TemplateStore(TemplateStore&&) noexcept;
  TemplateStore& operator=(TemplateStore&&) noexcept;
  ~TemplateStore();

  /// Online parse: matches or creates a template and bumps its support count.
  int parse(std::span<const std::string> tokens);

  /// Read-only lookup against the current tree; nullopt if nothing matches.
  std::optional<int> match(std::span<const std::string> tokens) const;

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  const DrainConfig& config() const noexcept { return config_; }
  const std::vector<Template>& templates() const noexcept { return templates_; }
  const Template& at(int event_id) const { return templates_.at(static_cast<std::size_t>(event_id)); }
  std::size_t size() const noexcept { return templates_.size(); }

  /// Largest fan-out of any internal token node.
  std::size_t max_fanout() const;

  /// `event_id<TAB>support_count<TAB>template`, one line per template.
  void dump(std::ostream& out) const;
  /// Rebuilds a frozen store from a dump.
  static TemplateStore load(std::istream& in, DrainConfig config = {});

 private:
  struct Node;

  std::optional<int> tree_search(std::span<const std::string> tokens) const;
  void add_to_tree(int event_id);
  static std::string memo_key(std::span<const std::string> tokens);

  DrainConfig config_;
  std::unique_ptr<Node> root_;
  std::vector<Template> templates_;
  std::unordered_map<std::string, int> seen_;
  bool frozen_ = false;
};

int parse_line(TemplateStore& store, std::span<const std::string> tokens);

/// Parses every raw line of every sequence with the preprocessor registered for
/// its system and fills `events`. One store is shared by all systems.
void parse_corpus(std::span<LogSequence> sequences, TemplateStore& store,
                  const std::map<std::string, Preprocessor>& preprocessors);

}  // namespace xlad
