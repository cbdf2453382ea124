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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlad/common.hpp"

namespace xlad {

enum class CorpusFormat { kHdfsBlock, kBglWindow, kGenericWindow };

CorpusFormat parse_corpus_format(std::string_view tag);
std::string_view to_string(CorpusFormat format) noexcept;

struct WindowSpec {
  std::size_t size = 100;
  std::size_t stride = 100;
};

struct LogRecord {
  std::string system_id;
  std::optional<std::int64_t> timestamp_ms;
  std::optional<std::string> session_key;
  std::string raw_text;
};

/// Records grouped by session key (block id or window index), in file order.
struct RawSession {
  std::string session_key;
  std::vector<LogRecord> records;
  /// Label read from the log itself (BGL alert column), if the format has one.
  std::optional<Label> inline_label;
};

struct LoadedCorpus {
  std::string system_id;
  CorpusFormat format = CorpusFormat::kGenericWindow;
  std::vector<RawSession> sessions;
  /// 1-based line numbers that carried no block id (hdfs-block only).
  std::vector<std::size_t> unassigned_lines;
};

/// Loads and sessionizes one log file. Windowed formats require `window`.
LoadedCorpus load_corpus(const std::filesystem::path& path, const std::string& system_id,
                         CorpusFormat format, std::optional<WindowSpec> window = std::nullopt);

/// Same as load_corpus, over lines already in memory.
LoadedCorpus load_corpus_lines(std::span<const std::string> lines, const std::string& system_id,
                               CorpusFormat format, std::optional<WindowSpec> window = std::nullopt);

/// Number of windows produced for `lines` input lines.
std::size_t window_count(std::size_t lines, const WindowSpec& window);

/// First `blk_<digits>` token in the line (with optional minus sign), if any.
std::optional<std::string> find_block_id(std::string_view line);

struct LogSequence {
  std::string sequence_id;
  std::string system_id;
  std::vector<int> events;
  std::optional<Label> label;
  std::vector<std::string> raw_lines;
};

enum class SystemRole { kSource, kTarget };

using LabelMap = std::unordered_map<std::string, Label>;

/// Builds sequences from sessions. Source sessions must all be labeled, either
/// through `labels` (keyed by session key) or by an inline alert label.
std::vector<LogSequence> attach_labels(const LoadedCorpus& corpus, const LabelMap* labels,
                                       SystemRole role);

/// HDFS-style label CSV: header `BlockId,Label`, Label in {Normal, Anomaly}.
LabelMap load_label_csv(const std::filesystem::path& path);
LabelMap read_label_csv(std::istream& in);

std::string make_sequence_id(std::string_view system_id, std::string_view session_key);

/// Held-out target labels. Built by stripping labels from target sequences;
/// only evaluation code and the mock labeler receive a reference to it.
class GroundTruth {
 public:
  GroundTruth() = default;

  static GroundTruth detach(std::vector<LogSequence>& sequences);

  std::optional<Label> find(const std::string& sequence_id) const;
  Label at(const std::string& sequence_id) const;
  void insert(const std::string& sequence_id, Label label);
  std::size_t size() const noexcept { return labels_.size(); }
  const std::map<std::string, Label>& entries() const noexcept { return labels_; }

  void write(std::ostream& out) const;
  static GroundTruth read(std::istream& in);

 private:
  std::map<std::string, Label> labels_;
};

/// Session file: JSON Lines, one object per sequence with keys
/// sequence_id, system_id, label (0, 1 or null), lines, and events when parsed.
void write_sessions(std::ostream& out, std::span<const LogSequence> sequences);
std::vector<LogSequence> read_sessions(std::istream& in);

}  // namespace xlad
