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

#include "xlad/ingest.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xlad {
namespace {

std::string_view first_field(std::string_view line, std::size_t index) {
  std::size_t pos = 0;
  for (std::size_t i = 0;; ++i) {
    pos = line.find_first_not_of(" \t", pos);
    if (pos == std::string_view::npos) return {};
    const auto end = std::min(line.find_first_of(" \t", pos), line.size());
    if (i == index) return line.substr(pos, end - pos);
    pos = end;
  }
}

template <typename T>
std::optional<T> parse_integer(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) return std::nullopt;
  return value;
}

// "081109 203615 ..." -> epoch ms (UTC).
std::optional<std::int64_t> hdfs_timestamp(std::string_view line) {
  const auto date = first_field(line, 0);
  const auto time = first_field(line, 1);
  if (date.size() != 6 || time.size() != 6) return std::nullopt;
  const auto d = parse_integer<int>(date);
  const auto t = parse_integer<int>(time);
  if (!d || !t) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{2000 + *d / 10000}, month{static_cast<unsigned>(*d / 100 % 100)},
                           day{static_cast<unsigned>(*d % 100)}};
  const int hh = *t / 10000, mm = *t / 100 % 100, ss = *t % 100;
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return duration_cast<milliseconds>(tp.time_since_epoch()).count();
}

std::optional<std::int64_t> bgl_timestamp(std::string_view line) {
  const auto secs = parse_integer<std::int64_t>(first_field(line, 1));
  if (!secs) return std::nullopt;
  return *secs * 1000;
}

LogRecord make_record(const std::string& system_id, CorpusFormat format, std::string_view line) {
  LogRecord record;
  record.system_id = system_id;
  record.raw_text = std::string(line);
  switch (format) {
    case CorpusFormat::kHdfsBlock:
      record.timestamp_ms = hdfs_timestamp(line);
      record.session_key = find_block_id(line);
      break;
    case CorpusFormat::kBglWindow:
      record.timestamp_ms = bgl_timestamp(line);
      break;
    case CorpusFormat::kGenericWindow:
      break;
  }
  return record;
}

bool bgl_alert(std::string_view line) { return first_field(line, 0) != "-"; }

std::string window_key(std::size_t index) {
  std::string digits = std::to_string(index);
  return "win_" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view tag) {
  if (tag == "hdfs-block") return CorpusFormat::kHdfsBlock;
  if (tag == "bgl-window") return CorpusFormat::kBglWindow;
  if (tag == "generic-window") return CorpusFormat::kGenericWindow;
  throw Error("unknown corpus format tag '" + std::string(tag) + "'");
}

std::string_view to_string(CorpusFormat format) noexcept {
  switch (format) {
    case CorpusFormat::kHdfsBlock: return "hdfs-block";
    case CorpusFormat::kBglWindow: return "bgl-window";
    case CorpusFormat::kGenericWindow: return "generic-window";
  }
  return "generic-window";
}

std::optional<std::string> find_block_id(std::string_view line) {
  for (auto pos = line.find("blk_"); pos != std::string_view::npos; pos = line.find("blk_", pos + 1)) {
    auto end = pos + 4;
    if (end < line.size() && line[end] == '-') ++end;
    const auto digits_begin = end;
    while (end < line.size() && line[end] >= '0' && line[end] <= '9') ++end;
    if (end > digits_begin) return std::string(line.substr(pos, end - pos));
  }
  return std::nullopt;
}

std::size_t window_count(std::size_t lines, const WindowSpec& window) {
  if (lines == 0) return 0;
  if (lines <= window.size) return 1;
  return (lines - window.size + window.stride - 1) / window.stride + 1;
}

LoadedCorpus load_corpus_lines(std::span<const std::string> lines, const std::string& system_id,
                               CorpusFormat format, std::optional<WindowSpec> window) {
  LoadedCorpus corpus;
  corpus.system_id = system_id;
  corpus.format = format;

  if (format == CorpusFormat::kHdfsBlock) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto text = trim(lines[i]);
      if (text.empty()) continue;
      auto record = make_record(system_id, format, text);
      if (!record.session_key) {
        corpus.unassigned_lines.push_back(i + 1);
        continue;
      }
      auto [it, inserted] = index.try_emplace(*record.session_key, corpus.sessions.size());
      if (inserted) corpus.sessions.push_back(RawSession{*record.session_key, {}, std::nullopt});
      corpus.sessions[it->second].records.push_back(std::move(record));
    }
    return corpus;
  }

  if (!window) throw Error("window size/stride required for " + std::string(to_string(format)));
  if (window->size < 1) throw Error("window size must be >= 1");
  if (window->stride < 1) throw Error("window stride must be >= 1");

  std::vector<LogRecord> records;
  std::vector<bool> alerts;
  for (const auto& line : lines) {
    const auto text = trim(line);
    if (text.empty()) continue;
    records.push_back(make_record(system_id, format, text));
    alerts.push_back(format == CorpusFormat::kBglWindow && bgl_alert(text));
  }

  const std::size_t count = window_count(records.size(), *window);
  corpus.sessions.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = w * window->stride;
    const std::size_t end = std::min(begin + window->size, records.size());
    RawSession session{window_key(w), {}, std::nullopt};
    bool alert = false;
    for (std::size_t i = begin; i < end; ++i) {
      session.records.push_back(records[i]);
      session.records.back().session_key = session.session_key;
      alert = alert || alerts[i];
    }
    if (format == CorpusFormat::kBglWindow) session.inline_label = alert ? Label::kAnomalous : Label::kNormal;
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

LoadedCorpus load_corpus(const std::filesystem::path& path, const std::string& system_id,
                         CorpusFormat format, std::optional<WindowSpec> window) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read log file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  if (in.bad()) throw Error("read error on " + path.string());
  return load_corpus_lines(lines, system_id, format, window);
}

std::string make_sequence_id(std::string_view system_id, std::string_view session_key) {
  std::string id(system_id);
  id += ':';
  id += session_key;
  return id;
}

std::vector<LogSequence> attach_labels(const LoadedCorpus& corpus, const LabelMap* labels,
                                       SystemRole role) {
  std::vector<LogSequence> sequences;
  sequences.reserve(corpus.sessions.size());
  for (const auto& session : corpus.sessions) {
    LogSequence seq;
    seq.sequence_id = make_sequence_id(corpus.system_id, session.session_key);
    seq.system_id = corpus.system_id;
    seq.raw_lines.reserve(session.records.size());
    for (const auto& record : session.records) seq.raw_lines.push_back(record.raw_text);

    if (labels != nullptr) {
      if (const auto it = labels->find(session.session_key); it != labels->end()) seq.label = it->second;
    }
    if (!seq.label) seq.label = session.inline_label;
    if (role == SystemRole::kSource && !seq.label) {
      throw Error("unlabeled source session '" + session.session_key + "'");
    }
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

LabelMap read_label_csv(std::istream& in) {
  LabelMap labels;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "BlockId,Label") {
    throw Error("label file must start with header 'BlockId,Label'");
  }
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw Error("malformed label line " + std::to_string(lineno));
    const auto key = trim(text.substr(0, comma));
    const auto value = trim(text.substr(comma + 1));
    Label label;
    if (value == "Normal") {
      label = Label::kNormal;
    } else if (value == "Anomaly") {
      label = Label::kAnomalous;
    } else {
      throw Error("malformed label value '" + std::string(value) + "' on line " + std::to_string(lineno));
    }
    labels[std::string(key)] = label;
  }
  return labels;
}

LabelMap load_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read label file " + path.string());
  return read_label_csv(in);
}

GroundTruth GroundTruth::detach(std::vector<LogSequence>& sequences) {
  GroundTruth truth;
  for (auto& seq : sequences) {
    if (seq.label) truth.labels_[seq.sequence_id] = *seq.label;
    seq.label.reset();
  }
  return truth;
}

std::optional<Label> GroundTruth::find(const std::string& sequence_id) const {
  const auto it = labels_.find(sequence_id);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

Label GroundTruth::at(const std::string& sequence_id) const {
  const auto label = find(sequence_id);
  if (!label) throw Error("no ground truth for " + sequence_id);
  return *label;
}

void GroundTruth::insert(const std::string& sequence_id, Label label) { labels_[sequence_id] = label; }

void GroundTruth::write(std::ostream& out) const {
  for (const auto& [id, label] : labels_) out << id << '\t' << to_int(label) << '\n';
}

GroundTruth GroundTruth::read(std::istream& in) {
  GroundTruth truth;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw Error("malformed ground-truth line: " + line);
    const auto value = parse_integer<int>(trim(std::string_view(line).substr(tab + 1)));
    if (!value) throw Error("malformed ground-truth label: " + line);
    truth.labels_[line.substr(0, tab)] = label_from_int(*value);
  }
  return truth;
}

void write_sessions(std::ostream& out, std::span<const LogSequence> sequences) {
  for (const auto& seq : sequences) {
    nlohmann::ordered_json record;
    record["sequence_id"] = seq.sequence_id;
    record["system_id"] = seq.system_id;
    record["label"] = seq.label ? nlohmann::ordered_json(to_int(*seq.label)) : nlohmann::ordered_json(nullptr);
    record["lines"] = seq.raw_lines;
    if (!seq.events.empty()) record["events"] = seq.events;
    out << record.dump() << '\n';
  }
}

std::vector<LogSequence> read_sessions(std::istream& in) {
  std::vector<LogSequence> sequences;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      LogSequence seq;
      seq.sequence_id = record.at("sequence_id").get<std::string>();
      seq.system_id = record.at("system_id").get<std::string>();
      if (!record.at("label").is_null()) seq.label = label_from_int(record.at("label").get<int>());
      seq.raw_lines = record.at("lines").get<std::vector<std::string>>();
      if (record.contains("events")) seq.events = record.at("events").get<std::vector<int>>();
      if (!seq.events.empty() && seq.events.size() != seq.raw_lines.size()) {
        throw Error("events and lines differ in length");
      }
      sequences.push_back(std::move(seq));
    } catch (const nlohmann::json::exception& e) {
      throw Error("session file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return sequences;
}

}  // namespace xlad
