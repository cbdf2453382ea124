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

#include "xlad/rag_kb.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xlad/kernels.hpp"

namespace xlad {
namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

std::size_t header_value(const std::string& header, const std::string& key) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos) throw Error("knowledge base header lacks " + key);
  return static_cast<std::size_t>(std::stoull(header.substr(pos + key.size() + 1)));
}

}  // namespace

std::string to_string(const Provenance& p) {
  return p.kind == Provenance::Kind::kGeneralSmLabeled ? "general-sm-labeled"
                                                       : "clean-round-" + std::to_string(p.round);
}

Provenance parse_provenance(std::string_view text) {
  if (text == "general-sm-labeled") return Provenance::general();
  constexpr std::string_view prefix = "clean-round-";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
    return Provenance::clean(std::stoi(std::string(text.substr(prefix.size()))));
  }
  throw Error("unknown provenance '" + std::string(text) + "'");
}

Vector sequence_vector(const LogSequence& sequence, const EventEmbeddings& embeddings) {
  if (sequence.events.empty()) throw Error("sequence_vector: empty sequence " + sequence.sequence_id);
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(embeddings.dimension()));
  for (const int e : sequence.events) {
    if (e < 0 || static_cast<std::size_t>(e) >= embeddings.size()) {
      throw Error("sequence_vector: event " + std::to_string(e) + " has no embedding");
    }
    sum += embeddings.column(e);
  }
  return sum / static_cast<double>(sequence.events.size());
}

const KbEntry& KnowledgeBase::add(Vector vector, Label label, std::vector<std::string> raw_window,
                                  Provenance provenance) {
  if (static_cast<std::size_t>(vector.size()) != dimension_) {
    throw Error("knowledge base entry has dimension " + std::to_string(vector.size()) + ", expected " +
                std::to_string(dimension_));
  }
  const auto n = static_cast<Eigen::Index>(entries_.size());
  if (n == columns_.cols()) {
    Matrix grown(static_cast<Eigen::Index>(dimension_), std::max<Eigen::Index>(16, 2 * n));
    grown.leftCols(n) = columns_.leftCols(n);
    columns_ = std::move(grown);
  }
  columns_.col(n) = vector;
  entries_.push_back(
      KbEntry{entries_.size(), std::move(vector), label, std::move(raw_window), provenance});
  return entries_.back();
}

std::vector<KbEntry> KnowledgeBase::retrieve(const Eigen::Ref<const Vector>& query, std::size_t k) const {
  if (static_cast<std::size_t>(query.size()) != dimension_) {
    throw Error("retrieval query has dimension " + std::to_string(query.size()) + ", expected " +
                std::to_string(dimension_));
  }
  const auto n = static_cast<Eigen::Index>(entries_.size());
  const auto sims = kernels::cosine_scan_omp(columns_.leftCols(n), query);
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t top = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return entries_[a].entry_id < entries_[b].entry_id;
                    });
  std::vector<KbEntry> out;
  out.reserve(top);
  for (std::size_t i = 0; i < top; ++i) out.push_back(entries_[order[i]]);
  return out;
}

void KnowledgeBase::write(std::ostream& out) const {
  out << "# xlad-kb v1 dim=" << dimension_ << " round=" << round_ << '\n';
  char buf[32];
  for (const auto& e : entries_) {
    out << e.entry_id << '\t' << to_int(e.label) << '\t' << to_string(e.provenance) << '\t';
    for (Eigen::Index i = 0; i < e.vector.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e.vector[i]);
      if (i > 0) out << ',';
      out << buf;
    }
    out << '\t' << escape_field(join_lines(e.raw_window)) << '\n';
  }
}

void KnowledgeBase::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write knowledge base " + path.string());
  write(out);
}

KnowledgeBase KnowledgeBase::read(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# xlad-kb v1 ", 0) != 0) {
    throw Error("not an xlad knowledge base file (expected '# xlad-kb v1' header)");
  }
  KnowledgeBase kb(header_value(header, "dim"));
  kb.round_ = static_cast<int>(header_value(header, "round"));
  std::string line;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 5) throw Error("knowledge base line " + std::to_string(lineno) + ": expected 5 fields");
    const auto values = split(fields[3], ',');
    if (values.size() != kb.dimension_) {
      throw Error("knowledge base line " + std::to_string(lineno) + ": vector has wrong dimension");
    }
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = std::stod(values[i]);
    const auto window = unescape_field(fields[4]);
    std::vector<std::string> lines = window.empty() ? std::vector<std::string>{} : split(window, '\n');
    const auto& e = kb.add(std::move(v), label_from_int(std::stoll(fields[1])), std::move(lines),
                           parse_provenance(fields[2]));
    if (std::to_string(e.entry_id) != fields[0]) {
      throw Error("knowledge base line " + std::to_string(lineno) + ": entry ids must be 0,1,2,... in order");
    }
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read knowledge base " + path.string());
  return read(in);
}

KnowledgeBase init_kb(std::span<const LogSequence> general, const ModelParameters& params,
                      const EventEmbeddings& embeddings) {
  KnowledgeBase kb(embeddings.dimension());
  if (general.empty()) return kb;
  const auto preds = kernels::predict_batch_omp(params, embeddings.matrix(), general);
  for (std::size_t i = 0; i < general.size(); ++i) {
    kb.add(sequence_vector(general[i], embeddings), preds[i].label, general[i].raw_lines, Provenance::general());
  }
  return kb;
}

void augment(KnowledgeBase& kb, std::span<const std::pair<const LogSequence*, Label>> clean,
             const EventEmbeddings& embeddings, int round) {
  for (const auto& [seq, label] : clean) {
    kb.add(sequence_vector(*seq, embeddings), label, seq->raw_lines, Provenance::clean(round));
  }
  kb.set_round(round + 1);
}

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (++i == text.size()) throw Error("dangling escape in field");
    switch (text[i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default: throw Error(std::string("unknown escape \\") + text[i]);
    }
  }
  return out;
}

}  // namespace xlad
