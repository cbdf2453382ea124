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

#include "xlad/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace xlad {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Vector hashed_token_vector(std::string_view token, std::size_t dimension, std::uint64_t seed) {
  const std::string key = lowercase(token);
  std::mt19937_64 engine(mix64(fnv1a64(key) ^ mix64(seed)));
  Vector v(static_cast<Eigen::Index>(dimension));
  // Box-Muller over 53-bit uniforms keeps the stream identical across platforms.
  for (std::size_t i = 0; i < dimension; i += 2) {
    const double u1 = 1.0 - unit_interval(engine());
    const double u2 = unit_interval(engine());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    v[static_cast<Eigen::Index>(i)] = radius * std::cos(2.0 * M_PI * u2);
    if (i + 1 < dimension) v[static_cast<Eigen::Index>(i + 1)] = radius * std::sin(2.0 * M_PI * u2);
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

TokenVectorTable TokenVectorTable::from_entries(std::size_t dimension,
                                                std::unordered_map<std::string, Vector> entries) {
  TokenVectorTable table;
  table.dimension_ = dimension;
  for (auto& [token, vec] : entries) {
    if (static_cast<std::size_t>(vec.size()) != dimension) {
      throw Error("token vector for '" + token + "' has dimension " + std::to_string(vec.size()) +
                  ", expected " + std::to_string(dimension));
    }
    table.entries_[lowercase(token)] = std::move(vec);
  }
  return table;
}

TokenVectorTable TokenVectorTable::read(std::istream& in) {
  std::unordered_map<std::string, Vector> entries;
  std::size_t dimension = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    for (double v; fields >> v;) values.push_back(v);
    if (!fields.eof()) throw Error("non-numeric value in token vector line " + std::to_string(lineno));
    if (dimension == 0) dimension = values.size();
    if (values.empty() || values.size() != dimension) {
      throw Error("dimension mismatch in token vector line " + std::to_string(lineno));
    }
    entries[lowercase(token)] = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(dimension));
  }
  if (dimension == 0) throw Error("token vector file is empty");
  return from_entries(dimension, std::move(entries));
}

TokenVectorTable TokenVectorTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read token vector file " + path.string());
  return read(in);
}

TokenVectorTable TokenVectorTable::hashed(std::size_t dimension, std::uint64_t seed) {
  if (dimension == 0) throw Error("token vector dimension must be positive");
  TokenVectorTable table;
  table.dimension_ = dimension;
  table.hashed_ = true;
  table.seed_ = seed;
  return table;
}

std::optional<Vector> TokenVectorTable::lookup(std::string_view token) const {
  if (hashed_) return hashed_token_vector(token, dimension_, seed_);
  const auto it = entries_.find(lowercase(token));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> template_words(const Template& tmpl) {
  std::vector<std::string> words;
  for (const auto& token : tmpl.tokens) {
    if (is_wildcard(token)) continue;
    std::string current;
    auto flush = [&] {
      if (!current.empty()) words.push_back(lowercase(current));
      current.clear();
    };
    for (std::size_t i = 0; i < token.size(); ++i) {
      const char c = token[i];
      if (!is_alnum(c)) {
        flush();
        continue;
      }
      // camelCase: "PacketResponder" -> packet, responder; "HTTPServer" -> http, server.
      if (is_upper(c) && !current.empty()) {
        const bool after_lower = is_lower(current.back());
        const bool acronym_end = is_upper(current.back()) && i + 1 < token.size() && is_lower(token[i + 1]);
        if (after_lower || acronym_end) flush();
      }
      current += c;
    }
    flush();
  }
  return words;
}

IdfTable compute_idf(std::span<const Template> templates) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& tmpl : templates) {
    const auto words = template_words(tmpl);
    for (const auto& word : std::set<std::string>(words.begin(), words.end())) ++df[word];
  }
  const double n = static_cast<double>(templates.size());
  IdfTable idf;
  for (const auto& [word, count] : df) {
    idf[word] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  return idf;
}

EventEmbedding embed_event(const Template& tmpl, const TokenVectorTable& table, const IdfTable* idf) {
  if (tmpl.tokens.empty()) throw Error("template " + std::to_string(tmpl.event_id) + " has no tokens");
  const auto d = static_cast<Eigen::Index>(table.dimension());
  Vector sum = Vector::Zero(d);
  double weight_sum = 0.0;
  for (const auto& word : template_words(tmpl)) {
    const auto vec = table.lookup(word);
    if (!vec) continue;
    if (vec->size() != d) throw Error("dimension mismatch in token vector table");
    double weight = 1.0;
    if (idf != nullptr) {
      const auto it = idf->find(word);
      weight = it == idf->end() ? 1.0 : it->second;
    }
    sum += weight * *vec;
    weight_sum += weight;
  }
  if (weight_sum > 0.0) sum /= weight_sum;
  return EventEmbedding{tmpl.event_id, std::move(sum)};
}

EventEmbeddings embed_all(const TemplateStore& store, const TokenVectorTable& table, const IdfTable* idf) {
  const auto& templates = store.templates();
  EventEmbeddings out(table.dimension(), templates.size());
  const auto n = static_cast<std::ptrdiff_t>(templates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out.column(static_cast<int>(i)) = embed_event(templates[static_cast<std::size_t>(i)], table, idf).vector;
  }
  return out;
}

std::vector<EventEmbedding> build_source_prototypes(std::span<const LogSequence> source,
                                                    const EventEmbeddings& embeddings) {
  std::set<int> ids;
  for (const auto& seq : source) ids.insert(seq.events.begin(), seq.events.end());
  std::vector<EventEmbedding> prototypes;
  prototypes.reserve(ids.size());
  for (const int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= embeddings.size()) {
      throw Error("source event " + std::to_string(id) + " has no embedding");
    }
    prototypes.push_back(EventEmbedding{id, embeddings.column(id)});
  }
  return prototypes;
}

void EventEmbeddings::write(std::ostream& out) const {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index j = 0; j < columns_.cols(); ++j) {
    out << j;
    for (Eigen::Index i = 0; i < columns_.rows(); ++i) out << ' ' << columns_(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

EventEmbeddings EventEmbeddings::read(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream fields(line);
    long long id;
    if (!(fields >> id)) continue;
    if (id != static_cast<long long>(rows.size())) {
      throw Error("embedding ids must be consecutive from 0 (line " + std::to_string(lineno) + ")");
    }
    std::vector<double> values;
    for (double v; fields >> v;) values.push_back(v);
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error("dimension mismatch in embedding line " + std::to_string(lineno));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) return {};
  Matrix columns(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    columns.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Vector>(rows[j].data(), static_cast<Eigen::Index>(rows[j].size()));
  }
  return EventEmbeddings(std::move(columns));
}

}  // namespace xlad
