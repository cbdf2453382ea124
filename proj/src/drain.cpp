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

#include "xlad/drain.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace xlad {

std::vector<std::string> default_mask_patterns() {
  return {
      R"(blk_-?\d+)",
      R"(/?(\d{1,3}\.){3}\d{1,3}(:\d+)?)",
      R"(0[xX][0-9a-fA-F]+)",
      R"([-+]?\d+(\.\d+)?)",
  };
}

Preprocessor::Preprocessor(PreprocessConfig config) : config_(std::move(config)) {
  if (config_.mask_patterns.empty()) return;
  std::string combined = "(?:";
  for (std::size_t i = 0; i < config_.mask_patterns.size(); ++i) {
    if (i > 0) combined += ")|(?:";
    combined += config_.mask_patterns[i];
  }
  combined += ")";
  try {
    mask_.emplace(combined, std::regex::ECMAScript | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw Error(std::string("invalid mask pattern: ") + e.what());
  }
}

std::vector<std::string> Preprocessor::operator()(std::string_view raw_text) const {
  std::vector<std::string> tokens;
  std::size_t field = 0;
  std::size_t pos = 0;
  while (true) {
    pos = raw_text.find_first_not_of(" \t\r\n", pos);
    if (pos == std::string_view::npos) break;
    const auto end = std::min(raw_text.find_first_of(" \t\r\n", pos), raw_text.size());
    const auto token = raw_text.substr(pos, end - pos);
    pos = end;
    if (field++ < config_.header_fields) continue;
    if (mask_ && std::regex_match(token.begin(), token.end(), *mask_)) {
      tokens.emplace_back(kWildcard);
    } else {
      tokens.emplace_back(token);
    }
  }
  if (tokens.empty()) tokens.emplace_back(kWildcard);
  return tokens;
}

std::vector<std::string> preprocess(std::string_view raw_text, const Preprocessor& preprocessor) {
  return preprocessor(raw_text);
}

std::string Template::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

double seq_distance(std::span<const std::string> template_tokens, std::span<const std::string> tokens) {
  if (template_tokens.size() != tokens.size() || tokens.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_wildcard(template_tokens[i]) && template_tokens[i] == tokens[i]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(tokens.size());
}

namespace {

bool has_digit(std::string_view token) {
  return std::any_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t wildcard_count(const std::vector<std::string>& tokens) {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](const std::string& t) {
    return is_wildcard(t);
  }));
}

}  // namespace

struct TemplateStore::Node {
  std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
  std::vector<int> clusters;

  Node* child(std::string_view key) const {
    const auto it = children.find(key);
    return it == children.end() ? nullptr : it->second.get();
  }
  Node* add(std::string_view key) {
    auto& slot = children[std::string(key)];
    if (!slot) slot = std::make_unique<Node>();
    return slot.get();
  }
};

TemplateStore::TemplateStore(DrainConfig config) : config_(config), root_(std::make_unique<Node>()) {
  if (config_.depth < 3) throw Error("drain depth must be >= 3");
  if (!(config_.similarity_threshold > 0.0 && config_.similarity_threshold <= 1.0)) {
    throw Error("drain similarity threshold must lie in (0, 1]");
  }
  if (config_.max_children < 1) throw Error("drain max_children must be >= 1");
}

TemplateStore::TemplateStore(TemplateStore&&) noexcept = default;
TemplateStore& TemplateStore::operator=(TemplateStore&&) noexcept = default;
TemplateStore::~TemplateStore() = default;

std::string TemplateStore::memo_key(std::span<const std::string> tokens) {
  std::string key;
  for (const auto& token : tokens) {
    key += token;
    key += '\x1f';
  }
  return key;
}

std::optional<int> TemplateStore::tree_search(std::span<const std::string> tokens) const {
  const Node* node = root_->child(std::to_string(tokens.size()));
  if (node == nullptr) return std::nullopt;
  const std::size_t layers = std::min(config_.depth - 3, tokens.size());
  for (std::size_t i = 0; i < layers; ++i) {
    const Node* next = node->child(tokens[i]);
    if (next == nullptr) next = node->child(kWildcard);
    if (next == nullptr) return std::nullopt;
    node = next;
  }

  std::optional<int> best;
  double best_sim = -1.0;
  std::size_t best_params = 0;
  for (const int id : node->clusters) {
    const auto& tmpl = templates_[static_cast<std::size_t>(id)];
    const double sim = seq_distance(tmpl.tokens, tokens);
    const std::size_t params = wildcard_count(tmpl.tokens);
    if (sim > best_sim || (sim == best_sim && params > best_params)) {
      best = id;
      best_sim = sim;
      best_params = params;
    }
  }
  if (best && best_sim >= config_.similarity_threshold) return best;
  return std::nullopt;
}

void TemplateStore::add_to_tree(int event_id) {
  const auto& tokens = templates_[static_cast<std::size_t>(event_id)].tokens;
  Node* node = root_->add(std::to_string(tokens.size()));
  const std::size_t layers = std::min(config_.depth - 3, tokens.size());
  const std::size_t limit = config_.max_children;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string& token = tokens[i];
    if (Node* next = node->child(token)) {
      node = next;
      continue;
    }
    const bool has_wild = node->child(kWildcard) != nullptr;
    const std::size_t n = node->children.size();
    if (has_digit(token)) {
      node = node->add(kWildcard);
    } else if (has_wild) {
      node = n < limit ? node->add(token) : node->child(kWildcard);
    } else if (n + 1 < limit) {
      node = node->add(token);
    } else {
      // Last free slot is reserved for the catch-all child.
      node = node->add(kWildcard);
    }
  }
  node->clusters.push_back(event_id);
}

int TemplateStore::parse(std::span<const std::string> tokens) {
  if (frozen_) throw Error("template store is frozen");
  if (tokens.empty()) throw Error("cannot parse an empty token list");
  const auto key = memo_key(tokens);
  if (const auto it = seen_.find(key); it != seen_.end()) {
    ++templates_[static_cast<std::size_t>(it->second)].support_count;
    return it->second;
  }
  int id;
  if (const auto found = tree_search(tokens)) {
    id = *found;
    auto& tmpl = templates_[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tmpl.tokens[i] != tokens[i]) tmpl.tokens[i] = std::string(kWildcard);
    }
    ++tmpl.support_count;
  } else {
    id = static_cast<int>(templates_.size());
    templates_.push_back(Template{id, {tokens.begin(), tokens.end()}, 1});
    add_to_tree(id);
  }
  seen_.emplace(key, id);
  return id;
}

std::optional<int> TemplateStore::match(std::span<const std::string> tokens) const {
  if (tokens.empty()) return std::nullopt;
  if (const auto it = seen_.find(memo_key(tokens)); it != seen_.end()) return it->second;
  return tree_search(tokens);
}

std::size_t TemplateStore::max_fanout() const {
  std::size_t widest = 0;
  std::function<void(const Node&)> visit = [&](const Node& node) {
    widest = std::max(widest, node.children.size());
    for (const auto& [key, child] : node.children) visit(*child);
  };
  for (const auto& [len, node] : root_->children) visit(*node);
  return widest;
}

void TemplateStore::dump(std::ostream& out) const {
  for (const auto& tmpl : templates_) {
    out << tmpl.event_id << '\t' << tmpl.support_count << '\t' << tmpl.text() << '\n';
  }
}

TemplateStore TemplateStore::load(std::istream& in, DrainConfig config) {
  TemplateStore store(config);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw Error("malformed template line " + std::to_string(lineno));
    Template tmpl;
    try {
      tmpl.event_id = std::stoi(line.substr(0, tab1));
      tmpl.support_count = std::stoull(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      throw Error("malformed template line " + std::to_string(lineno));
    }
    if (tmpl.event_id != static_cast<int>(store.templates_.size())) {
      throw Error("template ids must be consecutive from 0 (line " + std::to_string(lineno) + ")");
    }
    std::istringstream words(line.substr(tab2 + 1));
    for (std::string token; words >> token;) tmpl.tokens.push_back(token);
    if (tmpl.tokens.empty()) throw Error("empty template on line " + std::to_string(lineno));
    store.templates_.push_back(std::move(tmpl));
    store.add_to_tree(static_cast<int>(store.templates_.size()) - 1);
  }
  store.frozen_ = true;
  return store;
}

int parse_line(TemplateStore& store, std::span<const std::string> tokens) { return store.parse(tokens); }

void parse_corpus(std::span<LogSequence> sequences, TemplateStore& store,
                  const std::map<std::string, Preprocessor>& preprocessors) {
  for (auto& seq : sequences) {
    const auto it = preprocessors.find(seq.system_id);
    if (it == preprocessors.end()) throw Error("no preprocessor configured for system '" + seq.system_id + "'");
    seq.events.clear();
    seq.events.reserve(seq.raw_lines.size());
    for (const auto& line : seq.raw_lines) seq.events.push_back(store.parse(it->second(line)));
  }
}

}  // namespace xlad
