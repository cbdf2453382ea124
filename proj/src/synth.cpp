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

#include "xlad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace xlad {
namespace {

const std::vector<std::string>& common_lexicon() {
  static const std::vector<std::string> words{
      "block",    "packet",   "receive", "send",     "write",    "read",     "replica",  "node",
      "server",   "client",   "request", "response", "session",  "cache",    "storage",  "volume",
      "disk",     "memory",   "thread",  "worker",   "queue",    "task",     "job",      "schedule",
      "commit",   "sync",     "flush",   "update",   "delete",   "create",   "open",     "close",
      "start",    "stop",     "report",  "register", "allocate", "transfer", "verify",   "checksum",
      "offset",   "size",     "bytes",   "buffer",   "stream",   "channel",  "lease",    "token",
      "config",   "service",  "instance", "network", "port",     "address",  "host",     "rack",
      "pool",     "index",    "segment", "snapshot", "metadata", "manager",  "handler",  "state"};
  return words;
}

// Kept small: with hash-fallback token vectors unrelated words are
// orthogonal, so a failure word the source never used carries no signal.
const std::vector<std::string>& anomaly_lexicon() {
  static const std::vector<std::string> words{"error", "failed", "exception", "timeout",
                                              "refused", "corrupt", "lost", "unavailable"};
  return words;
}

const std::vector<std::string>& components() {
  static const std::vector<std::string> names{"dfs.DataNode", "dfs.FSNamesystem", "dfs.DataBlockScanner",
                                              "core.Dispatcher", "net.Transport", "io.Storage"};
  return names;
}

constexpr const char* kBlockSlot = "{blk}";
constexpr const char* kNumberSlot = "{num}";
constexpr const char* kAddressSlot = "{ip}";

struct TemplateDef {
  std::vector<std::string> tokens;
  bool anomalous = false;
  std::string component;

  std::string text() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }
};

// Pseudo-words from consonant-vowel syllables; globally unique and disjoint
// from the real lexicons.
class WordFactory {
 public:
  explicit WordFactory(std::mt19937_64& rng) : rng_(rng) {
    for (const auto& w : common_lexicon()) used_.insert(w);
    for (const auto& w : anomaly_lexicon()) used_.insert(w);
  }

  std::string make() {
    static const char* consonants = "bcdfghjklmnprstvz";
    static const char* vowels = "aeiou";
    for (;;) {
      std::string w;
      const int syllables = 2 + static_cast<int>(rng_() % 2);
      for (int s = 0; s < syllables; ++s) {
        w += consonants[rng_() % 17];
        w += vowels[rng_() % 5];
      }
      if (rng_() % 3 == 0) w += consonants[rng_() % 17];
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> make_many(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(make());
    return out;
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[rng() % items.size()];
}

struct Lexicon {
  // Words for ordinary positions and for anomaly markers.
  std::vector<std::string> plain;
  std::vector<std::string> alarm;
};

TemplateDef make_template(WordFactory& words, const Lexicon& shared, const Lexicon& own, double overlap,
                          bool anomalous, std::mt19937_64& rng) {
  std::bernoulli_distribution use_shared(overlap);
  TemplateDef def;
  def.anomalous = anomalous;
  def.component = pick(components(), rng);
  const std::size_t body = 4 + rng() % 5;
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < body; ++i) tokens.push_back(pick(use_shared(rng) ? shared.plain : own.plain, rng));
  if (anomalous) {
    // Failure words are common to both systems unless the vocabularies are
    // disjoint.
    const auto& alarm = overlap > 0.0 ? shared.alarm : own.alarm;
    for (int k = 0; k < 3; ++k) tokens[rng() % tokens.size()] = pick(alarm, rng);
  }
  const std::size_t extra = rng() % 3;
  for (std::size_t k = 0; k < extra; ++k) {
    const auto pos = static_cast<std::ptrdiff_t>(rng() % (tokens.size() + 1));
    tokens.insert(tokens.begin() + pos, (rng() % 2 == 0) ? kNumberSlot : kAddressSlot);
  }
  tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(rng() % (tokens.size() + 1)), kBlockSlot);
  // A unique leading word keeps every template in its own parse-tree branch.
  tokens.insert(tokens.begin(), words.make());
  def.tokens = std::move(tokens);
  return def;
}

struct TemplateBlock {
  std::vector<std::size_t> normal;
  std::vector<std::size_t> anomalous;
  std::vector<std::size_t> tail;
};

constexpr double kTailShare = 0.25;

std::size_t anomalous_count(std::size_t block, double fraction) {
  if (block < 2) return 0;
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(block)));
  return std::clamp<std::size_t>(n, 1, block - 1);
}

void add_block(std::vector<TemplateDef>& defs, TemplateBlock& block, std::size_t count, double anomalous_fraction,
               WordFactory& words, const Lexicon& shared, const Lexicon& own, double overlap, std::mt19937_64& rng) {
  const std::size_t n_anom = anomalous_count(count, anomalous_fraction);
  for (std::size_t i = 0; i < count; ++i) {
    const bool anomalous = i >= count - n_anom;
    (anomalous ? block.anomalous : block.normal).push_back(defs.size());
    defs.push_back(make_template(words, shared, own, overlap, anomalous, rng));
  }
}

std::string block_id(std::mt19937_64& rng, std::set<std::string>& used) {
  for (;;) {
    const auto v = static_cast<long long>(rng() >> 2);
    const std::string id = "blk_" + std::string(rng() % 2 == 0 ? "-" : "") + std::to_string(v);
    if (used.insert(id).second) return id;
  }
}

std::string render(const TemplateDef& def, const std::string& blk, std::int64_t& clock, std::mt19937_64& rng) {
  clock += static_cast<std::int64_t>(rng() % 3);
  const std::int64_t day = clock / 86400;
  const std::int64_t sec = clock % 86400;
  char head[96];
  std::snprintf(head, sizeof head, "2601%02d %02d%02d%02d %d %s %s:", static_cast<int>(1 + day % 28),
                static_cast<int>(sec / 3600), static_cast<int>(sec / 60 % 60), static_cast<int>(sec % 60),
                static_cast<int>(10 + rng() % 990), def.anomalous ? (rng() % 2 ? "WARN" : "ERROR") : "INFO",
                def.component.c_str());
  std::string line = head;
  for (const auto& t : def.tokens) {
    line += ' ';
    if (t == kBlockSlot) {
      line += blk;
    } else if (t == kNumberSlot) {
      line += std::to_string(rng() % 100000);
    } else if (t == kAddressSlot) {
      char ip[40];
      std::snprintf(ip, sizeof ip, "/10.%d.%d.%d:%d", static_cast<int>(rng() % 256), static_cast<int>(rng() % 256),
                    static_cast<int>(rng() % 256), static_cast<int>(50000 + rng() % 100));
      line += ip;
    } else {
      line += t;
    }
  }
  return line;
}

// Exactly round(rate * n) flags set, at random positions.
std::vector<bool> exact_flags(std::size_t n, double rate, std::mt19937_64& rng) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<bool> flags(n, false);
  std::fill(flags.begin(), flags.begin() + static_cast<std::ptrdiff_t>(std::min(k, n)), true);
  std::shuffle(flags.begin(), flags.end(), rng);
  return flags;
}

struct SystemPlan {
  TemplateBlock shared;
  TemplateBlock own;
};

// Normal steps follow the template definition order, which is what order
// corruption breaks.
std::vector<std::size_t> normal_events(const SystemPlan& plan, bool proprietary, std::size_t length,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> events;
  for (std::size_t t = 0; t < length; ++t) {
    const bool own = proprietary && (plan.shared.normal.empty() || rng() % 2 == 0);
    if (own && !plan.own.tail.empty() && std::bernoulli_distribution(kTailShare)(rng)) {
      events.push_back(pick(plan.own.tail, rng));
    } else {
      events.push_back(pick(own ? plan.own.normal : plan.shared.normal, rng));
    }
  }
  if (proprietary && std::none_of(events.begin(), events.end(), [&](std::size_t e) {
        return std::find(plan.own.normal.begin(), plan.own.normal.end(), e) != plan.own.normal.end() ||
               std::find(plan.own.tail.begin(), plan.own.tail.end(), e) != plan.own.tail.end();
      })) {
    events[rng() % events.size()] = pick(plan.own.normal, rng);
  }
  std::sort(events.begin(), events.end());
  return events;
}

bool corrupt_order(std::vector<std::size_t>& events) {
  if (events.front() == events.back()) return false;
  std::reverse(events.begin(), events.end());
  return true;
}

void inject_rare(std::vector<std::size_t>& events, const TemplateBlock& pool, std::mt19937_64& rng) {
  const std::size_t count = 1 + rng() % 2;
  for (std::size_t k = 0; k < count; ++k) events[rng() % events.size()] = pick(pool.anomalous, rng);
}

SyntheticSystem build_system(const SyntheticCorpusSpec& spec, const std::string& system_id,
                             const std::vector<TemplateDef>& defs, const SystemPlan& plan, std::mt19937_64& rng) {
  SyntheticSystem sys;
  sys.system_id = system_id;
  auto collect = [&](const TemplateBlock& b) {
    for (auto i : b.normal) sys.templates.push_back(defs[i].text());
    for (auto i : b.anomalous) sys.templates.push_back(defs[i].text());
    for (auto i : b.tail) sys.templates.push_back(defs[i].text());
  };
  collect(plan.shared);
  collect(plan.own);

  const std::size_t n = spec.sequences_per_system;
  const auto anomalous = exact_flags(n, spec.anomaly_rate, rng);
  const auto proprietary = exact_flags(n, spec.proprietary_fraction, rng);
  std::set<std::string> used_blocks;
  std::int64_t clock = static_cast<std::int64_t>(rng() % 3600);
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);

  for (std::size_t s = 0; s < n; ++s) {
    SyntheticSession session;
    session.block_id = block_id(rng, used_blocks);
    session.kind = proprietary[s] ? SequenceKind::kProprietary : SequenceKind::kGeneral;
    auto events = normal_events(plan, proprietary[s], length(rng), rng);
    if (anomalous[s]) {
      session.label = Label::kAnomalous;
      const bool order = spec.order_corruption && (!spec.rare_event || rng() % 2 == 0);
      if (!order || !corrupt_order(events)) inject_rare(events, proprietary[s] ? plan.own : plan.shared, rng);
    }
    for (const auto e : events) sys.lines.push_back(render(defs[e], session.block_id, clock, rng));
    sys.sessions.push_back(std::move(session));
  }
  return sys;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  auto unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("synthetic.") + name + " must be in [0,1]");
  };
  unit("shared_fraction", shared_fraction);
  unit("vocabulary_overlap", vocabulary_overlap);
  unit("proprietary_fraction", proprietary_fraction);
  if (!(anomaly_rate > 0.0 && anomaly_rate < 1.0)) throw Error("synthetic.anomaly_rate must be in (0,1)");
  if (!(anomalous_template_fraction > 0.0 && anomalous_template_fraction < 1.0)) {
    throw Error("synthetic.anomalous_template_fraction must be in (0,1)");
  }
  if (sequences_per_system < 2) throw Error("synthetic.sequences_per_system must be >= 2");
  if (min_length == 0 || min_length > max_length) throw Error("synthetic: need 1 <= min_length <= max_length");
  if (!rare_event && !order_corruption) throw Error("synthetic: enable at least one anomaly mechanism");
  if (!rare_event && min_length < 2) throw Error("synthetic: order corruption alone needs min_length >= 2");
  if (source_system.empty() || target_system.empty() || source_system == target_system) {
    throw Error("synthetic: source and target system ids must be distinct and non-empty");
  }
  if (shared_fraction > 0.0 && vocabulary_overlap == 0.0) {
    throw Error("synthetic: shared templates need a shared vocabulary (vocabulary_overlap > 0)");
  }
  const auto shared = static_cast<std::size_t>(std::llround(shared_fraction * static_cast<double>(templates_per_system)));
  const std::size_t own = templates_per_system - shared;
  if (proprietary_fraction < 1.0 && shared < 2) {
    throw Error("synthetic: general sequences need at least 2 shared templates");
  }
  if (proprietary_fraction > 0.0 && own < 2) {
    throw Error("synthetic: proprietary sequences need at least 2 system-specific templates");
  }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  WordFactory words(rng);

  const Lexicon common{common_lexicon(), anomaly_lexicon()};
  const Lexicon source_own{words.make_many(160), words.make_many(20)};
  const Lexicon target_own{words.make_many(160), words.make_many(20)};

  const auto shared =
      static_cast<std::size_t>(std::llround(spec.shared_fraction * static_cast<double>(spec.templates_per_system)));
  const std::size_t own = spec.templates_per_system - shared;

  std::vector<TemplateDef> defs;
  SystemPlan source_plan, target_plan;
  add_block(defs, source_plan.shared, shared, spec.anomalous_template_fraction, words, common, common, 1.0, rng);
  target_plan.shared = source_plan.shared;
  add_block(defs, source_plan.own, own, spec.anomalous_template_fraction, words, common, source_own,
            spec.vocabulary_overlap, rng);
  add_block(defs, target_plan.own, own, spec.anomalous_template_fraction, words, common, target_own,
            spec.vocabulary_overlap, rng);
  for (std::size_t i = 0; i < spec.long_tail_templates && own > 0; ++i) {
    source_plan.own.tail.push_back(defs.size());
    defs.push_back(make_template(words, common, source_own, spec.vocabulary_overlap, false, rng));
    target_plan.own.tail.push_back(defs.size());
    defs.push_back(make_template(words, common, target_own, spec.vocabulary_overlap, false, rng));
  }

  SyntheticCorpus corpus;
  corpus.source = build_system(spec, spec.source_system, defs, source_plan, rng);
  corpus.target = build_system(spec, spec.target_system, defs, target_plan, rng);
  return corpus;
}

SyntheticPaths synthetic_paths(const std::filesystem::path& dir) {
  return SyntheticPaths{dir / "source.log", dir / "source_labels.csv", dir / "target.log",
                        dir / "target_labels.csv", dir / "target_kinds.csv"};
}

SyntheticPaths write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = synthetic_paths(dir);
  write_lines(paths.source_log, corpus.source.lines);
  write_lines(paths.target_log, corpus.target.lines);
  auto labels = [](const SyntheticSystem& sys) {
    std::vector<std::string> out{"BlockId,Label"};
    for (const auto& s : sys.sessions) {
      out.push_back(s.block_id + (s.label == Label::kAnomalous ? ",Anomaly" : ",Normal"));
    }
    return out;
  };
  write_lines(paths.source_labels, labels(corpus.source));
  write_lines(paths.target_labels, labels(corpus.target));
  std::vector<std::string> kinds{"BlockId,Kind"};
  for (const auto& s : corpus.target.sessions) {
    kinds.push_back(s.block_id + (s.kind == SequenceKind::kGeneral ? ",general" : ",proprietary"));
  }
  write_lines(paths.target_kinds, kinds);
  return paths;
}

}  // namespace xlad
