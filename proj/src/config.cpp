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

#include "xlad/config.hpp"

#include <fstream>
#include <set>

namespace xlad {
namespace {

using nlohmann::json;

// Reads typed keys from one JSON object and remembers which were consumed so
// leftovers can be reported.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (!doc.is_object()) throw Error("config: '" + name_ + "' must be an object");
    doc_ = &doc;
  }

  bool has(const char* key) const { return doc_->contains(key); }
  void mark(const char* key) { seen_.insert(key); }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = doc_->find(key);
    if (it == doc_->end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error("config: bad value for '" + path(key) + "'");
    }
  }

  void get_path(const char* key, std::filesystem::path& out) {
    std::string text = out.string();
    get(key, text);
    out = text;
  }

  const json& child(const char* key) {
    seen_.insert(key);
    return doc_->at(key);
  }

  std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : doc_->items()) {
      if (!seen_.count(key)) throw Error("config: unknown key '" + path(key.c_str()) + "'");
    }
  }

 private:
  const json* doc_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void get_enum(Section& s, const char* key, Enum& out, Parse parse) {
  s.mark(key);
  if (!s.has(key)) return;
  std::string text;
  s.get(key, text);
  try {
    out = parse(text);
  } catch (const Error& e) {
    throw Error("config: " + s.path(key) + ": " + e.what());
  }
}

WindowSpec read_window(const json& doc, const std::string& name) {
  Section s(doc, name);
  WindowSpec w;
  s.get("size", w.size);
  s.get("stride", w.stride);
  s.finish();
  return w;
}

DatasetConfig read_dataset(const json& doc, const std::string& name) {
  Section s(doc, name);
  DatasetConfig d;
  s.get("system_id", d.system_id);
  s.get_path("log", d.log);
  get_enum(s, "format", d.format, [](const std::string& t) { return parse_corpus_format(t); });
  s.get_path("labels", d.labels);
  s.get("header_fields", d.header_fields);
  if (s.has("window")) d.window = read_window(s.child("window"), name + ".window");
  s.finish();
  return d;
}

json dataset_json(const DatasetConfig& d) {
  json j{{"system_id", d.system_id},
         {"log", d.log.string()},
         {"format", std::string(to_string(d.format))},
         {"labels", d.labels.string()},
         {"header_fields", d.header_fields}};
  if (d.window) j["window"] = {{"size", d.window->size}, {"stride", d.window->stride}};
  return j;
}

SyntheticCorpusSpec read_synthetic(const json& doc, bool& seeded) {
  Section s(doc, "synthetic");
  SyntheticCorpusSpec spec;
  seeded = s.has("seed");
  s.get("seed", spec.seed);
  s.get("templates_per_system", spec.templates_per_system);
  s.get("shared_fraction", spec.shared_fraction);
  s.get("vocabulary_overlap", spec.vocabulary_overlap);
  s.get("anomaly_rate", spec.anomaly_rate);
  s.get("sequences_per_system", spec.sequences_per_system);
  s.get("min_length", spec.min_length);
  s.get("max_length", spec.max_length);
  s.get("rare_event", spec.rare_event);
  s.get("order_corruption", spec.order_corruption);
  s.get("proprietary_fraction", spec.proprietary_fraction);
  s.get("anomalous_template_fraction", spec.anomalous_template_fraction);
  s.get("long_tail_templates", spec.long_tail_templates);
  s.get("source_system", spec.source_system);
  s.get("target_system", spec.target_system);
  s.finish();
  return spec;
}

json synthetic_json(const SyntheticCorpusSpec& spec) {
  return {{"seed", spec.seed},
          {"templates_per_system", spec.templates_per_system},
          {"shared_fraction", spec.shared_fraction},
          {"vocabulary_overlap", spec.vocabulary_overlap},
          {"anomaly_rate", spec.anomaly_rate},
          {"sequences_per_system", spec.sequences_per_system},
          {"min_length", spec.min_length},
          {"max_length", spec.max_length},
          {"rare_event", spec.rare_event},
          {"order_corruption", spec.order_corruption},
          {"proprietary_fraction", spec.proprietary_fraction},
          {"anomalous_template_fraction", spec.anomalous_template_fraction},
          {"long_tail_templates", spec.long_tail_templates},
          {"source_system", spec.source_system},
          {"target_system", spec.target_system}};
}

// Dataset sections for a generated corpus.
void point_at_corpus(RunConfig& cfg) {
  const auto paths = synthetic_paths(cfg.output_dir / "corpus");
  cfg.source = DatasetConfig{cfg.synthetic->source_system, paths.source_log, CorpusFormat::kHdfsBlock,
                             paths.source_labels, 5, std::nullopt};
  cfg.target = DatasetConfig{cfg.synthetic->target_system, paths.target_log, CorpusFormat::kHdfsBlock,
                             paths.target_labels, 5, std::nullopt};
}

void validate_dataset(const DatasetConfig& d, const char* name, bool labels_required) {
  const std::string n(name);
  if (d.system_id.empty()) throw Error("config: " + n + ".system_id is required");
  if (d.log.empty()) throw Error("config: " + n + ".log is required");
  if (d.format != CorpusFormat::kHdfsBlock && !d.window) {
    throw Error("config: " + n + ".window is required for windowed formats");
  }
  if (d.window && (d.window->size == 0 || d.window->stride == 0)) {
    throw Error("config: " + n + ".window size and stride must be > 0");
  }
  if (labels_required && d.labels.empty() && d.format != CorpusFormat::kBglWindow) {
    throw Error("config: " + n + ".labels is required unless labels are inline");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (output_dir.empty()) throw Error("config: output_dir is required");
  if (synthetic) synthetic->validate();
  validate_dataset(source, "source", true);
  validate_dataset(target, "target", false);
  if (source.system_id == target.system_id) throw Error("config: source and target system ids must differ");
  if (drain.depth < 3) throw Error("config: drain.depth must be >= 3");
  if (!(drain.similarity_threshold >= 0.0 && drain.similarity_threshold <= 1.0)) {
    throw Error("config: drain.similarity_threshold must be in [0,1]");
  }
  if (drain.max_children < 1) throw Error("config: drain.max_children must be >= 1");
  if (embedding.dimension == 0) throw Error("config: embedding.dimension must be > 0");
  if (router.kind == ThresholdPolicy::Kind::kFixed && !(router.value >= 0.0 && router.value <= 1.0)) {
    throw Error("config: router.tau must be in [0,1]");
  }
  training.validate();
  distillation.validate();
  labeler.validate();
  if (labeler.backend == LabelerConfig::Backend::kMock && target.labels.empty() &&
      target.format != CorpusFormat::kBglWindow && distillation.rounds > 0) {
    throw Error("config: the mock labeler needs target.labels");
  }
}

void set_output_dir(RunConfig& cfg, const std::filesystem::path& dir) {
  cfg.output_dir = dir;
  if (cfg.synthetic) point_at_corpus(cfg);
}

void reseed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  if (cfg.synthetic) cfg.synthetic->seed = seed;
  cfg.training.seed = seed;
  cfg.distillation.seed = seed;
  cfg.labeler.mock_seed = seed;
}

RunConfig default_synthetic_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.synthetic = SyntheticCorpusSpec{};
  reseed(cfg, seed);
  point_at_corpus(cfg);
  return cfg;
}

RunConfig config_from_json(const json& doc) {
  Section top(doc, "");
  RunConfig cfg;
  top.get("seed", cfg.seed);
  top.get_path("output_dir", cfg.output_dir);

  bool synthetic_seeded = false;
  if (top.has("synthetic")) {
    const auto& node = top.child("synthetic");
    if (!node.is_null()) cfg.synthetic = read_synthetic(node, synthetic_seeded);
  }
  if (cfg.synthetic) {
    if (!synthetic_seeded) cfg.synthetic->seed = cfg.seed;
    if (top.has("source") || top.has("target")) {
      throw Error("config: give either 'synthetic' or 'source'/'target', not both");
    }
    point_at_corpus(cfg);
  } else {
    if (!top.has("source") || !top.has("target")) throw Error("config: 'source' and 'target' are required");
    cfg.source = read_dataset(top.child("source"), "source");
    cfg.target = read_dataset(top.child("target"), "target");
  }

  if (top.has("drain")) {
    Section s(top.child("drain"), "drain");
    s.get("depth", cfg.drain.depth);
    s.get("similarity_threshold", cfg.drain.similarity_threshold);
    s.get("max_children", cfg.drain.max_children);
    s.finish();
  }
  if (top.has("embedding")) {
    Section s(top.child("embedding"), "embedding");
    s.get_path("table", cfg.embedding.table);
    s.get("dimension", cfg.embedding.dimension);
    s.get("hash_seed", cfg.embedding.hash_seed);
    s.get("use_idf", cfg.embedding.use_idf);
    s.finish();
  }
  if (top.has("router")) {
    Section s(top.child("router"), "router");
    std::string policy = "mean";
    s.get("policy", policy);
    if (policy == "mean") {
      cfg.router = ThresholdPolicy::mean();
      if (s.has("tau")) throw Error("config: router.tau only applies to policy 'fixed'");
    } else if (policy == "fixed") {
      if (!s.has("tau")) throw Error("config: router.tau is required for policy 'fixed'");
      double tau = 0.0;
      s.get("tau", tau);
      cfg.router = ThresholdPolicy::fixed(tau);
    } else {
      throw Error("config: router.policy must be 'mean' or 'fixed'");
    }
    s.finish();
  }

  auto& t = cfg.training;
  t.seed = cfg.seed;
  if (top.has("training")) {
    Section s(top.child("training"), "training");
    s.get("delta", t.delta);
    s.get("lambda", t.lambda);
    s.get("kappa", t.kappa);
    s.get("alpha", t.alpha);
    s.get("beta", t.beta);
    s.get("gamma", t.gamma);
    s.get("inner_steps", t.inner_steps);
    s.get("batch_size", t.batch_size);
    s.get("tasks_per_epoch", t.tasks_per_epoch);
    s.get("tasks_per_step", t.tasks_per_step);
    s.get("epochs", t.epochs);
    s.get("seed", t.seed);
    get_enum(s, "optimizer", t.optimizer, parse_optimizer_kind);
    s.get("holdout_fraction", t.holdout_fraction);
    s.get("patience", t.patience);
    s.get("hidden", t.hidden);
    s.finish();
  }

  auto& d = cfg.distillation;
  d.seed = cfg.seed;
  if (top.has("distillation")) {
    Section s(top.child("distillation"), "distillation");
    s.get("rounds", d.rounds);
    s.get("epsilon_start", d.epsilon_start);
    s.get("epsilon_step", d.epsilon_step);
    s.get("epsilon_min", d.epsilon_min);
    get_enum(s, "policy", d.policy, parse_epsilon_policy);
    s.get("fine_tune_epochs", d.fine_tune_epochs);
    s.get("learning_rate", d.learning_rate);
    s.get("batch_size", d.batch_size);
    get_enum(s, "optimizer", d.optimizer, parse_optimizer_kind);
    s.get("freeze_extractor", d.freeze_extractor);
    s.get("cumulative_fine_tune", d.cumulative_fine_tune);
    s.get("seed", d.seed);
    s.finish();
  }

  auto& l = cfg.labeler;
  l.mock_seed = cfg.seed;
  if (top.has("labeler")) {
    Section s(top.child("labeler"), "labeler");
    get_enum(s, "backend", l.backend, [](const std::string& v) { return parse_labeler_backend(v); });
    s.get("endpoint", l.endpoint_url);
    s.get("model", l.model);
    s.get("temperature", l.temperature);
    s.get("top_p", l.top_p);
    s.get("max_retries", l.max_retries);
    s.get("timeout_seconds", l.timeout_seconds);
    s.get("backoff_seconds", l.backoff_seconds);
    s.get("api_key_env", l.api_key_env);
    s.get("parallelism", l.parallelism);
    s.get("top_k", l.top_k);
    s.get("max_evidence_lines", l.max_evidence_lines);
    get_enum(s, "unparseable", l.unparseable, [](const std::string& v) {
      if (v == "anomalous") return UnparseablePolicy::kAnomalous;
      if (v == "drop") return UnparseablePolicy::kDrop;
      throw Error("expected 'anomalous' or 'drop'");
    });
    s.get("mock_accuracy", l.mock_accuracy);
    s.get("mock_seed", l.mock_seed);
    s.get_path("transcript", l.transcript);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  if (cfg.synthetic) {
    j["synthetic"] = synthetic_json(*cfg.synthetic);
  } else {
    j["source"] = dataset_json(cfg.source);
    j["target"] = dataset_json(cfg.target);
  }
  j["drain"] = {{"depth", cfg.drain.depth},
                {"similarity_threshold", cfg.drain.similarity_threshold},
                {"max_children", cfg.drain.max_children}};
  j["embedding"] = {{"table", cfg.embedding.table.string()},
                    {"dimension", cfg.embedding.dimension},
                    {"hash_seed", cfg.embedding.hash_seed},
                    {"use_idf", cfg.embedding.use_idf}};
  if (cfg.router.kind == ThresholdPolicy::Kind::kMean) {
    j["router"] = {{"policy", "mean"}};
  } else {
    j["router"] = {{"policy", "fixed"}, {"tau", cfg.router.value}};
  }
  const auto& t = cfg.training;
  j["training"] = {{"delta", t.delta},
                   {"lambda", t.lambda},
                   {"kappa", t.kappa},
                   {"alpha", t.alpha},
                   {"beta", t.beta},
                   {"gamma", t.gamma},
                   {"inner_steps", t.inner_steps},
                   {"batch_size", t.batch_size},
                   {"tasks_per_epoch", t.tasks_per_epoch},
                   {"tasks_per_step", t.tasks_per_step},
                   {"epochs", t.epochs},
                   {"seed", t.seed},
                   {"optimizer", to_string(t.optimizer)},
                   {"holdout_fraction", t.holdout_fraction},
                   {"patience", t.patience},
                   {"hidden", t.hidden}};
  const auto& d = cfg.distillation;
  j["distillation"] = {{"rounds", d.rounds},
                       {"epsilon_start", d.epsilon_start},
                       {"epsilon_step", d.epsilon_step},
                       {"epsilon_min", d.epsilon_min},
                       {"policy", to_string(d.policy)},
                       {"fine_tune_epochs", d.fine_tune_epochs},
                       {"learning_rate", d.learning_rate},
                       {"batch_size", d.batch_size},
                       {"optimizer", to_string(d.optimizer)},
                       {"freeze_extractor", d.freeze_extractor},
                       {"cumulative_fine_tune", d.cumulative_fine_tune},
                       {"seed", d.seed}};
  const auto& l = cfg.labeler;
  j["labeler"] = {{"backend", std::string(to_string(l.backend))},
                  {"endpoint", l.endpoint_url},
                  {"model", l.model},
                  {"temperature", l.temperature},
                  {"top_p", l.top_p},
                  {"max_retries", l.max_retries},
                  {"timeout_seconds", l.timeout_seconds},
                  {"backoff_seconds", l.backoff_seconds},
                  {"api_key_env", l.api_key_env},
                  {"parallelism", l.parallelism},
                  {"top_k", l.top_k},
                  {"max_evidence_lines", l.max_evidence_lines},
                  {"unparseable", l.unparseable == UnparseablePolicy::kAnomalous ? "anomalous" : "drop"},
                  {"mock_accuracy", l.mock_accuracy},
                  {"mock_seed", l.mock_seed},
                  {"transcript", l.transcript.string()}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace xlad
