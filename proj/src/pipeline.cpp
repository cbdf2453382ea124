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

#include "xlad/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "xlad/drain.hpp"
#include "xlad/kernels.hpp"
#include "xlad/llm_labeler.hpp"
#include "xlad/synth.hpp"

namespace xlad {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing " + path.string() + " (run the earlier stages first)");
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error("write failed for " + path.string());
}

std::string_view branch_name(Branch b) { return b == Branch::kGeneral ? "general" : "proprietary"; }

std::vector<LogSequence> load_system(const DatasetConfig& d, SystemRole role) {
  const auto corpus = load_corpus(d.log, d.system_id, d.format, d.window);
  LabelMap labels;
  if (!d.labels.empty()) labels = load_label_csv(d.labels);
  return attach_labels(corpus, d.labels.empty() ? nullptr : &labels, role);
}

json metrics_json(const Metrics& m) {
  return {{"tp", m.tp},       {"fp", m.fp},         {"fn", m.fn}, {"tn", m.tn},
          {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

void write_metric_lines(std::ostream& out, const std::string& prefix, const Metrics& m) {
  std::ostringstream block;
  write_metrics_tsv(block, m);
  std::istringstream lines(block.str());
  for (std::string line; std::getline(lines, line);) out << prefix << line << '\n';
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  out << "sequence_id\tbranch\tlabel\torigin\n";
  for (const auto& r : records) {
    out << r.sequence_id << '\t' << branch_name(r.branch) << '\t' << to_int(r.label) << '\t' << r.origin << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sequence_id\tbranch\tlabel\torigin") {
    throw Error("predictions file must start with its header row");
  }
  std::vector<PredictionRecord> out;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      f.push_back(line.substr(start, tab - start));
    }
    f.push_back(line.substr(start));
    if (f.size() != 4 || (f[1] != "general" && f[1] != "proprietary") || (f[2] != "0" && f[2] != "1")) {
      throw Error("malformed prediction line " + std::to_string(lineno));
    }
    out.push_back({f[0], f[1] == "general" ? Branch::kGeneral : Branch::kProprietary,
                   f[2] == "1" ? Label::kAnomalous : Label::kNormal, f[3]});
  }
  return out;
}

Evaluation evaluate_predictions(std::span<const PredictionRecord> predictions, const GroundTruth& truth) {
  std::vector<Label> pred, gold;
  std::map<Branch, std::pair<std::vector<Label>, std::vector<Label>>> by_branch;
  for (const auto& p : predictions) {
    const auto t = truth.find(p.sequence_id);
    if (!t) throw Error("no ground truth for " + p.sequence_id);
    pred.push_back(p.label);
    gold.push_back(*t);
    by_branch[p.branch].first.push_back(p.label);
    by_branch[p.branch].second.push_back(*t);
  }
  Evaluation eval;
  eval.overall = compute_metrics(pred, gold);
  if (const auto it = by_branch.find(Branch::kGeneral); it != by_branch.end()) {
    eval.general = compute_metrics(it->second.first, it->second.second);
  }
  if (const auto it = by_branch.find(Branch::kProprietary); it != by_branch.end()) {
    eval.proprietary = compute_metrics(it->second.first, it->second.second);
  }
  return eval;
}

void write_evaluation(std::ostream& out, const Evaluation& eval) {
  write_metric_lines(out, "", eval.overall);
  if (eval.general) write_metric_lines(out, "general.", *eval.general);
  if (eval.proprietary) write_metric_lines(out, "proprietary.", *eval.proprietary);
  if (eval.proprietary_theta0) write_metric_lines(out, "proprietary.theta_0.", *eval.proprietary_theta0);
  if (eval.proprietary_final_model) {
    write_metric_lines(out, "proprietary.theta_final.", *eval.proprietary_final_model);
  }
}

Pipeline::Pipeline(RunConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), paths_{cfg_.output_dir}, log_(log) {
  cfg_.validate();
  std::filesystem::create_directories(paths_.dir);
  // Stage-at-a-time runs extend the report left by earlier invocations.
  if (std::ifstream in(paths_.report()); in) {
    try {
      report_ = json::parse(in);
    } catch (const json::exception&) {
      report_ = json::object();
    }
  }
  if (!report_.is_object()) report_ = json::object();
  if (!report_.contains("stages") || !report_["stages"].is_array()) report_["stages"] = json::array();
}

Pipeline::~Pipeline() = default;

void Pipeline::note(const std::string& line) {
  if (log_ != nullptr) *log_ << line << '\n' << std::flush;
}

template <typename F>
void Pipeline::stage(const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report_["stages"].push_back({{"name", name}, {"seconds", seconds}});
  write_report();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fs", seconds);
  note(std::string("[") + name + "] done in " + buf);
}

void Pipeline::set_labeler(std::unique_ptr<Labeler> labeler) { labeler_ = std::move(labeler); }

void Pipeline::synthesize() {
  if (!cfg_.synthetic) return;
  stage("synth", [&] {
    const auto corpus = generate_synthetic_corpus(*cfg_.synthetic);
    write_synthetic_corpus(corpus, paths_.corpus());
    note("synthetic corpus: " + std::to_string(corpus.source.sessions.size()) + " + " +
         std::to_string(corpus.target.sessions.size()) + " sequences");
  });
}

void Pipeline::parse() {
  stage("ingest", [&] {
    source_ = load_system(cfg_.source, SystemRole::kSource);
    target_ = load_system(cfg_.target, SystemRole::kTarget);
    if (source_.empty() || target_.empty()) throw Error("source and target must each yield at least one sequence");
    truth_ = GroundTruth::detach(target_);
    note("ingested " + std::to_string(source_.size()) + " source and " + std::to_string(target_.size()) +
         " target sequences");
  });
  stage("parse", [&] {
    TemplateStore store(cfg_.drain);
    std::map<std::string, Preprocessor> pre;
    PreprocessConfig sp, tp;
    sp.header_fields = cfg_.source.header_fields;
    tp.header_fields = cfg_.target.header_fields;
    pre.emplace(cfg_.source.system_id, Preprocessor(sp));
    pre.emplace(cfg_.target.system_id, Preprocessor(tp));
    parse_corpus(source_, store, pre);
    parse_corpus(target_, store, pre);
    store.freeze();
    template_count_ = store.size();

    auto out = open_out(paths_.templates());
    store.dump(out);
    finish(out, paths_.templates());
    auto s = open_out(paths_.source_sessions());
    write_sessions(s, source_);
    finish(s, paths_.source_sessions());
    auto t = open_out(paths_.target_sessions());
    write_sessions(t, target_);
    finish(t, paths_.target_sessions());
    auto g = open_out(paths_.ground_truth());
    truth_.write(g);
    finish(g, paths_.ground_truth());
    parsed_ = true;
    note(std::to_string(template_count_) + " templates");
  });
}

void Pipeline::ensure_parsed() {
  if (parsed_) return;
  stage("load-parsed", [&] {
    auto s = open_in(paths_.source_sessions());
    source_ = read_sessions(s);
    auto t = open_in(paths_.target_sessions());
    target_ = read_sessions(t);
    if (std::filesystem::exists(paths_.ground_truth())) {
      auto g = open_in(paths_.ground_truth());
      truth_ = GroundTruth::read(g);
    }
    for (const auto* pool : {&source_, &target_}) {
      for (const auto& seq : *pool) {
        if (seq.events.size() != seq.raw_lines.size()) throw Error("sessions file holds unparsed sequences");
      }
    }
    parsed_ = true;
  });
}

void Pipeline::embed() {
  ensure_parsed();
  stage("embed", [&] {
    auto in = open_in(paths_.templates());
    const auto store = TemplateStore::load(in, cfg_.drain);
    const auto table = cfg_.embedding.table.empty()
                           ? TokenVectorTable::hashed(cfg_.embedding.dimension, cfg_.embedding.hash_seed)
                           : TokenVectorTable::load(cfg_.embedding.table);
    std::optional<IdfTable> idf;
    if (cfg_.embedding.use_idf) idf = compute_idf(store.templates());
    embeddings_ = embed_all(store, table, idf ? &*idf : nullptr);
    auto out = open_out(paths_.embeddings());
    embeddings_.write(out);
    finish(out, paths_.embeddings());
    embedded_ = true;
    note(std::string("embedded ") + std::to_string(embeddings_.size()) + " events in d=" +
         std::to_string(embeddings_.dimension()) + (table.is_hashed() ? " (hashed token vectors)" : ""));
  });
}

void Pipeline::ensure_embedded() {
  ensure_parsed();
  if (embedded_) return;
  stage("load-embeddings", [&] {
    auto in = open_in(paths_.embeddings());
    embeddings_ = EventEmbeddings::read(in);
    embedded_ = true;
  });
}

void Pipeline::route() {
  ensure_embedded();
  stage("route", [&] {
    const auto prototypes = build_source_prototypes(source_, embeddings_);
    routing_ = route_targets(target_, embeddings_, prototypes, cfg_.router);
    auto out = open_out(paths_.routing());
    write_routing_report(out, *routing_);
    finish(out, paths_.routing());
    report_["routing"] = {{"tau", routing_->threshold},
                          {"prototypes", routing_->prototype_count},
                          {"general", routing_->general.size()},
                          {"proprietary", routing_->proprietary.size()}};
    char buf[160];
    std::snprintf(buf, sizeof buf, "tau %.4f over %zu prototypes: %zu general, %zu proprietary", routing_->threshold,
                  routing_->prototype_count, routing_->general.size(), routing_->proprietary.size());
    note(buf);
  });
}

void Pipeline::ensure_routed() {
  ensure_embedded();
  if (routing_) return;
  stage("load-routing", [&] {
    auto in = open_in(paths_.routing());
    const auto saved = read_routing_report(in);
    std::unordered_map<std::string, double> by_id;
    for (const auto& [id, score] : saved.scores) by_id[id] = score;
    std::vector<double> scores;
    scores.reserve(target_.size());
    for (const auto& seq : target_) {
      const auto it = by_id.find(seq.sequence_id);
      if (it == by_id.end()) throw Error("routing report lacks " + seq.sequence_id);
      scores.push_back(it->second);
    }
    routing_ = xlad::route(target_, scores, saved.threshold);
    routing_->prototype_count = saved.prototype_count;
  });
}

void Pipeline::train() {
  ensure_routed();
  stage("train", [&] {
    if (routing_->general.empty()) throw Error("the router sent no target sequence to the general branch");
    training_ = xlad::train(source_, routing_->general, embeddings_.matrix(), cfg_.training);
    theta0_ = training_->params;
    theta0_->save(paths_.initial_model());
    auto out = open_out(paths_.training_log());
    write_training_log(out, training_->log);
    finish(out, paths_.training_log());
    report_["training"] = {{"epochs_run", training_->log.size()},
                           {"best_epoch", training_->best_epoch},
                           {"holdout_f1", training_->holdout_metrics.f1}};
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu epochs, best %zu, held-out source F1 %.4f", training_->log.size(),
                  training_->best_epoch, training_->holdout_metrics.f1);
    note(buf);
  });
}

void Pipeline::ensure_trained() {
  ensure_routed();
  if (theta0_) return;
  stage("load-model", [&] { theta0_ = ModelParameters::load(paths_.initial_model()); });
}

void Pipeline::distill() {
  ensure_trained();
  if (!labeler_ && cfg_.distillation.rounds > 0) {
    stage("labeler", [&] {
      auto lc = cfg_.labeler;
      if (lc.backend == LabelerConfig::Backend::kRemote && lc.transcript.empty()) lc.transcript = paths_.transcript();
      if (lc.backend == LabelerConfig::Backend::kMock && truth_.size() == 0) {
        throw Error("the mock labeler needs held-out target labels");
      }
      labeler_ = make_labeler(lc, lc.backend == LabelerConfig::Backend::kMock ? &truth_ : nullptr);
    });
  }
  stage("distill", [&] {
    auto kb = init_kb(routing_->general, *theta0_, embeddings_);
    kb.save(paths_.initial_kb());
    predictions_.clear();
    const auto general = kernels::predict_batch_omp(*theta0_, embeddings_.matrix(), routing_->general);
    std::unordered_map<std::string, PredictionRecord> by_id;
    for (std::size_t i = 0; i < general.size(); ++i) {
      by_id[routing_->general[i].sequence_id] = {routing_->general[i].sequence_id, Branch::kGeneral,
                                                 general[i].label, "theta-0"};
    }

    json dist;
    if (cfg_.distillation.rounds == 0 || routing_->proprietary.empty()) {
      dist["skipped"] = true;
      dist["reason"] = cfg_.distillation.rounds == 0 ? "rounds = 0" : "no proprietary sequences";
      const auto prop = kernels::predict_batch_omp(*theta0_, embeddings_.matrix(), routing_->proprietary);
      for (std::size_t i = 0; i < prop.size(); ++i) {
        by_id[routing_->proprietary[i].sequence_id] = {routing_->proprietary[i].sequence_id, Branch::kProprietary,
                                                       prop[i].label, "theta-0"};
      }
      distillation_.reset();
      kb.save(paths_.final_kb());
      std::filesystem::remove(paths_.rounds());
      std::filesystem::remove(paths_.selections());
      note("distillation skipped (" + dist["reason"].get<std::string>() + ")");
    } else {
      distillation_ = run_distillation(routing_->proprietary, *theta0_, std::move(kb), *labeler_, embeddings_,
                                       cfg_.distillation);
      auto& d = *distillation_;
      for (std::size_t r = 1; r < d.models.size(); ++r) d.models[r].save(paths_.round_model(static_cast<int>(r)));
      d.kb.save(paths_.final_kb());

      // Clean-pool accuracy needs truth, which only evaluation code holds.
      if (truth_.size() > 0) {
        for (std::size_t r = 0; r < d.rounds.size(); ++r) {
          std::size_t clean = 0, right = 0;
          for (const auto& s : d.selections[r]) {
            if (s.verdict != PoolVerdict::kClean) continue;
            ++clean;
            if (const auto t = truth_.find(s.sequence_id); t && *t == s.y_sm) ++right;
          }
          if (clean > 0) d.rounds[r].clean_accuracy = static_cast<double>(right) / static_cast<double>(clean);
        }
      }
      auto rounds = open_out(paths_.rounds());
      for (const auto& r : d.rounds) write_round_report(rounds, r);
      finish(rounds, paths_.rounds());
      auto sel = open_out(paths_.selections());
      sel << "round\tsequence_id\ty_llm\tllm_status\ty_sm\tconfidence\tverdict\n";
      for (const auto& round : d.selections) {
        for (const auto& s : round) {
          sel << s.round << '\t' << s.sequence_id << '\t' << (s.y_llm ? std::to_string(to_int(*s.y_llm)) : "-")
              << '\t' << to_string(s.llm_status) << '\t' << to_int(s.y_sm) << '\t' << s.confidence << '\t'
              << (s.verdict == PoolVerdict::kClean ? "clean" : "noisy") << '\n';
        }
      }
      finish(sel, paths_.selections());

      for (const auto& fl : d.labels) {
        by_id[fl.sequence_id] = {fl.sequence_id, Branch::kProprietary, fl.label,
                                 fl.source == LabelSource::kClean ? "clean-round-" + std::to_string(fl.round)
                                                                  : "final-inference"};
      }
      dist["skipped"] = false;
      dist["rounds_executed"] = d.rounds.size();
      dist["cumulative_clean"] = d.rounds.empty() ? 0 : d.rounds.back().cumulative_clean;
      dist["kb_entries"] = d.kb.size();
      for (const auto& r : d.rounds) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "round %d: eps %.2f, %zu clean of %zu, agreement %.3f", r.round, r.epsilon,
                      r.clean, r.pool, r.agreement_rate);
        note(buf);
      }
    }
    report_["distillation"] = dist;

    // Every target sequence gets exactly one label, in target order.
    for (const auto& seq : target_) {
      const auto it = by_id.find(seq.sequence_id);
      if (it == by_id.end()) throw Error("no label produced for " + seq.sequence_id);
      predictions_.push_back(it->second);
    }
    auto out = open_out(paths_.predictions());
    write_predictions(out, predictions_);
    finish(out, paths_.predictions());
  });
}

void Pipeline::ensure_predictions() {
  if (!predictions_.empty()) return;
  stage("load-predictions", [&] {
    auto in = open_in(paths_.predictions());
    predictions_ = read_predictions(in);
    if (truth_.size() == 0 && std::filesystem::exists(paths_.ground_truth())) {
      auto g = open_in(paths_.ground_truth());
      truth_ = GroundTruth::read(g);
    }
  });
}

Evaluation Pipeline::evaluate() {
  ensure_predictions();
  Evaluation eval;
  stage("eval", [&] {
    if (truth_.size() == 0) throw Error("no held-out target labels to evaluate against");
    eval = evaluate_predictions(predictions_, truth_);
    if (distillation_ && routing_) {
      std::vector<LogSequence> prop = routing_->proprietary;
      for (auto& s : prop) s.label = truth_.find(s.sequence_id);
      eval.proprietary_theta0 = evaluate_sequences(distillation_->models.front(), embeddings_.matrix(), prop);
      eval.proprietary_final_model = evaluate_sequences(distillation_->final_model(), embeddings_.matrix(), prop);
    }
    auto out = open_out(paths_.metrics());
    write_evaluation(out, eval);
    finish(out, paths_.metrics());
    auto table = open_out(paths_.metrics_table());
    table << format_metrics_table(eval.overall);
    finish(table, paths_.metrics_table());
    json m{{"overall", metrics_json(eval.overall)}};
    if (eval.general) m["general"] = metrics_json(*eval.general);
    if (eval.proprietary) m["proprietary"] = metrics_json(*eval.proprietary);
    if (eval.proprietary_theta0) m["proprietary_theta_0"] = metrics_json(*eval.proprietary_theta0);
    if (eval.proprietary_final_model) m["proprietary_theta_final"] = metrics_json(*eval.proprietary_final_model);
    report_["metrics"] = m;
    char buf[128];
    std::snprintf(buf, sizeof buf, "target F1 %.4f (P %.4f, R %.4f)", eval.overall.f1, eval.overall.precision,
                  eval.overall.recall);
    note(buf);
  });
  write_report();
  return eval;
}

void Pipeline::write_report() const {
  auto out = open_out(paths_.report());
  out << report_.dump(2) << '\n';
  finish(out, paths_.report());
}

Evaluation Pipeline::run() {
  report_ = json{{"stages", json::array()}};
  save_config(cfg_, paths_.effective_config());
  synthesize();
  parse();
  embed();
  route();
  train();
  distill();
  return evaluate();
}

}  // namespace xlad
