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

// Command-line front end. Every subcommand works on one run directory; stage
// subcommands reload what earlier ones wrote there.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xlad/config.hpp"
#include "xlad/metrics.hpp"
#include "xlad/pipeline.hpp"

namespace {

using xlad::RunConfig;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;

  std::optional<std::string> llm_backend;
  std::optional<std::string> llm_endpoint;
  std::optional<std::string> llm_model;
  std::optional<double> llm_mock_accuracy;
  std::optional<std::string> llm_transcript;

  std::optional<int> rounds;
  std::optional<double> epsilon_start;
  std::optional<double> epsilon_step;
  std::optional<std::string> epsilon_policy;

  std::optional<std::size_t> epochs;
  std::optional<std::size_t> tasks_per_epoch;
  std::optional<double> beta;
  std::optional<double> tau;

  std::optional<std::size_t> sequences;
  std::optional<std::size_t> templates;
  std::optional<double> shared_fraction;
  std::optional<double> overlap;
  std::optional<double> anomaly_rate;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run config (default: <out>/effective_config.json, else the "
                                           "default synthetic run)");
  cmd->add_option("-o,--out", o.out, "Run directory");
  cmd->add_option("--seed", o.seed, "Global seed; also resets every derived seed");
}

void add_model_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--epochs", o.epochs, "Meta-training epochs");
  cmd->add_option("--tasks-per-epoch", o.tasks_per_epoch, "Meta-tasks per epoch");
  cmd->add_option("--beta", o.beta, "Adversarial loss weight");
  cmd->add_option("--tau", o.tau, "Fixed routing threshold (default: mean of scores)")->check(CLI::Range(0.0, 1.0));
}

void add_distill_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--llm-backend", o.llm_backend, "mock, remote or replay")
      ->check(CLI::IsMember({"mock", "remote", "replay"}));
  cmd->add_option("--llm-endpoint", o.llm_endpoint, "Chat-completion URL (implies --llm-backend remote)");
  cmd->add_option("--llm-model", o.llm_model, "Model name sent to the endpoint");
  cmd->add_option("--llm-mock-accuracy", o.llm_mock_accuracy, "Accuracy of the mock labeler")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--llm-transcript", o.llm_transcript, "Transcript file to write (remote) or read (replay)");
  cmd->add_option("--rounds", o.rounds, "Distillation rounds (0 skips distillation)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epsilon-start", o.epsilon_start, "Initial confidence threshold");
  cmd->add_option("--epsilon-step", o.epsilon_step, "Per-round threshold decrement");
  cmd->add_option("--epsilon-policy", o.epsilon_policy, "dynamic or static")
      ->check(CLI::IsMember({"dynamic", "static"}));
}

void add_synth_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--sequences", o.sequences, "Sequences per system");
  cmd->add_option("--templates", o.templates, "Templates per system");
  cmd->add_option("--shared-fraction", o.shared_fraction, "Share of templates common to both systems");
  cmd->add_option("--overlap", o.overlap, "Vocabulary overlap of system-specific templates");
  cmd->add_option("--anomaly-rate", o.anomaly_rate, "Share of anomalous sequences");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  std::filesystem::path config = o.config;
  if (config.empty() && !o.out.empty()) {
    const auto saved = xlad::RunPaths{o.out}.effective_config();
    if (std::filesystem::exists(saved)) config = saved;
  }
  cfg = config.empty() ? xlad::default_synthetic_config() : xlad::load_config(config);
  if (!o.out.empty()) xlad::set_output_dir(cfg, o.out);
  if (o.seed) xlad::reseed(cfg, *o.seed);

  if (o.sequences || o.templates || o.shared_fraction || o.overlap || o.anomaly_rate) {
    if (!cfg.synthetic) throw xlad::Error("synthetic corpus flags need a synthetic config");
    if (o.sequences) cfg.synthetic->sequences_per_system = *o.sequences;
    if (o.templates) cfg.synthetic->templates_per_system = *o.templates;
    if (o.shared_fraction) cfg.synthetic->shared_fraction = *o.shared_fraction;
    if (o.overlap) cfg.synthetic->vocabulary_overlap = *o.overlap;
    if (o.anomaly_rate) cfg.synthetic->anomaly_rate = *o.anomaly_rate;
  }
  if (o.epochs) cfg.training.epochs = *o.epochs;
  if (o.tasks_per_epoch) cfg.training.tasks_per_epoch = *o.tasks_per_epoch;
  if (o.beta) cfg.training.beta = *o.beta;
  if (o.tau) cfg.router = xlad::ThresholdPolicy::fixed(*o.tau);

  auto& l = cfg.labeler;
  if (o.llm_endpoint) {
    l.endpoint_url = *o.llm_endpoint;
    l.backend = xlad::LabelerConfig::Backend::kRemote;
  }
  if (o.llm_backend) l.backend = xlad::parse_labeler_backend(*o.llm_backend);
  if (o.llm_model) l.model = *o.llm_model;
  if (o.llm_mock_accuracy) l.mock_accuracy = *o.llm_mock_accuracy;
  if (o.llm_transcript) l.transcript = *o.llm_transcript;

  auto& d = cfg.distillation;
  if (o.rounds) d.rounds = *o.rounds;
  if (o.epsilon_start) d.epsilon_start = *o.epsilon_start;
  if (o.epsilon_step) d.epsilon_step = *o.epsilon_step;
  if (o.epsilon_policy) d.policy = xlad::parse_epsilon_policy(*o.epsilon_policy);
  cfg.validate();
  return cfg;
}

void print_evaluation(const xlad::Evaluation& eval) {
  std::cout << xlad::format_metrics_table(eval.overall);
  xlad::write_evaluation(std::cout, eval);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xlad: zero-label cross-system log anomaly detection"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print results");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic two-system corpus into <out>/corpus");
  auto* parse = app.add_subcommand("parse", "Ingest both systems and mine templates");
  auto* embed = app.add_subcommand("embed", "Embed every template");
  auto* route = app.add_subcommand("route", "Split target sequences into general and proprietary");
  auto* train = app.add_subcommand("train", "Meta-train the small model on the general branch");
  auto* distill = app.add_subcommand("distill", "Run the distillation rounds and label every target sequence");
  auto* eval = app.add_subcommand("eval", "Score predictions against held-out target labels");
  auto* run = app.add_subcommand("run", "Every stage, end to end");
  for (auto* cmd : {synth, parse, embed, route, train, distill, eval, run}) add_common(cmd, o);
  for (auto* cmd : {synth, parse, run}) add_synth_flags(cmd, o);
  for (auto* cmd : {route, train, run}) add_model_flags(cmd, o);
  for (auto* cmd : {distill, run}) add_distill_flags(cmd, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(o);
    xlad::Pipeline pipeline(cfg, quiet ? nullptr : &std::cerr);
    xlad::save_config(cfg, pipeline.paths().effective_config());
    if (synth->parsed()) {
      if (!cfg.synthetic) throw xlad::Error("the config has no synthetic section");
      pipeline.synthesize();
      std::cout << pipeline.paths().corpus().string() << '\n';
    } else if (parse->parsed()) {
      if (cfg.synthetic && !std::filesystem::exists(cfg.source.log)) pipeline.synthesize();
      pipeline.parse();
    } else if (embed->parsed()) {
      pipeline.embed();
    } else if (route->parsed()) {
      pipeline.route();
    } else if (train->parsed()) {
      pipeline.train();
    } else if (distill->parsed()) {
      pipeline.distill();
    } else if (eval->parsed()) {
      print_evaluation(pipeline.evaluate());
    } else if (run->parsed()) {
      print_evaluation(pipeline.run());
    }
  } catch (const xlad::StageError& e) {
    std::cerr << "xlad: stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "xlad: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
