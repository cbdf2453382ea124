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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "xlad/distiller.hpp"
#include "xlad/drain.hpp"
#include "xlad/ingest.hpp"
#include "xlad/llm_labeler.hpp"
#include "xlad/meta_trainer.hpp"
#include "xlad/router.hpp"
#include "xlad/synth.hpp"

namespace xlad {

/// One system's input files.
struct DatasetConfig {
  std::string system_id;
  std::filesystem::path log;
  CorpusFormat format = CorpusFormat::kHdfsBlock;
  /// BlockId,Label CSV. Required for the source unless labels are inline;
  /// for the target it is held-out truth used only by evaluation and the mock.
  std::filesystem::path labels;
  std::size_t header_fields = 5;
  std::optional<WindowSpec> window;
};

struct EmbeddingConfig {
  /// Token-vector file; empty means hashed fallback vectors.
  std::filesystem::path table;
  std::size_t dimension = 300;
  std::uint64_t hash_seed = 1;
  bool use_idf = true;
};

/// Everything a run needs. Sub-seeds left out of a config file are derived
/// from `seed`; the effective config written by a run lists them all.
struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "xlad-run";
  /// When set, the corpus is generated under output_dir/corpus and the
  /// dataset sections are filled in from it.
  std::optional<SyntheticCorpusSpec> synthetic;
  DatasetConfig source;
  DatasetConfig target;
  DrainConfig drain;
  EmbeddingConfig embedding;
  ThresholdPolicy router = ThresholdPolicy::mean();
  TrainingConfig training;
  DistillerConfig distillation;
  LabelerConfig labeler;

  /// Throws Error naming the offending key.
  void validate() const;
};

/// Moves the run; a synthetic corpus moves with it.
void set_output_dir(RunConfig& cfg, const std::filesystem::path& dir);

/// Sets the global seed and every seed derived from it.
void reseed(RunConfig& cfg, std::uint64_t seed);

/// Defaults for a run on the default synthetic corpus.
RunConfig default_synthetic_config(std::uint64_t seed = 42);

/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace xlad
