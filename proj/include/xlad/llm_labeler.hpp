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
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlad/embedder.hpp"
#include "xlad/ingest.hpp"
#include "xlad/rag_kb.hpp"

namespace xlad {

/// One retrieved example as shown to the model.
struct Evidence {
  std::vector<std::string> window;
  Label label = Label::kNormal;
};

struct PromptBundle {
  std::string question;
  std::vector<std::string> notes;
  std::vector<std::string> normal_rules;
  std::vector<std::string> anomalous_rules;
  std::vector<Evidence> evidences;
  std::vector<std::string> input_window;
};

/// "Normal" or "Anomalous".
std::string_view label_word(Label label) noexcept;

/// Fixed question, notes and rules with the given evidences (at most 3, each
/// window cut to `max_evidence_lines`) and input window.
PromptBundle make_prompt_bundle(std::span<const std::string> input_window, std::span<const Evidence> evidences,
                                std::size_t max_evidence_lines = 50);

/// Sections in the order Question, Notes, Rules, Evidences, Input. The
/// Evidences section is left out when there are no evidences.
std::string render_prompt(const PromptBundle& bundle);

std::string build_prompt(const LogSequence& sequence, std::span<const KbEntry> evidences,
                         std::size_t max_evidence_lines = 50);

/// Case-insensitive: "anomalous" or "abnormal" means anomalous, "normal" not
/// preceded by "ab" means normal; both or neither is unparseable (nullopt).
std::optional<Label> parse_response(std::string_view text);

enum class UnparseablePolicy { kAnomalous, kDrop };

struct LabelerConfig {
  /// kReplay answers from `transcript` instead of the network.
  enum class Backend { kMock, kRemote, kReplay } backend = Backend::kMock;
  std::string endpoint_url;
  std::string model;
  double temperature = 1.0;
  double top_p = 0.8;
  int max_retries = 3;
  double timeout_seconds = 60.0;
  /// Base delay between retries after transport failures; doubles each time.
  double backoff_seconds = 0.5;
  std::string api_key_env = "XLAD_LLM_API_KEY";
  std::size_t parallelism = 4;
  std::size_t top_k = 3;
  std::size_t max_evidence_lines = 50;
  UnparseablePolicy unparseable = UnparseablePolicy::kAnomalous;
  double mock_accuracy = 0.9;
  std::uint64_t mock_seed = 1234;
  /// JSON Lines audit log of every remote exchange; empty disables it.
  std::filesystem::path transcript;

  void validate() const;
};

enum class LabelStatus {
  kLabeled,
  /// Unparseable after all retries, defaulted to anomalous.
  kDefaulted,
  /// Unparseable after all retries and dropped by policy.
  kDropped,
  /// Transport failed after all retries.
  kUnavailable,
};

std::string_view to_string(LabelStatus status) noexcept;

struct LabelOutcome {
  std::string sequence_id;
  std::optional<Label> label;
  LabelStatus status = LabelStatus::kLabeled;
  int attempts = 0;
};

class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual LabelOutcome label(const LogSequence& sequence, const KnowledgeBase& kb,
                             const EventEmbeddings& embeddings) = 0;
  /// Labels every sequence; outcomes are returned in input order.
  virtual std::vector<LabelOutcome> label_all(std::span<const LogSequence> sequences, const KnowledgeBase& kb,
                                              const EventEmbeddings& embeddings);
};

/// Test oracle: the true label with probability `accuracy`, else the flipped
/// label, decided by a hash of (seed, sequence id) so replays agree. This is
/// the only labeler that sees ground truth.
class MockLabeler final : public Labeler {
 public:
  MockLabeler(const GroundTruth& truth, double accuracy, std::uint64_t seed);
  LabelOutcome label(const LogSequence& sequence, const KnowledgeBase& kb, const EventEmbeddings& embeddings) override;

 private:
  const GroundTruth& truth_;
  double accuracy_;
  std::uint64_t seed_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Sends one request body, returns the response body. Throws TransportError.
using ChatTransport = std::function<std::string(const std::string& request_body)>;

/// POST to a chat-completion endpoint (http or https) with a bearer token
/// taken from `api_key_env` when set.
ChatTransport http_transport(const LabelerConfig& cfg);

/// Answers requests from a transcript written by an earlier run, matching on
/// the prompt text; repeated prompts are answered in recorded order.
ChatTransport replay_transport(const std::filesystem::path& transcript);

std::string make_chat_request(const LabelerConfig& cfg, const std::string& prompt);
/// Content of the first choice's message. Throws TransportError on a
/// malformed body.
std::string read_chat_response(const std::string& body);

class RemoteLabeler final : public Labeler {
 public:
  RemoteLabeler(LabelerConfig cfg, ChatTransport transport);
  LabelOutcome label(const LogSequence& sequence, const KnowledgeBase& kb, const EventEmbeddings& embeddings) override;
  std::vector<LabelOutcome> label_all(std::span<const LogSequence> sequences, const KnowledgeBase& kb,
                                      const EventEmbeddings& embeddings) override;

 private:
  void record(const std::string& sequence_id, int attempt, const std::string& prompt, const std::string& response,
              std::optional<Label> parsed, const std::string& error);

  LabelerConfig cfg_;
  ChatTransport transport_;
  std::mutex transcript_mutex_;
};

std::string_view to_string(LabelerConfig::Backend backend) noexcept;
LabelerConfig::Backend parse_labeler_backend(std::string_view text);

/// Mock labelers need the held-out truth; remote ones never receive it.
std::unique_ptr<Labeler> make_labeler(const LabelerConfig& cfg, const GroundTruth* truth);

}  // namespace xlad
