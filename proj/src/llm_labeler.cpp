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

#include "xlad/llm_labeler.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <thread>

#include <json.hpp>

namespace xlad {
namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kMaxEvidences = 3;

const char* const kQuestion =
    "You will be given a window of logs separated by newlines. Based on the current window of logs, you are "
    "required to predict whether the system is in a [normal] or [anomalous] state. We will also provide logs "
    "from previous or similar contexts, along with their labels for your reference.";

const std::vector<std::string> kNotes{
    "The system itself has a certain degree of fault tolerance, so even though some logs may contain error "
    "messages, it does not necessarily mean that the system is in an [Anomalous] state.",
    "Please carefully compare the provided evidence and the input logs to infer the anomalous state.",
    "When comparing, focus on the text, and you may selectively ignore some differences in numbers.",
};

const std::vector<std::string> kNormalRules{
    "The logs show routine system operations with no error indications.",
    "Performance metrics, such as CPU usage and memory, are within normal ranges.",
    "Security logs do not report any suspicious or malicious activities.",
    "Some issues that the system can automatically repair are not included in the analysis.",
};

const std::vector<std::string> kAnomalousRules{
    "Error logs or failed operations are present in the logs.",
    "Performance metrics indicate issues, such as high load or memory leaks.",
    "Security logs show potential risks like failed logins or unusual access patterns.",
    "Anomalous behavior from users or system components may contribute to the anomalous state.",
};

void numbered(std::string& out, const std::vector<std::string>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) out += "  " + std::to_string(i + 1) + ". " + items[i] + "\n";
}

void window(std::string& out, const std::vector<std::string>& lines, std::optional<Label> answer) {
  out += "  Logs:\n";
  for (const auto& l : lines) out += "    " + l + "\n";
  out += "  Answer:";
  if (answer) {
    out += ' ';
    out += label_word(*answer);
  }
  out += "\n";
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string prompt_of_request(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("messages").at(0).at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat request: ") + e.what());
  }
}

}  // namespace

std::string_view label_word(Label label) noexcept { return label == Label::kAnomalous ? "Anomalous" : "Normal"; }

PromptBundle make_prompt_bundle(std::span<const std::string> input_window, std::span<const Evidence> evidences,
                                std::size_t max_evidence_lines) {
  if (input_window.empty()) throw Error("cannot build a prompt for an empty log window");
  if (evidences.size() > kMaxEvidences) throw Error("at most 3 evidences fit in a prompt");
  PromptBundle b{kQuestion, kNotes, kNormalRules, kAnomalousRules, {}, {input_window.begin(), input_window.end()}};
  for (const auto& e : evidences) {
    Evidence cut = e;
    if (cut.window.size() > max_evidence_lines) cut.window.resize(max_evidence_lines);
    b.evidences.push_back(std::move(cut));
  }
  return b;
}

std::string render_prompt(const PromptBundle& b) {
  std::string out = "Question:\n" + b.question + "\n\nNotes:\n";
  numbered(out, b.notes);
  out += "\nRules:\n[Normal] State:\n";
  numbered(out, b.normal_rules);
  out += "[Anomalous] State:\n";
  numbered(out, b.anomalous_rules);
  if (!b.evidences.empty()) {
    out += "\nEvidences:\n";
    for (std::size_t i = 0; i < b.evidences.size(); ++i) {
      out += "Evidence " + std::to_string(i + 1) + ":\n";
      window(out, b.evidences[i].window, b.evidences[i].label);
    }
  }
  out += "\nInput:\n";
  window(out, b.input_window, std::nullopt);
  return out;
}

std::string build_prompt(const LogSequence& sequence, std::span<const KbEntry> evidences,
                         std::size_t max_evidence_lines) {
  std::vector<Evidence> ev;
  for (const auto& e : evidences) ev.push_back(Evidence{e.raw_window, e.label});
  return render_prompt(make_prompt_bundle(sequence.raw_lines, ev, max_evidence_lines));
}

std::optional<Label> parse_response(std::string_view text) {
  const std::string t = lower(text);
  const bool anomalous = t.find("anomalous") != std::string::npos || t.find("abnormal") != std::string::npos;
  bool normal = false;
  for (auto pos = t.find("normal"); pos != std::string::npos; pos = t.find("normal", pos + 1)) {
    if (pos < 2 || t.compare(pos - 2, 2, "ab") != 0) {
      normal = true;
      break;
    }
  }
  if (anomalous == normal) return std::nullopt;
  return anomalous ? Label::kAnomalous : Label::kNormal;
}

void LabelerConfig::validate() const {
  if (max_retries < 0) throw Error("labeler.max_retries must be >= 0");
  if (!(temperature >= 0.0) || !(top_p > 0.0 && top_p <= 1.0)) throw Error("labeler sampling parameters out of range");
  if (!(mock_accuracy >= 0.0 && mock_accuracy <= 1.0)) throw Error("labeler.mock_accuracy must be in [0,1]");
  if (parallelism == 0) throw Error("labeler.parallelism must be >= 1");
  if (top_k > kMaxEvidences) throw Error("labeler.top_k must be <= 3");
  if (!(timeout_seconds > 0.0) || !(backoff_seconds >= 0.0)) throw Error("labeler timeouts must be positive");
  if (backend == Backend::kRemote && endpoint_url.empty()) throw Error("remote labeler needs an endpoint url");
  if (backend == Backend::kReplay && transcript.empty()) throw Error("replay labeler needs a transcript file");
}

std::string_view to_string(LabelerConfig::Backend backend) noexcept {
  switch (backend) {
    case LabelerConfig::Backend::kMock: return "mock";
    case LabelerConfig::Backend::kRemote: return "remote";
    case LabelerConfig::Backend::kReplay: return "replay";
  }
  return "mock";
}

LabelerConfig::Backend parse_labeler_backend(std::string_view text) {
  if (text == "mock") return LabelerConfig::Backend::kMock;
  if (text == "remote") return LabelerConfig::Backend::kRemote;
  if (text == "replay") return LabelerConfig::Backend::kReplay;
  throw Error("unknown labeler backend '" + std::string(text) + "' (expected mock, remote or replay)");
}

std::string_view to_string(LabelStatus status) noexcept {
  switch (status) {
    case LabelStatus::kLabeled: return "labeled";
    case LabelStatus::kDefaulted: return "defaulted";
    case LabelStatus::kDropped: return "dropped";
    case LabelStatus::kUnavailable: return "unavailable";
  }
  return "unknown";
}

std::vector<LabelOutcome> Labeler::label_all(std::span<const LogSequence> sequences, const KnowledgeBase& kb,
                                             const EventEmbeddings& embeddings) {
  std::vector<LabelOutcome> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(label(s, kb, embeddings));
  return out;
}

MockLabeler::MockLabeler(const GroundTruth& truth, double accuracy, std::uint64_t seed)
    : truth_(truth), accuracy_(accuracy), seed_(seed) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error("mock accuracy must be in [0,1]");
}

LabelOutcome MockLabeler::label(const LogSequence& sequence, const KnowledgeBase&, const EventEmbeddings&) {
  const Label truth = truth_.at(sequence.sequence_id);
  const double u = unit_interval(mix64(fnv1a64(sequence.sequence_id) ^ mix64(seed_)));
  return LabelOutcome{sequence.sequence_id, u < accuracy_ ? truth : flip(truth), LabelStatus::kLabeled, 1};
}

std::string make_chat_request(const LabelerConfig& cfg, const std::string& prompt) {
  json body;
  body["model"] = cfg.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg.temperature;
  body["top_p"] = cfg.top_p;
  return body.dump();
}

std::string read_chat_response(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what());
  }
}

ChatTransport http_transport(const LabelerConfig& cfg) {
  static const std::regex url_re(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg.endpoint_url, m, url_re)) throw Error("unsupported endpoint url " + cfg.endpoint_url);
  const std::string scheme = m[1];
  const std::string host = m[2];
  const std::string port = m[3].matched ? std::string(m[3]) : (scheme == "https" ? "443" : "80");
  const std::string path = m[4].matched ? std::string(m[4]) : "/";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw Error("https endpoints need a build with OpenSSL");
#endif
  std::string key;
  if (const char* v = std::getenv(cfg.api_key_env.c_str())) key = v;
  const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
  const std::string base = scheme + "://" + host + ":" + port;

  return [base, path, key, timeout](const std::string& request) -> std::string {
    httplib::Client client(base);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    auto res = client.Post(path, headers, request, "application/json");
    if (!res) throw TransportError("request to " + base + path + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    return res->body;
  };
}

ChatTransport replay_transport(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw Error("cannot read transcript " + transcript.string());
  auto answers = std::make_shared<std::map<std::string, std::deque<std::string>>>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    if (!j.at("error").get<std::string>().empty()) continue;
    (*answers)[j.at("prompt").get<std::string>()].push_back(j.at("response").get<std::string>());
  }
  auto mutex = std::make_shared<std::mutex>();
  return [answers, mutex](const std::string& request) -> std::string {
    const auto prompt = prompt_of_request(request);
    std::lock_guard lock(*mutex);
    auto it = answers->find(prompt);
    if (it == answers->end() || it->second.empty()) throw TransportError("transcript has no answer for this prompt");
    json resp;
    resp["choices"] = json::array({json{{"message", json{{"role", "assistant"}, {"content", it->second.front()}}}}});
    it->second.pop_front();
    return resp.dump();
  };
}

RemoteLabeler::RemoteLabeler(LabelerConfig cfg, ChatTransport transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  // Endpoint and transcript requirements belong to make_labeler; the
  // transport given here already decides where answers come from.
  LabelerConfig common = cfg_;
  common.backend = LabelerConfig::Backend::kMock;
  common.validate();
  if (!transport_) throw Error("remote labeler needs a transport");
}

void RemoteLabeler::record(const std::string& sequence_id, int attempt, const std::string& prompt,
                           const std::string& response, std::optional<Label> parsed, const std::string& error) {
  if (cfg_.transcript.empty()) return;
  json j;
  j["sequence_id"] = sequence_id;
  j["attempt"] = attempt;
  j["prompt"] = prompt;
  j["response"] = response;
  j["parsed"] = parsed ? json(std::string(label_word(*parsed))) : json(nullptr);
  j["error"] = error;
  std::lock_guard lock(transcript_mutex_);
  std::ofstream out(cfg_.transcript, std::ios::app);
  out << j.dump() << '\n';
}

LabelOutcome RemoteLabeler::label(const LogSequence& sequence, const KnowledgeBase& kb,
                                  const EventEmbeddings& embeddings) {
  std::vector<KbEntry> evidences;
  if (!kb.empty()) evidences = kb.retrieve(sequence_vector(sequence, embeddings), cfg_.top_k);
  const std::string prompt = build_prompt(sequence, evidences, cfg_.max_evidence_lines);
  const std::string request = make_chat_request(cfg_, prompt);

  LabelOutcome out{sequence.sequence_id, std::nullopt, LabelStatus::kLabeled, 0};
  bool answered = false;
  double delay = cfg_.backoff_seconds;
  for (int attempt = 1; attempt <= cfg_.max_retries + 1; ++attempt) {
    out.attempts = attempt;
    std::string content;
    try {
      content = read_chat_response(transport_(request));
    } catch (const TransportError& e) {
      record(sequence.sequence_id, attempt, prompt, "", std::nullopt, e.what());
      if (attempt <= cfg_.max_retries && delay > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        delay *= 2.0;
      }
      continue;
    }
    answered = true;
    const auto parsed = parse_response(content);
    record(sequence.sequence_id, attempt, prompt, content, parsed, "");
    if (parsed) {
      out.label = parsed;
      return out;
    }
  }
  if (!answered) {
    out.status = LabelStatus::kUnavailable;
    std::cerr << "warning: labeler endpoint unavailable for " << sequence.sequence_id << "\n";
  } else if (cfg_.unparseable == UnparseablePolicy::kAnomalous) {
    out.status = LabelStatus::kDefaulted;
    out.label = Label::kAnomalous;
    std::cerr << "warning: no parseable answer for " << sequence.sequence_id << ", defaulting to Anomalous\n";
  } else {
    out.status = LabelStatus::kDropped;
    std::cerr << "warning: no parseable answer for " << sequence.sequence_id << ", dropped\n";
  }
  return out;
}

std::vector<LabelOutcome> RemoteLabeler::label_all(std::span<const LogSequence> sequences, const KnowledgeBase& kb,
                                                   const EventEmbeddings& embeddings) {
  std::vector<LabelOutcome> out(sequences.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < sequences.size(); i = next++) {
      try {
        out[i] = label(sequences[i], kb, embeddings);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(cfg_.parallelism, std::max<std::size_t>(sequences.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::unique_ptr<Labeler> make_labeler(const LabelerConfig& cfg, const GroundTruth* truth) {
  cfg.validate();
  if (cfg.backend == LabelerConfig::Backend::kMock) {
    if (truth == nullptr) throw Error("mock labeler needs held-out ground truth");
    return std::make_unique<MockLabeler>(*truth, cfg.mock_accuracy, cfg.mock_seed);
  }
  if (cfg.backend == LabelerConfig::Backend::kReplay) {
    auto transport = replay_transport(cfg.transcript);
    LabelerConfig quiet = cfg;
    quiet.transcript.clear();  // never overwrite the file being replayed
    return std::make_unique<RemoteLabeler>(quiet, std::move(transport));
  }
  return std::make_unique<RemoteLabeler>(cfg, http_transport(cfg));
}

}  // namespace xlad
