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


#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "xlad/ingest.hpp"

using namespace xlad;

namespace {

std::vector<std::string> numbered_lines(std::size_t n) {
  std::vector<std::string> lines;
  for (std::size_t i = 1; i <= n; ++i) lines.push_back("line " + std::to_string(i));
  return lines;
}

std::vector<std::string> session_lines(const RawSession& s) {
  std::vector<std::string> out;
  for (const auto& r : s.records) out.push_back(r.raw_text);
  return out;
}

}  // namespace

TEST_CASE("hdfs-block groups lines by block id") {
  const std::vector<std::string> lines{
      "081109 203615 148 INFO dfs.DataNode: Receiving block blk_42 src: /10.0.0.1",
      "081109 203616 149 INFO dfs.DataNode: Receiving block blk_7 src: /10.0.0.2",
      "081109 203617 150 INFO dfs.DataNode: PacketResponder for blk_42 terminating",
  };
  const auto corpus = load_corpus_lines(lines, "hdfs", CorpusFormat::kHdfsBlock);
  REQUIRE(corpus.sessions.size() == 2);
  CHECK(corpus.sessions[0].session_key == "blk_42");
  CHECK(corpus.sessions[0].records.size() == 2);
  CHECK(corpus.sessions[1].session_key == "blk_7");
  CHECK(corpus.sessions[1].records.size() == 1);
  CHECK(corpus.unassigned_lines.empty());
}

TEST_CASE("hdfs-block reports lines without a block id") {
  const std::vector<std::string> lines{"blk_1 a", "no id here", "blk_1 b", "blk_-5 c"};
  const auto corpus = load_corpus_lines(lines, "hdfs", CorpusFormat::kHdfsBlock);
  CHECK(corpus.unassigned_lines == std::vector<std::size_t>{2});
  REQUIRE(corpus.sessions.size() == 2);
  CHECK(corpus.sessions[1].session_key == "blk_-5");
}

TEST_CASE("hdfs-block partition: every id-bearing line lands in exactly one session") {
  std::vector<std::string> lines;
  for (int i = 0; i < 200; ++i) lines.push_back("event " + std::to_string(i % 13) + " blk_" + std::to_string(i % 17));
  const auto corpus = load_corpus_lines(lines, "hdfs", CorpusFormat::kHdfsBlock);
  std::vector<std::string> seen;
  for (const auto& s : corpus.sessions) {
    for (const auto& r : s.records) {
      CHECK(find_block_id(r.raw_text) == s.session_key);
      seen.push_back(r.raw_text);
    }
  }
  auto expected = lines;
  std::sort(seen.begin(), seen.end());
  std::sort(expected.begin(), expected.end());
  CHECK(seen == expected);
}

TEST_CASE("windowing: exact fit and overlapping windows") {
  const auto five = numbered_lines(5);
  const auto one = load_corpus_lines(five, "g", CorpusFormat::kGenericWindow, WindowSpec{5, 5});
  REQUIRE(one.sessions.size() == 1);
  CHECK(one.sessions[0].records.size() == 5);

  const auto six = numbered_lines(6);
  const auto two = load_corpus_lines(six, "g", CorpusFormat::kGenericWindow, WindowSpec{4, 2});
  REQUIRE(two.sessions.size() == 2);
  CHECK(session_lines(two.sessions[0]) == std::vector<std::string>{"line 1", "line 2", "line 3", "line 4"});
  CHECK(session_lines(two.sessions[1]) == std::vector<std::string>{"line 3", "line 4", "line 5", "line 6"});
}

TEST_CASE("window_count matches enumeration") {
  for (std::size_t n = 1; n < 40; ++n) {
    for (std::size_t size = 1; size < 9; ++size) {
      for (std::size_t stride = 1; stride < 9; ++stride) {
        // Start windows at 0, stride, ... until one reaches the last line.
        std::size_t enumerated = 0;
        for (std::size_t begin = 0;; begin += stride) {
          ++enumerated;
          if (begin + size >= n) break;
        }
        CHECK(window_count(n, WindowSpec{size, stride}) == enumerated);
      }
    }
  }
}

TEST_CASE("windowed formats validate their window") {
  const auto lines = numbered_lines(3);
  CHECK_THROWS_AS(load_corpus_lines(lines, "g", CorpusFormat::kGenericWindow), Error);
  CHECK_THROWS_AS(load_corpus_lines(lines, "g", CorpusFormat::kGenericWindow, WindowSpec{0, 1}), Error);
  CHECK_THROWS_AS(load_corpus_lines(lines, "g", CorpusFormat::kGenericWindow, WindowSpec{1, 0}), Error);
  CHECK_THROWS_AS(parse_corpus_format("syslog"), Error);
  CHECK(parse_corpus_format("bgl-window") == CorpusFormat::kBglWindow);
  CHECK_THROWS_AS(load_corpus("/nonexistent/xlad.log", "g", CorpusFormat::kHdfsBlock), Error);
}

TEST_CASE("bgl-window: a window is anomalous if any line carries an alert tag") {
  const std::vector<std::string> lines{
      "- 1117838570 2005.06.03 R02 2005-06-03-15.42.50 R02 RAS KERNEL INFO instruction cache parity error corrected",
      "KERNDTLB 1117838571 2005.06.03 R02 2005-06-03-15.42.51 R02 RAS KERNEL FATAL data TLB error interrupt",
      "- 1117838572 2005.06.03 R02 2005-06-03-15.42.52 R02 RAS KERNEL INFO generating core",
      "- 1117838573 2005.06.03 R02 2005-06-03-15.42.53 R02 RAS KERNEL INFO generating core",
  };
  const auto corpus = load_corpus_lines(lines, "bgl", CorpusFormat::kBglWindow, WindowSpec{2, 2});
  REQUIRE(corpus.sessions.size() == 2);
  CHECK(corpus.sessions[0].inline_label == Label::kAnomalous);
  CHECK(corpus.sessions[1].inline_label == Label::kNormal);
  const auto seqs = attach_labels(corpus, nullptr, SystemRole::kSource);
  CHECK(seqs[0].label == Label::kAnomalous);
}

TEST_CASE("attach_labels: source needs labels, target may go without") {
  const std::vector<std::string> lines{"a blk_42", "b blk_7"};
  const auto corpus = load_corpus_lines(lines, "hdfs", CorpusFormat::kHdfsBlock);
  LabelMap labels{{"blk_42", Label::kAnomalous}};
  CHECK_THROWS_WITH_AS(attach_labels(corpus, &labels, SystemRole::kSource),
                       doctest::Contains("unlabeled source session"), Error);
  labels["blk_7"] = Label::kNormal;
  const auto src = attach_labels(corpus, &labels, SystemRole::kSource);
  CHECK(src[0].label == Label::kAnomalous);
  CHECK(src[0].sequence_id == "hdfs:blk_42");
  const auto tgt = attach_labels(corpus, nullptr, SystemRole::kTarget);
  CHECK_FALSE(tgt[0].label.has_value());
}

TEST_CASE("label CSV parsing") {
  std::istringstream good("BlockId,Label\nblk_1,Normal\nblk_2,Anomaly\n");
  const auto labels = read_label_csv(good);
  CHECK(labels.at("blk_1") == Label::kNormal);
  CHECK(labels.at("blk_2") == Label::kAnomalous);
  std::istringstream bad("BlockId,Label\nblk_1,Maybe\n");
  CHECK_THROWS_AS(read_label_csv(bad), Error);
  std::istringstream headless("blk_1,Normal\n");
  CHECK_THROWS_AS(read_label_csv(headless), Error);
}

TEST_CASE("GroundTruth::detach strips every target label") {
  std::vector<LogSequence> seqs(3);
  for (int i = 0; i < 3; ++i) {
    seqs[i].sequence_id = "t:" + std::to_string(i);
    seqs[i].label = i == 1 ? Label::kAnomalous : Label::kNormal;
  }
  const auto truth = GroundTruth::detach(seqs);
  CHECK(truth.size() == 3);
  CHECK(truth.at("t:1") == Label::kAnomalous);
  for (const auto& s : seqs) CHECK_FALSE(s.label.has_value());
  std::stringstream io;
  truth.write(io);
  CHECK(GroundTruth::read(io).entries() == truth.entries());
}

TEST_CASE("session file round trip is lossless") {
  const std::vector<std::string> lines{"x blk_1", "y blk_2", "z blk_1"};
  const auto corpus = load_corpus_lines(lines, "hdfs", CorpusFormat::kHdfsBlock);
  LabelMap labels{{"blk_1", Label::kNormal}, {"blk_2", Label::kAnomalous}};
  auto seqs = attach_labels(corpus, &labels, SystemRole::kSource);
  seqs[0].events = {3, 4};
  std::stringstream io;
  write_sessions(io, seqs);
  const auto back = read_sessions(io);
  REQUIRE(back.size() == seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(back[i].sequence_id == seqs[i].sequence_id);
    CHECK(back[i].label == seqs[i].label);
    CHECK(back[i].raw_lines == seqs[i].raw_lines);
    CHECK(back[i].events == seqs[i].events);
  }
}

TEST_CASE("ingest is deterministic") {
  std::vector<std::string> lines;
  for (int i = 0; i < 100; ++i) lines.push_back("msg blk_" + std::to_string((i * 7) % 11));
  const auto a = load_corpus_lines(lines, "s", CorpusFormat::kHdfsBlock);
  const auto b = load_corpus_lines(lines, "s", CorpusFormat::kHdfsBlock);
  REQUIRE(a.sessions.size() == b.sessions.size());
  for (std::size_t i = 0; i < a.sessions.size(); ++i) {
    CHECK(a.sessions[i].session_key == b.sessions[i].session_key);
    CHECK(session_lines(a.sessions[i]) == session_lines(b.sessions[i]));
  }
}
