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
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "xlad/router.hpp"

using namespace xlad;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Independent nested-loop scorer written without Eigen.
double brute_force_score(const LogSequence& seq, const Matrix& emb, const std::vector<int>& proto_ids) {
  double worst = 1e300;
  for (int e : seq.events) {
    double best = -1e300;
    for (int p : proto_ids) {
      double dot = 0.0;
      double na = 0.0;
      double nb = 0.0;
      for (Eigen::Index k = 0; k < emb.rows(); ++k) {
        dot += emb(k, e) * emb(k, p);
        na += emb(k, e) * emb(k, e);
        nb += emb(k, p) * emb(k, p);
      }
      const double c = (na == 0.0 || nb == 0.0) ? 0.0 : dot / std::sqrt(na * nb);
      best = std::max(best, c);
    }
    worst = std::min(worst, best);
  }
  return worst;
}

struct Fixture {
  EventEmbeddings embeddings;
  std::vector<EventEmbedding> prototypes;
  std::vector<int> proto_ids;
  std::vector<LogSequence> targets;
};

Fixture random_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.embeddings = EventEmbeddings(testing::random_matrix(12, 40, seed));
  for (int id = 0; id < 15; ++id) {
    f.proto_ids.push_back(id);
    f.prototypes.push_back({id, f.embeddings.column(id)});
  }
  for (int s = 0; s < 60; ++s) {
    LogSequence seq;
    seq.sequence_id = "t:" + std::to_string(s);
    const std::size_t len = 1 + rng() % 8;
    for (std::size_t k = 0; k < len; ++k) seq.events.push_back(static_cast<int>(rng() % 40));
    f.targets.push_back(std::move(seq));
  }
  return f;
}

std::set<std::string> ids(const std::vector<LogSequence>& seqs) {
  std::set<std::string> out;
  for (const auto& s : seqs) out.insert(s.sequence_id);
  return out;
}

}  // namespace

TEST_CASE("cosine reference values") {
  const Vector v = vec2(3, -4);
  CHECK(cosine(v, v) == doctest::Approx(1.0));
  CHECK(cosine(vec2(1, 0), vec2(0, 1)) == doctest::Approx(0.0));
  CHECK(cosine(vec2(1, 1), vec2(1, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine(vec2(0, 0), vec2(1, 0)) == 0.0);
  Vector three(3);
  three << 1, 2, 3;
  CHECK_THROWS_AS(cosine(v, three), Error);
  CHECK_THROWS_AS(cosine(v, vec2(NAN, 1)), Error);
}

TEST_CASE("score_sequence: bottleneck event decides") {
  // Prototypes e1, e2. Events: exact match, and one at 0.8 cosine to e1.
  Matrix m(2, 4);
  m.col(0) = vec2(1, 0);
  m.col(1) = vec2(0, 1);
  m.col(2) = vec2(0.8, -0.6);
  m.col(3) = vec2(0.95, -std::sqrt(1 - 0.95 * 0.95));
  const EventEmbeddings emb(m);
  const std::vector<EventEmbedding> protos{{0, m.col(0)}, {1, m.col(1)}};
  LogSequence seq;
  seq.sequence_id = "t:1";
  seq.events = {0, 1};
  CHECK(score_sequence(seq, emb, protos).sequence_score == doctest::Approx(1.0));
  seq.events = {3, 2};
  const auto d = score_sequence(seq, emb, protos);
  CHECK(d.event_sims[0] == doctest::Approx(0.95));
  CHECK(d.sequence_score == doctest::Approx(0.80));

  Matrix orth = Matrix::Zero(3, 2);
  orth(0, 0) = 1;
  orth(2, 1) = 1;
  const EventEmbeddings e2(orth);
  const std::vector<EventEmbedding> p2{{0, orth.col(0)}};
  seq.events = {0, 1};
  CHECK(score_sequence(seq, e2, p2).sequence_score == doctest::Approx(0.0));

  seq.events = {};
  CHECK_THROWS_AS(score_sequence(seq, emb, protos), Error);
  seq.events = {0};
  CHECK_THROWS_AS(score_sequence(seq, emb, {}), Error);
}

TEST_CASE("choose_threshold policies") {
  const std::vector<double> scores{0.2, 0.4, 0.9};
  CHECK(choose_threshold(scores, ThresholdPolicy::mean()) == doctest::Approx(0.5));
  CHECK(choose_threshold(scores, ThresholdPolicy::fixed(0.0)) == 0.0);
  CHECK(choose_threshold(scores, ThresholdPolicy::fixed(1.5)) == 1.0);
  CHECK(choose_threshold({}, ThresholdPolicy::fixed(0.3)) == doctest::Approx(0.3));
  CHECK_THROWS_AS(choose_threshold({}, ThresholdPolicy::mean()), Error);
}

TEST_CASE("route: ties go general, negatives go proprietary") {
  std::vector<LogSequence> t(4);
  for (int i = 0; i < 4; ++i) t[i].sequence_id = "t:" + std::to_string(i);
  const std::vector<double> scores{0.80, 0.95, 0.9, -0.2};
  const auto r = route(t, scores, 0.9);
  CHECK(ids(r.general) == std::set<std::string>{"t:1", "t:2"});
  CHECK(ids(r.proprietary) == std::set<std::string>{"t:0", "t:3"});
  CHECK(route(t, scores, 0.0).proprietary.size() == 1);
  const std::vector<double> below_one{0.999999, 1.0};
  std::vector<LogSequence> two(t.begin(), t.begin() + 2);
  const auto strict = route(two, below_one, 1.0);
  CHECK(strict.proprietary.size() == 1);
  CHECK(classify(0.5, 0.5) == Verdict::kGeneral);
}

TEST_CASE("route_targets matches the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = random_fixture(seed);
    const auto result = route_targets(f.targets, f.embeddings, f.prototypes, ThresholdPolicy::mean());
    REQUIRE(result.decisions.size() == f.targets.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < f.targets.size(); ++i) {
      const double oracle = brute_force_score(f.targets[i], f.embeddings.matrix(), f.proto_ids);
      CHECK(result.decisions[i].sequence_score == doctest::Approx(oracle).epsilon(1e-9));
      sum += oracle;
    }
    CHECK(result.threshold == doctest::Approx(sum / static_cast<double>(f.targets.size())));
    CHECK(result.general.size() + result.proprietary.size() == f.targets.size());
  }
}

TEST_CASE("routing properties: monotone in tau, scale invariant, idempotent") {
  const auto f = random_fixture(11);
  std::set<std::string> previous;
  for (int k = 0; k <= 20; ++k) {
    const double tau = k / 20.0;
    const auto r = route_targets(f.targets, f.embeddings, f.prototypes, ThresholdPolicy::fixed(tau));
    const auto prop = ids(r.proprietary);
    CHECK(std::includes(prop.begin(), prop.end(), previous.begin(), previous.end()));
    for (const auto& id : ids(r.general)) CHECK(prop.count(id) == 0);
    previous = prop;
  }

  const auto base = route_targets(f.targets, f.embeddings, f.prototypes, ThresholdPolicy::fixed(0.4));
  const EventEmbeddings scaled(f.embeddings.matrix() * 7.5);
  std::vector<EventEmbedding> scaled_protos;
  for (const auto& p : f.prototypes) scaled_protos.push_back({p.event_id, p.vector * 7.5});
  const auto s = route_targets(f.targets, scaled, scaled_protos, ThresholdPolicy::fixed(0.4));
  CHECK(ids(s.general) == ids(base.general));

  const auto again = route_targets(base.general, f.embeddings, f.prototypes, ThresholdPolicy::fixed(0.4));
  CHECK(ids(again.general) == ids(base.general));
  CHECK(again.proprietary.empty());
}

TEST_CASE("zero-vector events route proprietary for any positive tau") {
  Matrix m = Matrix::Zero(3, 2);
  m(0, 0) = 1.0;
  const EventEmbeddings emb(m);
  const std::vector<EventEmbedding> protos{{0, m.col(0)}};
  std::vector<LogSequence> t(1);
  t[0].sequence_id = "t:0";
  t[0].events = {0, 1};
  const auto r = route_targets(t, emb, protos, ThresholdPolicy::fixed(1e-9));
  CHECK(r.proprietary.size() == 1);
}

TEST_CASE("routing report round trip") {
  const auto f = random_fixture(3);
  const auto r = route_targets(f.targets, f.embeddings, f.prototypes, ThresholdPolicy::mean());
  std::stringstream io;
  write_routing_report(io, r);
  const auto back = read_routing_report(io);
  CHECK(back.threshold == doctest::Approx(r.threshold));
  CHECK(back.prototype_count == f.prototypes.size());
  REQUIRE(back.scores.size() == f.targets.size());
  for (std::size_t i = 0; i < f.targets.size(); ++i) {
    CHECK(back.scores[i].first == f.targets[i].sequence_id);
    CHECK(back.verdicts[i] == r.decisions[i].verdict);
  }
}
