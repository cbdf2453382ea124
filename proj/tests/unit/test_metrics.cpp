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

#include <cmath>
#include <random>
#include <sstream>

#include "xlad/metrics.hpp"
#include "xlad/optimizer.hpp"

using namespace xlad;

TEST_CASE("metrics: zero-division conventions") {
  const std::vector<Label> pred(4, Label::kNormal);
  const std::vector<Label> truth{Label::kNormal, Label::kAnomalous, Label::kNormal, Label::kNormal};
  const auto m = compute_metrics(pred, truth);
  CHECK(m.tp == 0);
  CHECK(m.fn == 1);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  const auto none = metrics_from_counts(0, 0, 0, 5);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("metrics: argument checks") {
  const std::vector<Label> a{Label::kNormal};
  const std::vector<Label> b{Label::kNormal, Label::kAnomalous};
  CHECK_THROWS_AS(compute_metrics(a, b), Error);
  CHECK_THROWS_AS(compute_metrics({}, {}), Error);
}

TEST_CASE("metrics: hand-counted confusion matrix") {
  const auto m = metrics_from_counts(8, 2, 4, 86);
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(8.0 / 12.0));
  CHECK(m.f1 == doctest::Approx(2.0 * 8 / (2.0 * 8 + 2 + 4)));
}

TEST_CASE("metric identities hold on random predictions") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<Label> pred(n);
    std::vector<Label> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = label_from_int(static_cast<long long>(rng() % 2));
      truth[i] = label_from_int(static_cast<long long>(rng() % 2));
    }
    const auto m = compute_metrics(pred, truth);
    CHECK(m.total() == n);
    CHECK((m.f1 == 0.0) == (m.tp == 0));
    for (double v : {m.precision, m.recall, m.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (m.precision == m.recall) CHECK(m.f1 == doctest::Approx(m.precision));
  }
}

TEST_CASE("metrics TSV and table output") {
  const auto m = metrics_from_counts(3, 1, 1, 5);
  std::ostringstream tsv;
  write_metrics_tsv(tsv, m);
  CHECK(tsv.str().find("f1\t0.75") != std::string::npos);
  CHECK(format_metrics_table(m, "demo").find("demo") != std::string::npos);
}

TEST_CASE("sgd step is rate times gradient") {
  Optimizer sgd(OptimizerKind::kSgd, 0.1);
  Vector p = Vector::Constant(3, 1.0);
  Vector g(3);
  g << 1.0, -2.0, 0.5;
  sgd.step(p, g);
  Vector expected(3);
  expected << 0.9, 1.2, 0.95;
  CHECK((p - expected).norm() < 1e-15);
}

TEST_CASE("adam first step moves each coordinate by about the rate") {
  // With bias correction the first update is g / (|g| + eps) * rate.
  Optimizer adam(OptimizerKind::kAdam, 0.01);
  Vector p = Vector::Zero(3);
  Vector g(3);
  g << 4.0, -0.001, 0.0;
  adam.step(p, g);
  CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(p[2] == 0.0);
  CHECK(adam.steps() == 1);
}

TEST_CASE("adam matches a hand-rolled two-step reference") {
  const double rate = 0.05;
  const double b1 = 0.9;
  const double b2 = 0.999;
  const double eps = 1e-8;
  Optimizer adam(OptimizerKind::kAdam, rate, b1, b2, eps);
  Vector p = Vector::Constant(1, 2.0);
  double ref = 2.0;
  double m = 0.0;
  double v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = 2.0 * ref;  // gradient of x^2
    Vector gv = Vector::Constant(1, 2.0 * p[0]);
    adam.step(p, gv);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    ref -= rate * mh / (std::sqrt(vh) + eps);
    CHECK(p[0] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("optimizer names") {
  CHECK(parse_optimizer_kind("adam") == OptimizerKind::kAdam);
  CHECK(to_string(OptimizerKind::kSgd) == "sgd");
  CHECK_THROWS_AS(parse_optimizer_kind("rmsprop"), Error);
}
