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

#include "xlad/metrics.hpp"

#include <cstdio>
#include <ostream>

namespace xlad {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m{tp, fp, fn, tn};
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  const double pr = m.precision + m.recall;
  m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
  return m;
}

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> truth) {
  if (predictions.size() != truth.size()) {
    throw Error("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error("compute_metrics: empty input");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predictions[i] == Label::kAnomalous;
    const bool t = truth[i] == Label::kAnomalous;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

void write_metrics_tsv(std::ostream& out, const Metrics& m) {
  char buf[64];
  auto real = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << name << '\t' << buf << '\n';
  };
  out << "tp\t" << m.tp << "\nfp\t" << m.fp << "\nfn\t" << m.fn << "\ntn\t" << m.tn << '\n';
  real("precision", m.precision);
  real("recall", m.recall);
  real("f1", m.f1);
}

std::string format_metrics_table(const Metrics& m, const std::string& title) {
  std::string out;
  if (!title.empty()) out += title + "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "  %-10s %8.2f%%\n  %-10s %8.2f%%\n  %-10s %8.2f%%\n", "precision",
                100.0 * m.precision, "recall", 100.0 * m.recall, "f1", 100.0 * m.f1);
  out += buf;
  std::snprintf(buf, sizeof buf, "  tp=%zu fp=%zu fn=%zu tn=%zu\n", m.tp, m.fp, m.fn, m.tn);
  out += buf;
  return out;
}

}  // namespace xlad
