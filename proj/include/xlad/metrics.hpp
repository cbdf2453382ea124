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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xlad/common.hpp"

namespace xlad {

/// Sequence-level detection counts with the anomalous class as positive.
/// Every ratio with a zero denominator is reported as 0.
struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> truth);

/// One `metric<TAB>value` line per field.
void write_metrics_tsv(std::ostream& out, const Metrics& m);
/// Aligned two-column table for terminals.
std::string format_metrics_table(const Metrics& m, const std::string& title = {});

}  // namespace xlad
