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
#include <string>

#include "xlad/common.hpp"

namespace xlad {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind parse_optimizer_kind(const std::string& text);
std::string to_string(OptimizerKind kind);

/// Descent on one parameter block. Adam keeps its moment estimates between
/// calls, so one instance belongs to one block for the whole run.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grad);

  OptimizerKind kind() const noexcept { return kind_; }
  double rate() const noexcept { return rate_; }
  std::uint64_t steps() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  double rate_;
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t t_ = 0;
  Vector m_;
  Vector v_;
};

}  // namespace xlad
