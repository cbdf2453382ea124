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

#include "xlad/optimizer.hpp"

#include <cmath>

namespace xlad {

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw Error("unknown optimizer '" + text + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

Optimizer::Optimizer(OptimizerKind kind, double rate, double beta1, double beta2, double eps)
    : kind_(kind), rate_(rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw Error("optimizer rate must be finite and >= 0");
}

void Optimizer::step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grad) {
  if (params.size() != grad.size()) throw Error("optimizer: gradient size mismatch");
  if (!grad.allFinite()) throw Error("optimizer: non-finite gradient");
  ++t_;
  if (kind_ == OptimizerKind::kSgd) {
    params -= rate_ * grad;
    return;
  }
  if (m_.size() != grad.size()) {
    m_ = Vector::Zero(grad.size());
    v_ = Vector::Zero(grad.size());
  }
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= rate_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace xlad
