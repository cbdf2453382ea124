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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace xlad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sequence-level ground truth or pseudo-label.
enum class Label : std::uint8_t { kNormal = 0, kAnomalous = 1 };

constexpr int to_int(Label label) noexcept { return static_cast<int>(label); }
constexpr Label flip(Label label) noexcept {
  return label == Label::kNormal ? Label::kAnomalous : Label::kNormal;
}
Label label_from_int(long long value);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the pipeline when a stage fails; names the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

std::string_view trim(std::string_view text) noexcept;

/// Stable 64-bit FNV-1a hash, independent of the standard library.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 14695981039346656037ULL) noexcept;

/// splitmix64 finaliser; used to derive independent streams from a seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Uniform double in [0, 1) from 53 high bits.
inline double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace xlad
