// Copyright 2026 The jkp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace jkp {

/// Values are extended reals: IEEE +/-infinity stand for the overflow
/// results of the quantile operators.
template <typename Scalar>
inline constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();

/// alpha * count, snapped to the nearest integer when it lies within a few
/// ulps of one, so that decimal levels such as 0.29 with count 100 give 29.
/// Every rank and threshold in the library goes through this function.
inline double scaled_level(double alpha, std::int64_t count) {
  const double t = alpha * static_cast<double>(count);
  const double r = std::nearbyint(t);
  if (std::abs(t - r) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
    return r;
  }
  return t;
}

/// floor(alpha * count) under the snapping rule of scaled_level.
inline std::int64_t level_floor(double alpha, std::int64_t count) {
  return static_cast<std::int64_t>(std::floor(scaled_level(alpha, count)));
}

inline void check_level(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
}

/// 1-based rank of the upper quantile among n values: ceil((1-alpha)(n+1)),
/// computed as n + 1 - floor(alpha (n+1)). Ranks above n mean +infinity.
inline std::int64_t upper_rank(std::int64_t n, double alpha) {
  return n + 1 - level_floor(alpha, n + 1);
}

/// 1-based rank of the lower quantile: floor(alpha (n+1)). Zero means -infinity.
inline std::int64_t lower_rank(std::int64_t n, double alpha) {
  return level_floor(alpha, n + 1);
}

namespace detail {

template <typename Scalar>
Scalar kth_smallest(std::vector<Scalar> work, std::int64_t rank) {
  auto nth = work.begin() + (rank - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

template <typename Scalar>
void check_values(std::span<const Scalar> values, double alpha) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sequence");
  }
  check_level(alpha);
}

}  // namespace detail

/// The ceil((1-alpha)(n+1))-th smallest of the values, or +inf when that
/// rank exceeds n (and -inf at alpha = 1, where the rank is 0). Duplicates
/// count with multiplicity.
template <typename Scalar>
Scalar upper_quantile(std::span<const Scalar> values, double alpha) {
  detail::check_values(values, alpha);
  const auto n = static_cast<std::int64_t>(values.size());
  const std::int64_t rank = upper_rank(n, alpha);
  if (rank > n) return kInf<Scalar>;
  if (rank < 1) return -kInf<Scalar>;  // alpha = 1
  return detail::kth_smallest(std::vector<Scalar>(values.begin(), values.end()), rank);
}

/// The floor(alpha(n+1))-th smallest of the values, or -inf when that rank
/// is zero. Equals -upper_quantile(-v, alpha) exactly.
template <typename Scalar>
Scalar lower_quantile(std::span<const Scalar> values, double alpha) {
  detail::check_values(values, alpha);
  const auto n = static_cast<std::int64_t>(values.size());
  const std::int64_t rank = lower_rank(n, alpha);
  if (rank < 1) return -kInf<Scalar>;
  if (rank > n) return kInf<Scalar>;  // alpha = 1
  return detail::kth_smallest(std::vector<Scalar>(values.begin(), values.end()), rank);
}

template <typename Derived>
typename Derived::Scalar upper_quantile(const Eigen::DenseBase<Derived>& values, double alpha) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = values.derived().reshaped();
  return upper_quantile(std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size())), alpha);
}

template <typename Derived>
typename Derived::Scalar lower_quantile(const Eigen::DenseBase<Derived>& values, double alpha) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = values.derived().reshaped();
  return lower_quantile(std::span<const Scalar>(v.data(), static_cast<std::size_t>(v.size())), alpha);
}

}  // namespace jkp
