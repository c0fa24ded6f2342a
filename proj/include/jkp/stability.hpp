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

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "jkp/data.hpp"
#include "jkp/regress.hpp"

namespace jkp {

enum class StabilityKind { InSample, OutOfSample };

std::string_view stability_kind_token(StabilityKind kind);
/// in_sample | out_of_sample
StabilityKind parse_stability_kind(std::string_view token);

/// Draws a dataset of the requested size from a fixed distribution.
using Sampler = std::function<Dataset(Index n, Rng& rng)>;

/// Empirical frequency with which deleting one training point moves a
/// prediction by more than epsilon. Out-of-sample compares mu and mu_{-1}
/// at a fresh point; in-sample compares them at the deleted point itself.
struct StabilityEstimate {
  double epsilon = 0.0;
  double nu_hat = 0.0;
  /// sqrt(nu_hat (1 - nu_hat) / trials)
  double standard_error = 0.0;
  StabilityKind kind = StabilityKind::OutOfSample;
  Index trials = 0;
  /// Training size the estimate refers to.
  Index n = 0;
};

/// |mu(X) - mu_{-1}(X)| for each trial, with X the fresh point or the
/// deleted point. Trial t uses the stream derived from (seed, t).
std::vector<double> stability_deviations(const Regressor& regressor, const Sampler& sampler, Index n,
                                         StabilityKind kind, Index trials, std::uint64_t seed);

StabilityEstimate estimate_stability(const Regressor& regressor, const Sampler& sampler, Index n, double epsilon,
                                     StabilityKind kind, Index trials, std::uint64_t seed);

/// Counts deviations above epsilon; lets one sample serve many thresholds.
StabilityEstimate summarize_deviations(const std::vector<double>& deviations, double epsilon, StabilityKind kind,
                                       Index n);

/// Worst-case and stability-based coverage lower bounds.
struct CoverageBounds {
  double jackknife_eps;         ///< eps-inflated jackknife: 1 - alpha - 2 sqrt(nu)
  double jackknife_plus_2eps;   ///< 2eps-inflated jackknife+: 1 - alpha - 4 sqrt(nu)
  double naive_2eps;            ///< 2eps-inflated naive (needs both stabilities): 1 - alpha - 4 sqrt(nu)
  double jackknife_plus;        ///< assumption-free: 1 - 2 alpha
  double jackknife_minmax;      ///< assumption-free: 1 - alpha
  double cv_plus;               ///< 1 - 2 alpha - min{2(1-1/K)/(n/K+1), (1-K/n)/(K+1)}
  double cv_plus_floor;         ///< 1 - 2 alpha - sqrt(2/n)
  /// Uninflated jackknife / jackknife+ when Y|X has density bounded by c:
  /// subtract 2 eps c and 4 eps c. Present only when c and eps are supplied.
  std::optional<double> jackknife_density;
  std::optional<double> jackknife_plus_density;
};

/// min{2(1-1/K)/(n/K+1), (1-K/n)/(K+1)}
double cv_plus_slack(Index n, Index k);

CoverageBounds coverage_lower_bounds(double alpha, double nu, Index n, Index k,
                                     std::optional<double> density_bound = std::nullopt, double epsilon = 0.0);

}  // namespace jkp
