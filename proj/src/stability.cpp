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

#include "jkp/stability.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "jkp/quantile.hpp"

namespace jkp {

std::string_view stability_kind_token(StabilityKind kind) {
  return kind == StabilityKind::InSample ? "in_sample" : "out_of_sample";
}

StabilityKind parse_stability_kind(std::string_view token) {
  if (token == "in_sample") return StabilityKind::InSample;
  if (token == "out_of_sample") return StabilityKind::OutOfSample;
  throw std::invalid_argument("unknown stability kind '" + std::string(token) + "' (expected in_sample | out_of_sample)");
}

std::vector<double> stability_deviations(const Regressor& regressor, const Sampler& sampler, Index n,
                                         StabilityKind kind, Index trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("stability needs at least one trial");
  if (n < 2) throw std::invalid_argument("stability needs n >= 2");
  std::vector<double> deviations(static_cast<std::size_t>(trials));
  parallel_for(deviations.size(), [&](std::size_t t) {
    Rng rng = make_rng(seed, "stability", t);
    const Dataset draw = sampler(n + 1, rng);
    std::vector<Index> first_n(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) first_n[static_cast<std::size_t>(i)] = i;
    const Dataset train = draw.subset(first_n);
    const FittedModel full = regressor.fit(train);
    const FittedModel reduced = regressor.fit(train.without(Index{0}));
    const auto probe = kind == StabilityKind::OutOfSample ? draw.x(n) : draw.x(0);
    deviations[t] = std::abs(full(probe) - reduced(probe));
  });
  return deviations;
}

StabilityEstimate summarize_deviations(const std::vector<double>& deviations, double epsilon, StabilityKind kind,
                                       Index n) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (deviations.empty()) throw std::invalid_argument("no deviations to summarize");
  Index violations = 0;
  for (double d : deviations) violations += d > epsilon ? 1 : 0;
  StabilityEstimate e;
  e.epsilon = epsilon;
  e.kind = kind;
  e.n = n;
  e.trials = static_cast<Index>(deviations.size());
  e.nu_hat = static_cast<double>(violations) / static_cast<double>(e.trials);
  e.standard_error = std::sqrt(e.nu_hat * (1.0 - e.nu_hat) / static_cast<double>(e.trials));
  return e;
}

StabilityEstimate estimate_stability(const Regressor& regressor, const Sampler& sampler, Index n, double epsilon,
                                     StabilityKind kind, Index trials, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  return summarize_deviations(stability_deviations(regressor, sampler, n, kind, trials, seed), epsilon, kind, n);
}

double cv_plus_slack(Index n, Index k) {
  if (n < 1 || k < 1 || k > n) throw std::invalid_argument("need 1 <= K <= n");
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double small_k = 2.0 * (1.0 - 1.0 / kd) / (nd / kd + 1.0);
  const double large_k = (1.0 - kd / nd) / (kd + 1.0);
  return std::min(small_k, large_k);
}

CoverageBounds coverage_lower_bounds(double alpha, double nu, Index n, Index k, std::optional<double> density_bound,
                                     double epsilon) {
  check_level(alpha);
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("nu must lie in [0, 1]");
  const double root = std::sqrt(nu);
  CoverageBounds b{};
  b.jackknife_eps = 1.0 - alpha - 2.0 * root;
  b.jackknife_plus_2eps = 1.0 - alpha - 4.0 * root;
  b.naive_2eps = 1.0 - alpha - 4.0 * root;
  b.jackknife_plus = 1.0 - 2.0 * alpha;
  b.jackknife_minmax = 1.0 - alpha;
  b.cv_plus = 1.0 - 2.0 * alpha - cv_plus_slack(n, k);
  b.cv_plus_floor = 1.0 - 2.0 * alpha - std::sqrt(2.0 / static_cast<double>(n));
  if (density_bound) {
    b.jackknife_density = b.jackknife_eps - 2.0 * epsilon * *density_bound;
    b.jackknife_plus_density = b.jackknife_plus_2eps - 4.0 * epsilon * *density_bound;
  }
  return b;
}

}  // namespace jkp
