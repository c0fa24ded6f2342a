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

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "jkp/stability.hpp"

using namespace jkp;

namespace {

Sampler gaussian_sampler(Index d, std::uint64_t seed) {
  Rng rng = make_rng(seed, "test-beta");
  const Eigen::VectorXd beta = draw_beta(d, rng);
  return [beta](Index n, Rng& r) { return draw_gaussian_linear(n, beta, r); };
}

}  // namespace

TEST_CASE("stability examples") {
  const Sampler s = gaussian_sampler(2, 1);
  // Responses here stay far inside +/- 1000, so the mean moves by less.
  const StabilityEstimate mean_wide =
      estimate_stability(Regressor::constant_mean(), s, 20, 1000.0, StabilityKind::OutOfSample, 200, 4);
  CHECK(mean_wide.nu_hat == 0.0);
  const StabilityEstimate mean_tight =
      estimate_stability(Regressor::constant_mean(), s, 20, 0.0, StabilityKind::InSample, 200, 4);
  CHECK(mean_tight.nu_hat == 1.0);

  const StabilityEstimate knn = estimate_stability(Regressor::knn(1), s, 10, 0.0, StabilityKind::OutOfSample, 2000, 9);
  CHECK(knn.nu_hat <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 2000.0));
  CHECK(knn.n == 10);
  CHECK(knn.trials == 2000);

  const StabilityEstimate mem =
      estimate_stability(Regressor::memorizer(1.0), s, 10, 1.5, StabilityKind::OutOfSample, 100, 2);
  CHECK(mem.nu_hat == 1.0);
  CHECK(mem.standard_error == 0.0);
}

TEST_CASE("stability argument checks and tokens") {
  const Sampler s = gaussian_sampler(2, 1);
  CHECK_THROWS(estimate_stability(Regressor::constant_mean(), s, 10, -1.0, StabilityKind::OutOfSample, 10, 0));
  CHECK_THROWS(estimate_stability(Regressor::constant_mean(), s, 10, 0.0, StabilityKind::OutOfSample, 0, 0));
  CHECK(parse_stability_kind("in_sample") == StabilityKind::InSample);
  CHECK(stability_kind_token(StabilityKind::OutOfSample) == "out_of_sample");
  CHECK_THROWS_AS(parse_stability_kind("sideways"), std::invalid_argument);
}

TEST_CASE("coverage bounds") {
  CHECK(cv_plus_slack(100, 10) == doctest::Approx(0.9 / 11.0).epsilon(1e-14));
  const CoverageBounds b = coverage_lower_bounds(0.1, 0.0, 100, 10);
  CHECK(b.cv_plus == doctest::Approx(0.8 - 0.9 / 11.0).epsilon(1e-14));
  CHECK(b.cv_plus == doctest::Approx(0.7182).epsilon(1e-4));
  CHECK(b.jackknife_eps == doctest::Approx(0.9));
  CHECK(b.jackknife_plus_2eps == doctest::Approx(0.9));
  CHECK(b.jackknife_plus == doctest::Approx(0.8));
  CHECK(b.jackknife_minmax == doctest::Approx(0.9));
  CHECK(b.cv_plus_floor == doctest::Approx(0.8 - std::sqrt(0.02)));
  CHECK_FALSE(b.jackknife_density.has_value());
  CHECK(coverage_lower_bounds(0.1, 0.0, 50, 50).cv_plus == doctest::Approx(0.8));
  const CoverageBounds s = coverage_lower_bounds(0.1, 0.04, 100, 10, 2.0, 0.01);
  CHECK(s.jackknife_eps == doctest::Approx(0.5));
  CHECK(s.jackknife_plus_2eps == doctest::Approx(0.1));
  CHECK(*s.jackknife_density == doctest::Approx(0.46));
  CHECK(*s.jackknife_plus_density == doctest::Approx(0.02));
}

TEST_CASE("property: CV+ slack never exceeds sqrt(2/n)") {
  for (Index n = 2; n <= 500; ++n) {
    for (Index k = 2; k <= n; ++k) {
      if (n % k == 0) REQUIRE(cv_plus_slack(n, k) <= std::sqrt(2.0 / static_cast<double>(n)) + 1e-15);
    }
  }
}

TEST_CASE("property: estimates are nonincreasing in epsilon") {
  const Sampler s = gaussian_sampler(3, 6);
  for (const Regressor& reg : {Regressor::min_norm_ols(), Regressor::knn(3), Regressor::constant_mean()}) {
    for (StabilityKind kind : {StabilityKind::InSample, StabilityKind::OutOfSample}) {
      const auto dev = stability_deviations(reg, s, 15, kind, 300, 12);
      double prev = 1.0;
      for (double eps : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
        const double nu = summarize_deviations(dev, eps, kind, 15).nu_hat;
        REQUIRE(nu <= prev);
        prev = nu;
      }
    }
  }
}

TEST_CASE("property: k-NN zero-threshold instability stays near K/n") {
  int config = 0;
  for (Index k : {1, 2, 3, 5}) {
    for (Index n : {10, 20, 40, 60, 100}) {
      const Sampler s = gaussian_sampler(2, static_cast<std::uint64_t>(config));
      const StabilityEstimate e = estimate_stability(Regressor::knn(k), s, n, 0.0, StabilityKind::OutOfSample, 1000,
                                                     static_cast<std::uint64_t>(100 + config));
      const double p = static_cast<double>(k) / static_cast<double>(n);
      REQUIRE(e.nu_hat <= p + 3.0 * std::sqrt(p * (1.0 - p) / 1000.0));
      ++config;
    }
  }
}
