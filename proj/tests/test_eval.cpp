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
#include <sstream>

#include "helpers.hpp"
#include "jkp/eval.hpp"

using namespace jkp;

namespace {

MethodConfig method(Method m, double alpha, Index folds = 0) {
  MethodConfig c;
  c.method = m;
  c.spec.alpha = alpha;
  c.folds = folds;
  return c;
}

std::string csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  write_report_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_CASE("method labels") {
  CHECK(method(Method::CvPlus, 0.1, 10).label() == "cv+(K=10)");
  CHECK(method(Method::CrossConformal, 0.1).label() == "cross-conformal(K=n)");
  CHECK(method(Method::JackknifeMinmax, 0.1).label() == "jackknife-mm");
}

TEST_CASE("run_trial examples") {
  const Dataset train = jkp::testing::worked();
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  const Dataset test(x, (Eigen::VectorXd(1) << 2.5).finished());
  const auto covered = run_trial(train, test, Regressor::constant_mean(), {method(Method::JackknifePlus, 0.25)}, 0);
  CHECK(covered[0].coverage == 1.0);
  CHECK(covered[0].mean_width == 6.0);

  const Dataset many = jkp::testing::gaussian(7, 1, 2);
  const auto whole = run_trial(train, many, Regressor::constant_mean(), {method(Method::JackknifePlus, 0.0)}, 0);
  CHECK(whole[0].coverage == 1.0);
  CHECK(whole[0].infinite == 7);
  CHECK(std::isnan(whole[0].mean_width));

  Eigen::MatrixXd xs(4, 1);
  xs << 0.1, 0.2, 0.3, 0.4;
  const Dataset zeros(xs, Eigen::VectorXd::Zero(4));
  Eigen::MatrixXd xt(3, 1);
  xt << 0.9, 1.9, 2.9;
  const Dataset zero_test(xt, Eigen::VectorXd::Zero(3));
  const auto mem = run_trial(zeros, zero_test, Regressor::memorizer(1.0), {method(Method::Jackknife, 0.2)}, 0);
  CHECK(mem[0].coverage == 0.0);

  const Dataset empty(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
  CHECK_THROWS_AS(run_trial(train, empty, Regressor::constant_mean(), {method(Method::Naive, 0.1)}, 0),
                  std::invalid_argument);
}

TEST_CASE("predict_all shares caches and returns sets for set-valued methods") {
  const Dataset train = jkp::testing::gaussian(12, 2, 4);
  const Dataset test = jkp::testing::gaussian(3, 2, 5);
  const std::vector<MethodConfig> ms = {method(Method::JackknifePlus, 0.2), method(Method::CvPlus, 0.2),
                                        method(Method::CrossConformal, 0.2, 4), method(Method::FullConformal, 0.2)};
  std::vector<std::string> warnings;
  const auto p = predict_all(train, test.features(), Regressor::min_norm_ols(), ms, 1, &warnings);
  CHECK(warnings.empty());
  for (Index t = 0; t < 3; ++t) {
    CHECK(p[0][t].interval == p[1][t].interval);
    CHECK_FALSE(p[0][t].set.has_value());
    CHECK(p[2][t].set.has_value());
    CHECK(p[3][t].set.has_value());
  }
  const auto uneven = predict_all(train, test.features(), Regressor::min_norm_ols(), {method(Method::CvPlus, 0.2, 5)},
                                  1, &warnings);
  CHECK(warnings.size() == 1);
  CHECK_THROWS(predict_all(train, Eigen::MatrixXd::Zero(1, 3), Regressor::min_norm_ols(), ms, 1));
}

TEST_CASE("aggregate pools trials") {
  CoverageReport r;
  r.method = "jackknife+";
  r.alpha = 0.1;
  r.coverage = {0.8, 0.9, 1.0, 0.7};
  r.width = {1.0, 2.0, kInf<double>, 3.0};
  r.infinite = {0, 0, 1, 0};
  const CoverageReport one = aggregate({r});
  CHECK(one.coverage == r.coverage);
  CHECK(one.coverage_mean() == r.coverage_mean());
  CHECK(one.width_mean() == doctest::Approx(2.0));
  CHECK(one.infinite_count() == 1);

  const CoverageReport two = aggregate({r, r});
  CHECK(two.trials() == 8);
  CHECK(two.coverage_mean() == doctest::Approx(r.coverage_mean()));
  // Same spread, twice the trials: the SE shrinks by sqrt(2) up to the
  // (T - 1) versus (2T - 1) sample-variance denominators.
  const double expected = r.coverage_se() / std::sqrt(2.0) * std::sqrt((4.0 - 1.0) / (8.0 - 1.0) * 2.0);
  CHECK(two.coverage_se() == doctest::Approx(expected).epsilon(1e-12));

  CoverageReport other = r;
  other.alpha = 0.2;
  CHECK_THROWS_AS(aggregate({r, other}), std::invalid_argument);
  other = r;
  other.method = "naive";
  CHECK_THROWS_AS(aggregate({r, other}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("figure2 table shape and determinism") {
  Figure2Config f;
  f.n = 20;
  f.d_list = {3, 30};
  f.trials = 3;
  f.n_test = 10;
  f.seed = 11;
  const auto rows = figure2_experiment(f);
  CHECK(rows.size() == 2 * figure2_methods(0.1, false).size());
  CHECK(figure2_methods(0.1, true).size() == figure2_methods(0.1, false).size() + 1);
  const std::string text = csv(rows);
  CHECK(text.rfind("d,method,alpha,trials,coverage_mean,coverage_se,width_mean,width_se,infinite_count\n", 0) == 0);
  CHECK(text == csv(figure2_experiment(f)));
  f.seed = 12;
  CHECK(text != csv(figure2_experiment(f)));
  for (const auto& row : rows) {
    for (double c : row.report.coverage) REQUIRE((c >= 0.0 && c <= 1.0));
  }
}

TEST_CASE("property: minmax is never narrower than jackknife+") {
  GaussianCoverageConfig g;
  g.n = 20;
  g.d = 5;
  g.trials = 40;
  g.n_test = 20;
  g.methods = {method(Method::JackknifePlus, 0.2), method(Method::JackknifeMinmax, 0.2)};
  g.seed = 3;
  for (const Regressor& reg : {Regressor::min_norm_ols(), Regressor::constant_mean()}) {
    const auto reports = gaussian_coverage(g, reg);
    for (Index t = 0; t < g.trials; ++t) {
      REQUIRE(reports[1].width[static_cast<std::size_t>(t)] >= reports[0].width[static_cast<std::size_t>(t)]);
      REQUIRE(reports[1].coverage[static_cast<std::size_t>(t)] >= reports[0].coverage[static_cast<std::size_t>(t)]);
    }
  }
}

TEST_CASE("memorizer pathology") {
  MemorizerConfig m;
  m.trials = 20;
  const auto reports = memorizer_pathology(m);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].method == "naive");
  for (double c : reports[0].coverage) CHECK(c == 0.0);
  for (double c : reports[1].coverage) CHECK(c == 0.0);
  for (double c : reports[2].coverage) CHECK(c == 1.0);
  m.alpha = 0.05;
  CHECK_THROWS_AS(memorizer_pathology(m), std::invalid_argument);
}

TEST_CASE("parity leave-one-out shortcut matches refitting") {
  const double tau = 7.0;
  const Dataset train = attach_tau(gen_pathological_abc(60, 0.25, 0.3, 8), tau);
  const Dataset test = gen_pathological_abc(5, 0.25, 0.3, 9);
  const ParityLoo fast = parity_loo(train, tau);
  const LooCache slow = LooCache::build(train, Regressor::parity(tau), train.rows());
  CHECK(fast.residuals == slow.residuals());
  for (Index j = 0; j < test.rows(); ++j) CHECK(fast.centers(test.x(j)) == slow.held_out_predictions(test.x(j)));
}

TEST_CASE("parity parameters") {
  ParityConfig p;
  p.n = 1000;
  CHECK_THROWS_AS(validate_parity(p), std::invalid_argument);
  p.n = 10000;
  CHECK_NOTHROW(validate_parity(p));
  p.alpha = 0.6;
  CHECK_THROWS_AS(validate_parity(p), std::invalid_argument);
  CHECK(parity_coverage_ceiling(100000, 0.25) == doctest::Approx(0.5644).epsilon(1e-3));
  CHECK(parity_gamma(100000, 0.25) == doctest::Approx(8.6 * std::sqrt(std::log(1e5) / 1e5)));
}

TEST_CASE("parity pathology runs small and is reproducible") {
  ParityConfig p;
  p.n = 20000;
  p.trials = 3;
  p.n_test = 50;
  p.seed = 4;
  const CoverageReport a = parity_pathology(p);
  const CoverageReport b = parity_pathology(p);
  CHECK(a.coverage == b.coverage);
  CHECK(a.trials() == 3);
  CHECK(a.method == "jackknife+");
}
