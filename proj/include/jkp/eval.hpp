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
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jkp/data.hpp"
#include "jkp/intervals.hpp"
#include "jkp/regress.hpp"

namespace jkp {

/// One method to evaluate, with its own level and method-specific knobs.
struct MethodConfig {
  Method method = Method::JackknifePlus;
  IntervalSpec spec;
  /// Fold count for cv+ and cross-conformal; 0 means n.
  Index folds = 0;
  SplitSpec split;
  GridSpec grid;

  /// Method token, with the fold count for K-fold methods: "cv+(K=5)".
  std::string label() const;
};

/// An interval or, for cross-/full conformal, a union of intervals.
struct Prediction {
  PredictionInterval interval;
  std::optional<PredictionSet> set;

  bool contains(double y) const { return set ? set->contains(y) : interval.contains(y); }
  double width() const { return set ? set->width() : interval.width(); }
};

/// predictions[m][t] for method m at test row t. Leave-out caches are built
/// once per distinct fold count and shared. Fold, split and cross-conformal
/// randomization streams all derive from `seed`.
std::vector<std::vector<Prediction>> predict_all(const Dataset& train, const Eigen::MatrixXd& test_features,
                                                 const Regressor& regressor, const std::vector<MethodConfig>& methods,
                                                 std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

struct TrialOutcome {
  std::string method;
  /// Fraction of test rows whose response is inside.
  double coverage = 0.0;
  /// Mean width over test rows with finite width; NaN if there are none.
  double mean_width = 0.0;
  Index infinite = 0;
};

std::vector<TrialOutcome> run_trial(const Dataset& train, const Dataset& test, const Regressor& regressor,
                                    const std::vector<MethodConfig>& methods, std::uint64_t seed);

/// Per-trial coverage and width of one method at one level.
struct CoverageReport {
  std::string method;
  double alpha = 0.0;
  std::vector<double> coverage;
  std::vector<double> width;
  std::vector<Index> infinite;

  Index trials() const { return static_cast<Index>(coverage.size()); }
  double coverage_mean() const;
  /// Sample standard deviation over trials divided by sqrt(trials).
  double coverage_se() const;
  /// Over trials with a finite mean width.
  double width_mean() const;
  double width_se() const;
  Index infinite_count() const;
};

/// Pools per-trial rows. All reports must share method and alpha.
CoverageReport aggregate(const std::vector<CoverageReport>& reports);

struct ExperimentRow {
  Index d = 0;
  CoverageReport report;
};

/// CSV: d,method,alpha,trials,coverage_mean,coverage_se,width_mean,width_se,infinite_count
void write_report_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

/// Gaussian-linear Monte Carlo: every trial draws a fresh beta, n training
/// and n_test test rows, then evaluates all methods on the same draw.
struct GaussianCoverageConfig {
  Index n = 20;
  Index d = 5;
  Index trials = 500;
  Index n_test = 50;
  std::vector<MethodConfig> methods;
  std::uint64_t seed = 0;
};

std::vector<CoverageReport> gaussian_coverage(const GaussianCoverageConfig& config, const Regressor& regressor);

struct Figure2Config {
  Index n = 100;
  std::vector<Index> d_list = {5, 50, 100, 150, 200};
  Index trials = 20;
  Index n_test = 100;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  bool full_conformal = false;
  /// Grid size for full conformal when enabled.
  Index grid_points = 50;
};

/// naive, jackknife, jackknife+, jackknife-mm, cv+(K=10), split and
/// optionally full conformal, with min-norm least squares.
std::vector<MethodConfig> figure2_methods(double alpha, bool full_conformal, Index grid_points = 200);
std::vector<ExperimentRow> figure2_experiment(const Figure2Config& config);

/// Jackknife+, jackknife-minmax, split conformal and CV+ for each fold count
/// (0 meaning K = n).
std::vector<MethodConfig> coverage_mc_methods(double alpha, const std::vector<Index>& folds);

struct MemorizerConfig {
  Index n = 10;
  Index trials = 50;
  Index n_test = 100;
  double alpha = 0.1;
  double eps = 1.0;
  std::uint64_t seed = 0;
};

/// X ~ N(0, 1), Y = 0, memorizing regressor; reports naive, jackknife and
/// jackknife+.
std::vector<CoverageReport> memorizer_pathology(const MemorizerConfig& config);

struct ParityConfig {
  Index n = 100000;
  double alpha = 0.25;
  double epsilon = 0.01;
  Index trials = 50;
  Index n_test = 200;
  std::uint64_t seed = 0;
};

double parity_gamma(Index n, double alpha);
/// 1 - 2 alpha + 6 sqrt(log n / n): the coverage ceiling the construction
/// guarantees for the eps-inflated jackknife+.
double parity_coverage_ceiling(Index n, double alpha);
/// Throws std::invalid_argument when the ceiling is not below the nominal
/// 1 - alpha (the demonstration would show nothing), when alpha > 1/2, or
/// when gamma leaves (0, 1).
void validate_parity(const ParityConfig& config);

/// Leave-one-out ingredients of the parity adversary in O(n): since each
/// B_j is +/-1, B_{-i} = (prod_j B_j) * B_i.
struct ParityLoo {
  Eigen::VectorXd sign_without;  ///< B_{-i}
  Eigen::VectorXd residuals;     ///< |Y_i - tau A_i C_i B_{-i}|
  double tau = 0.0;

  /// mu_{-i}(x) for every i.
  Eigen::VectorXd centers(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};
ParityLoo parity_loo(const Dataset& train, double tau);

/// eps-inflated jackknife+ coverage on the parity construction with
/// gamma = (2.15 / alpha) sqrt(log n / n) and tau = eps * n.
CoverageReport parity_pathology(const ParityConfig& config);

}  // namespace jkp
