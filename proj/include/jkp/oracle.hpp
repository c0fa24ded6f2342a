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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "jkp/data.hpp"
#include "jkp/intervals.hpp"
#include "jkp/regress.hpp"

namespace jkp {

/// (n+1) x (n+1) residuals of the pairwise-deleted fits: entry (i, j) is
/// |Y_i - mu_{-(i,j)}(X_i)|, the diagonal is +inf.
struct ResidualMatrix {
  Eigen::MatrixXd residuals;
  /// mu_{-(j,last)}(X_last) for j < last: the leave-one-out predictions at
  /// the test row.
  Eigen::VectorXd test_predictions;

  Index size() const { return residuals.rows(); }
};

enum class ComparisonVariant { Plus, Minmax };

/// A_ij in {0, 1}; diagonal zero.
using ComparisonMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Fits all (n+1 choose 2) pairwise-deleted models. The last row of `points`
/// plays the test point. Needs at least 3 rows.
ResidualMatrix residual_matrix(const Dataset& points, const Regressor& regressor);

/// Plus: A_ij = 1{R_ij > R_ji}. Minmax: A_ij = 1{min_j' R_ij' > R_ji}.
ComparisonMatrix comparison_matrix(const Eigen::MatrixXd& residuals, ComparisonVariant variant);

/// Indices i with row sum A_i. >= (1 - alpha)(n + 1), where n + 1 = A.rows().
/// The threshold is compared in integers: n + 1 - rowsum <= floor(alpha (n+1)).
std::vector<Index> strange_set(const ComparisonMatrix& comparisons, double alpha);

struct VariantAudit {
  ComparisonVariant variant;
  Index strange_count = 0;
  /// Largest strange-set size the tournament argument allows.
  Index strange_limit = 0;
  bool bound_holds = true;
  PredictionInterval interval;
  /// Decided from the rounded residuals, which matches `interval` except at
  /// exact ties where mu +/- R rounds across y.
  bool test_covered = true;
  bool test_strange = false;
  /// Noncoverage of the test response implies the test point is strange.
  bool implication_holds = true;

  bool ok() const { return bound_holds && implication_holds; }
};

struct AuditReport {
  Index n = 0;
  double alpha = 0.0;
  std::vector<VariantAudit> variants;

  bool ok() const;
  /// Instance serialized for replay: parameters as comments, then the rows.
  std::string replay;
};

/// Checks, on one concrete instance, the strange-set size bound
/// (< 2 alpha (n+1) for plus, <= alpha (n+1) for minmax) and that the test
/// row is strange whenever the matching interval misses it. The interval is
/// built from the same pairwise fits.
AuditReport audit(const Dataset& points, const Regressor& regressor, double alpha,
                  const std::vector<ComparisonVariant>& variants = {ComparisonVariant::Plus,
                                                                    ComparisonVariant::Minmax});

/// A seeded family of random audit instances. Instance t draws n from
/// [n_min, n_max] (unless fixed), cycles through the regressor tokens and
/// levels, and on odd t snaps the data to a half-integer grid so that
/// residual ties get exercised.
struct AuditCampaign {
  std::optional<Index> n;
  Index n_min = 4;
  Index n_max = 20;
  Index dims = 2;
  std::vector<std::string> regressors = {"mean", "ols", "knn"};
  std::vector<double> alphas = {0.1, 0.25, 0.5};
  /// k-NN neighbor count, capped at the n - 1 rows of a pairwise fit.
  Index knn_k = 3;
  std::uint64_t seed = 0;
};

struct AuditInstance {
  /// n + 1 rows; the last one plays the test point.
  Dataset points;
  std::string regressor_token;
  Regressor regressor;
  double alpha = 0.0;
};

AuditInstance audit_instance(const AuditCampaign& campaign, Index t);

std::string_view variant_token(ComparisonVariant variant);
ComparisonVariant parse_variant(std::string_view token);

}  // namespace jkp
