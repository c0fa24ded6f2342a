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
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "jkp/random.hpp"

namespace jkp {

using Index = Eigen::Index;

/// Malformed or unreadable input data. Carries the 1-based row/column of the
/// offending cell when there is one (row 1 is the header).
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, Index row = 0, Index column = 0);

  Index row() const { return row_; }
  Index column() const { return column_; }

 private:
  Index row_;
  Index column_;
};

/// n x d feature matrix plus length-n response vector. Immutable once built.
/// Construction rejects mismatched shapes and non-finite entries.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::MatrixXd features, Eigen::VectorXd responses,
          std::vector<std::string> feature_names = {}, std::string target_name = "y");

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& responses() const { return responses_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& target_name() const { return target_name_; }

  Index rows() const { return features_.rows(); }
  Index dims() const { return features_.cols(); }
  bool empty() const { return rows() == 0; }

  auto x(Index i) const { return features_.row(i); }
  double y(Index i) const { return responses_(i); }

  /// Rows at the given indices, in that order.
  Dataset subset(std::span<const Index> indices) const;
  /// All rows except those listed.
  Dataset without(std::span<const Index> removed) const;
  Dataset without(Index removed) const;
  /// This dataset with one extra row appended.
  Dataset with_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const;
  /// Same features, new responses.
  Dataset with_responses(Eigen::VectorXd responses) const;

  /// Rows sorted lexicographically by (features, response). Symmetric
  /// regressors fit on this order so reordering the input cannot change a bit
  /// of the output.
  Dataset canonical() const;

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd responses_;
  std::vector<std::string> feature_names_;
  std::string target_name_ = "y";
};

/// Feature rows of a table whose target column is optional (test files).
struct FeatureTable {
  Eigen::MatrixXd features;
  std::optional<Eigen::VectorXd> responses;
  std::vector<std::string> feature_names;
};

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);
FeatureTable load_feature_csv(const std::filesystem::path& path, const std::string& target_column);

/// Writes features then target, 17 significant digits.
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Shortest-round-trip-free formatting used for all numeric CSV output:
/// 17 significant digits, "inf"/"-inf" for infinities.
std::string format_number(double value);

/// Train/holdout partition of 0..n-1. Either explicit index lists or a
/// seeded random split holding out round(n * holdout_fraction) rows.
struct SplitSpec {
  double holdout_fraction = 0.5;
  std::vector<Index> train_indices;
  std::vector<Index> holdout_indices;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> holdout;
};

/// Resolves the spec for n rows. Index lists come back sorted; the result
/// is disjoint and covers 0..n-1.
Split resolve_split(const SplitSpec& spec, Index n);

/// Draws beta = sqrt(10) * u with u uniform on the unit sphere in R^d.
Eigen::VectorXd draw_beta(Index d, Rng& rng);

/// n rows with X ~ N(0, I_d) and Y | X ~ N(X'beta, 1).
Dataset draw_gaussian_linear(Index n, const Eigen::VectorXd& beta, Rng& rng);

struct GaussianLinear {
  Dataset data;
  Eigen::VectorXd beta;
};

/// Fresh beta and n rows, reproducible from the seed.
GaussianLinear gen_gaussian_linear(Index n, Index d, std::uint64_t seed);

/// Rows (A, B, C) with A ~ Bernoulli(2 alpha (1 - gamma)), B uniform on
/// {-1, +1}, C ~ Unif[-1, 1]. Responses are zero until attach_tau.
Dataset draw_pathological_abc(Index n, double alpha, double gamma, Rng& rng);
Dataset gen_pathological_abc(Index n, double alpha, double gamma, std::uint64_t seed);

/// Sets Y_i = tau * A_i (A is the first column).
Dataset attach_tau(const Dataset& data, double tau);

}  // namespace jkp
