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

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "jkp/data.hpp"

namespace jkp {

/// A fitted regression function x -> mu(x). Implementations are immutable.
class Model {
 public:
  virtual ~Model() = default;
  virtual double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const = 0;
};

/// Shared handle to a fitted model plus the training sample size it saw.
class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(std::shared_ptr<const Model> model, Index sample_size)
      : model_(std::move(model)), sample_size_(sample_size) {}

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return model_->predict(x); }
  Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const;

  Index sample_size() const { return sample_size_; }
  const Model& model() const { return *model_; }

 private:
  std::shared_ptr<const Model> model_;
  Index sample_size_ = 0;
};

/// Linear model x -> intercept + x'coefficients.
class LinearModel final : public Model {
 public:
  LinearModel(Eigen::VectorXd coefficients, double intercept = 0.0)
      : coefficients_(std::move(coefficients)), intercept_(intercept) {}

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
    return intercept_ + x.dot(coefficients_);
  }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 private:
  Eigen::VectorXd coefficients_;
  double intercept_;
};

/// The zero function; what every shipped regressor returns on an empty
/// training set.
FittedModel zero_model();

/// Minimum-norm least squares, beta = pinv(X) y, no intercept. Singular
/// values below max(n, d) * eps * sigma_max count as zero.
FittedModel fit_min_norm_ols(const Dataset& train);

/// argmin 1/2 sum (y - b0 - x'b)^2 + lambda |b|^2 with
/// lambda = lambda_rel * |X|_2^2. The intercept is unpenalized.
FittedModel fit_ridge(const Dataset& train, double lambda_rel, bool intercept);

/// Mean response of the K nearest training rows (Euclidean). Distance ties go
/// to the row that comes first in canonical (sorted) order.
FittedModel fit_knn(const Dataset& train, Index k);

FittedModel fit_constant_mean(const Dataset& train);

/// 0 on any training feature row (bitwise match), (1 + eps) * m elsewhere.
FittedModel fit_memorizer(const Dataset& train, double eps);

/// x = (a, b, c) -> tau * a * c * prod_j B_j over the training rows' second
/// feature. Requires d = 3 and B in {-1, +1}.
FittedModel fit_parity_adversary(const Dataset& train, double tau);

enum class RegressorKind { MinNormOls, Ridge, Knn, ConstantMean, Memorizer, Parity, Custom };

struct RegressorParams {
  double lambda_rel = 1e-3;
  bool intercept = true;
  Index k = 5;
  double memorizer_eps = 1.0;
  double tau = 1.0;
};

/// A symmetric, deterministic training algorithm. Built-ins are selected by
/// CLI token; custom algorithms plug in through a fit function.
class Regressor {
 public:
  using FitFn = std::function<FittedModel(const Dataset&)>;

  static Regressor min_norm_ols();
  static Regressor ridge(double lambda_rel, bool intercept);
  static Regressor knn(Index k);
  static Regressor constant_mean();
  static Regressor memorizer(double eps);
  static Regressor parity(double tau);
  static Regressor custom(std::string name, FitFn fit);

  /// token: ols | ridge | knn | mean | memorizer | parity
  static Regressor from_token(std::string_view token, const RegressorParams& params = {});

  FittedModel fit(const Dataset& train) const { return fit_(train); }
  RegressorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  Regressor(RegressorKind kind, std::string name, FitFn fit)
      : kind_(kind), name_(std::move(name)), fit_(std::move(fit)) {}

  RegressorKind kind_;
  std::string name_;
  FitFn fit_;
};

}  // namespace jkp
