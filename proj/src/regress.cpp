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

#include "jkp/regress.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

namespace jkp {

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& rows) const {
  Eigen::VectorXd out(rows.rows());
  for (Index i = 0; i < rows.rows(); ++i) out(i) = model_->predict(rows.row(i));
  return out;
}

namespace {

class ConstantModel final : public Model {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>&) const override { return value_; }

 private:
  double value_;
};

class KnnModel final : public Model {
 public:
  KnnModel(Eigen::MatrixXd features, Eigen::VectorXd responses, Index k)
      : features_(std::move(features)), responses_(std::move(responses)), k_(k) {}

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
    const Index n = features_.rows();
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {(features_.row(i) - x).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
    double sum = 0.0;
    for (Index r = 0; r < k_; ++r) sum += responses_(dist[static_cast<std::size_t>(r)].second);
    return sum / static_cast<double>(k_);
  }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd responses_;
  Index k_;
};

class MemorizerModel final : public Model {
 public:
  MemorizerModel(Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows, double far_value)
      : rows_(std::move(rows)), far_value_(far_value) {}

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
    for (Index i = 0; i < rows_.rows(); ++i) {
      bool same = true;
      for (Index j = 0; j < rows_.cols() && same; ++j) {
        same = std::bit_cast<std::uint64_t>(rows_(i, j)) == std::bit_cast<std::uint64_t>(x(j));
      }
      if (same) return 0.0;
    }
    return far_value_;
  }

 private:
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows_;
  double far_value_;
};

class ParityModel final : public Model {
 public:
  explicit ParityModel(double scale) : scale_(scale) {}
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
    return scale_ * x(0) * x(2);
  }

 private:
  double scale_;
};

// Rank cutoff for the pseudoinverse, relative to sigma_max.
double pinv_threshold(const Eigen::MatrixXd& x) {
  return static_cast<double>(std::max(x.rows(), x.cols())) * std::numeric_limits<double>::epsilon();
}

// V diag(s / (s^2 + 2 lambda)) U' y, dropping singular values under the
// pseudoinverse cutoff when lambda = 0.
Eigen::VectorXd shrunk_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? pinv_threshold(x) * s(0) : 0.0;
  Eigen::VectorXd gain(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (lambda == 0.0) {
      gain(i) = (s(i) > cutoff && s(i) > 0.0) ? 1.0 / s(i) : 0.0;
    } else {
      gain(i) = s(i) / (s(i) * s(i) + 2.0 * lambda);
    }
  }
  return svd.matrixV() * (gain.asDiagonal() * (svd.matrixU().transpose() * y));
}

}  // namespace

FittedModel zero_model() {
  return FittedModel(std::make_shared<ConstantModel>(0.0), 0);
}

FittedModel fit_min_norm_ols(const Dataset& train) {
  if (train.dims() < 1 && !train.empty()) throw std::invalid_argument("ols needs d >= 1");
  if (train.empty()) return zero_model();
  const Dataset data = train.canonical();
  Eigen::VectorXd beta = shrunk_solve(data.features(), data.responses(), 0.0);
  return FittedModel(std::make_shared<LinearModel>(std::move(beta)), train.rows());
}

FittedModel fit_ridge(const Dataset& train, double lambda_rel, bool intercept) {
  if (!(lambda_rel >= 0.0) || !std::isfinite(lambda_rel)) {
    throw std::invalid_argument("ridge lambda must be finite and >= 0");
  }
  if (train.empty()) return zero_model();
  const Dataset data = train.canonical();
  const Eigen::MatrixXd& x = data.features();
  const Eigen::VectorXd& y = data.responses();
  double spectral = 0.0;
  if (x.size() > 0) spectral = Eigen::BDCSVD<Eigen::MatrixXd>(x).singularValues()(0);
  const double lambda = lambda_rel * spectral * spectral;
  if (!intercept) {
    return FittedModel(std::make_shared<LinearModel>(shrunk_solve(x, y, lambda)), train.rows());
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::VectorXd beta = shrunk_solve(xc, yc, lambda);
  const double b0 = y_mean - x_mean.dot(beta);
  return FittedModel(std::make_shared<LinearModel>(std::move(beta), b0), train.rows());
}

FittedModel fit_knn(const Dataset& train, Index k) {
  if (k < 1) throw std::invalid_argument("knn needs K >= 1");
  if (k > train.rows()) {
    throw std::invalid_argument("knn K = " + std::to_string(k) + " exceeds training size " +
                                std::to_string(train.rows()));
  }
  Dataset data = train.canonical();
  return FittedModel(std::make_shared<KnnModel>(data.features(), data.responses(), k), train.rows());
}

FittedModel fit_constant_mean(const Dataset& train) {
  if (train.empty()) return zero_model();
  std::vector<double> y(train.responses().begin(), train.responses().end());
  std::sort(y.begin(), y.end());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  return FittedModel(std::make_shared<ConstantModel>(mean), train.rows());
}

FittedModel fit_memorizer(const Dataset& train, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("memorizer eps must be > 0");
  const double far = (1.0 + eps) * static_cast<double>(train.rows());
  return FittedModel(std::make_shared<MemorizerModel>(train.features(), far), train.rows());
}

FittedModel fit_parity_adversary(const Dataset& train, double tau) {
  if (train.dims() != 3) throw std::invalid_argument("parity adversary needs d = 3");
  double product = 1.0;
  for (Index i = 0; i < train.rows(); ++i) {
    const double b = train.features()(i, 1);
    if (b != 1.0 && b != -1.0) {
      throw std::invalid_argument("parity adversary needs B in {-1, +1} (row " + std::to_string(i) + ")");
    }
    product *= b;
  }
  return FittedModel(std::make_shared<ParityModel>(tau * product), train.rows());
}

Regressor Regressor::min_norm_ols() {
  return Regressor(RegressorKind::MinNormOls, "ols", [](const Dataset& d) { return fit_min_norm_ols(d); });
}

Regressor Regressor::ridge(double lambda_rel, bool intercept) {
  if (!(lambda_rel >= 0.0)) throw std::invalid_argument("ridge lambda must be >= 0");
  return Regressor(RegressorKind::Ridge, "ridge",
                   [=](const Dataset& d) { return fit_ridge(d, lambda_rel, intercept); });
}

Regressor Regressor::knn(Index k) {
  if (k < 1) throw std::invalid_argument("knn needs K >= 1");
  return Regressor(RegressorKind::Knn, "knn", [=](const Dataset& d) { return fit_knn(d, k); });
}

Regressor Regressor::constant_mean() {
  return Regressor(RegressorKind::ConstantMean, "mean", [](const Dataset& d) { return fit_constant_mean(d); });
}

Regressor Regressor::memorizer(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("memorizer eps must be > 0");
  return Regressor(RegressorKind::Memorizer, "memorizer", [=](const Dataset& d) { return fit_memorizer(d, eps); });
}

Regressor Regressor::parity(double tau) {
  return Regressor(RegressorKind::Parity, "parity", [=](const Dataset& d) { return fit_parity_adversary(d, tau); });
}

Regressor Regressor::custom(std::string name, FitFn fit) {
  return Regressor(RegressorKind::Custom, std::move(name), std::move(fit));
}

Regressor Regressor::from_token(std::string_view token, const RegressorParams& params) {
  if (token == "ols") return min_norm_ols();
  if (token == "ridge") return ridge(params.lambda_rel, params.intercept);
  if (token == "knn") return knn(params.k);
  if (token == "mean") return constant_mean();
  if (token == "memorizer") return memorizer(params.memorizer_eps);
  if (token == "parity") return parity(params.tau);
  throw std::invalid_argument("unknown regressor '" + std::string(token) +
                              "' (expected ols | ridge | knn | mean | memorizer | parity)");
}

}  // namespace jkp
