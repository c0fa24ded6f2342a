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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "jkp/data.hpp"
#include "jkp/quantile.hpp"
#include "jkp/regress.hpp"

namespace jkp {

struct AsymmetricLevels {
  double alpha_lo;
  double alpha_hi;
};

/// Target miscoverage, optional asymmetric split of it, and additive
/// inflation of both endpoints.
struct IntervalSpec {
  double alpha = 0.1;
  std::optional<AsymmetricLevels> asymmetric;
  double inflation = 0.0;

  /// Throws std::invalid_argument unless alpha is in [0, 1], inflation >= 0,
  /// and asymmetric levels are positive and sum to alpha.
  void validate() const;
};

/// Closed interval [lower, upper] over the extended reals. lower > upper is
/// the empty interval and is kept as such.
struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;

  bool empty() const { return lower > upper; }
  /// 0 when empty, +inf when unbounded.
  double width() const { return empty() ? 0.0 : upper - lower; }
  bool contains(double y) const { return lower <= y && y <= upper; }
  /// Set inclusion; the empty interval is a subset of everything.
  bool subset_of(const PredictionInterval& other) const {
    return empty() || (other.lower <= lower && upper <= other.upper);
  }

  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;
};

/// Finite union of closed intervals, kept sorted, disjoint and maximal.
class PredictionSet {
 public:
  PredictionSet() = default;
  /// Drops empty parts, sorts, and merges overlapping or touching parts.
  static PredictionSet from_parts(std::vector<PredictionInterval> parts);

  const std::vector<PredictionInterval>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  bool contains(double y) const;
  /// Total length; +inf if any part is unbounded.
  double width() const;
  /// Smallest closed interval holding the set (empty interval if the set is).
  PredictionInterval hull() const;
  bool subset_of(const PredictionInterval& interval) const;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;

 private:
  std::vector<PredictionInterval> parts_;
};

inline bool contains(const PredictionInterval& interval, double y) { return interval.contains(y); }
inline bool contains(const PredictionSet& set, double y) { return set.contains(y); }

// ---------------------------------------------------------------------------
// Interval arithmetic shared by every method. With a symmetric spec the
// residuals are absolute; with an asymmetric spec they are signed (y - mu).

/// center +/- residual quantile.
PredictionInterval centered_interval(double center, std::span<const double> residuals, const IntervalSpec& spec);

/// Quantiles of center_i -/+ residual_i (jackknife+ / CV+ form).
PredictionInterval plus_interval(std::span<const double> centers, std::span<const double> residuals,
                                 const IntervalSpec& spec);

/// [min center - q, max center + q] (jackknife-minmax form).
PredictionInterval minmax_interval(std::span<const double> centers, std::span<const double> residuals,
                                   const IntervalSpec& spec);

// ---------------------------------------------------------------------------

struct FoldOptions {
  std::uint64_t seed = 0;
  /// Reject fold counts that do not divide n instead of warning.
  bool strict = false;
  /// Also fit the full-data model (needed by the jackknife).
  bool fit_full = true;
};

/// Leave-one-out (K = n) or leave-fold-out models with their held-out
/// residuals. Immutable after build.
class LooCache {
 public:
  static LooCache build(const Dataset& train, const Regressor& regressor, Index folds,
                        const FoldOptions& options = {});

  Index size() const { return static_cast<Index>(fold_of_.size()); }
  Index folds() const { return static_cast<Index>(fold_models_.size()); }
  bool leave_one_out() const { return folds() == size(); }

  Index fold_of(Index i) const { return fold_of_[static_cast<std::size_t>(i)]; }
  const FittedModel& fold_model(Index k) const { return fold_models_[static_cast<std::size_t>(k)]; }
  bool has_full_model() const { return full_model_.has_value(); }
  const FittedModel& full_model() const;

  /// |Y_i - mu_{-k(i)}(X_i)|
  const Eigen::VectorXd& residuals() const { return residuals_; }
  /// Y_i - mu_{-k(i)}(X_i)
  const Eigen::VectorXd& signed_residuals() const { return signed_residuals_; }
  /// Residuals in the form the spec asks for (absolute or signed).
  const Eigen::VectorXd& residuals_for(const IntervalSpec& spec) const {
    return spec.asymmetric ? signed_residuals_ : residuals_;
  }

  /// mu_{-k(i)}(x) for every training index i.
  Eigen::VectorXd held_out_predictions(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  /// Non-empty when folds had to be uneven.
  const std::string& warning() const { return warning_; }

 private:
  std::vector<Index> fold_of_;
  std::vector<FittedModel> fold_models_;
  std::optional<FittedModel> full_model_;
  Eigen::VectorXd residuals_;
  Eigen::VectorXd signed_residuals_;
  std::string warning_;
};

// ---------------------------------------------------------------------------

struct NaiveCalibration {
  FittedModel model;
  Eigen::VectorXd residuals;
  Eigen::VectorXd signed_residuals;
};
NaiveCalibration calibrate_naive(const Dataset& train, const Regressor& regressor);
PredictionInterval naive_interval(const NaiveCalibration& calibration, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x);
PredictionInterval naive_interval(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct SplitCalibration {
  FittedModel model;
  Split split;
  Eigen::VectorXd residuals;
  Eigen::VectorXd signed_residuals;
};
/// Fits on the train part, scores the holdout part. Throws on an empty holdout.
SplitCalibration calibrate_split(const Dataset& train, const Regressor& regressor, const SplitSpec& split);
PredictionInterval split_conformal(const SplitCalibration& calibration, const IntervalSpec& spec,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x);
PredictionInterval split_conformal(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                   const SplitSpec& split, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Full-data prediction +/- LOO residual quantile. Needs a K = n cache with
/// the full model.
PredictionInterval jackknife(const LooCache& cache, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x);
PredictionInterval jackknife(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x);

PredictionInterval jackknife_plus(const LooCache& cache, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x);
PredictionInterval jackknife_minmax(const LooCache& cache, const IntervalSpec& spec,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x);
/// K-fold CV+; identical to jackknife_plus on a K = n cache. K = 1 is rejected.
PredictionInterval cv_plus(const LooCache& cache, const IntervalSpec& spec,
                           const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Cross-conformal membership of a single y, evaluated directly from the
/// rank-count definition with randomization tau in [0, 1].
bool cross_conformal_contains(const LooCache& cache, const IntervalSpec& spec,
                              const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau, double y);

/// The cross-conformal set, found exactly by sweeping the breakpoints
/// center_i +/- R_i. Returned as the closure of the exact set: isolated
/// excluded breakpoints between two included cells are absorbed.
PredictionSet cross_conformal_set(const LooCache& cache, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau);

struct GridSpec {
  Index points = 200;
  /// Defaults to the training response range.
  std::optional<double> lower;
  std::optional<double> upper;
};

std::vector<double> grid_values(const GridSpec& grid, const Dataset& train);

/// Full conformal membership of one hypothesized response y.
bool full_conformal_contains(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x, double y);

/// Grid evaluation of full conformal; runs of included grid points become
/// closed intervals between their first and last grid values.
PredictionSet full_conformal_set(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& x, const GridSpec& grid = {});

// ---------------------------------------------------------------------------

enum class Method { Naive, Split, Jackknife, JackknifePlus, JackknifeMinmax, CvPlus, CrossConformal, FullConformal };

/// naive | split | jackknife | jackknife+ | jackknife-mm | cv+ | cross-conformal | full-conformal
Method parse_method(std::string_view token);
std::string_view method_token(Method method);

}  // namespace jkp
