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

#include "jkp/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jkp {

void IntervalSpec::validate() const {
  check_level(alpha);
  if (!(inflation >= 0.0)) throw std::invalid_argument("inflation must be >= 0");
  if (asymmetric) {
    const auto [lo, hi] = *asymmetric;
    if (!(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("asymmetric levels must be positive");
    if (std::abs(lo + hi - alpha) > 1e-12) throw std::invalid_argument("asymmetric levels must sum to alpha");
  }
}

PredictionSet PredictionSet::from_parts(std::vector<PredictionInterval> parts) {
  std::erase_if(parts, [](const PredictionInterval& p) { return p.empty(); });
  std::sort(parts.begin(), parts.end(), [](const PredictionInterval& a, const PredictionInterval& b) {
    return a.lower < b.lower || (a.lower == b.lower && a.upper < b.upper);
  });
  PredictionSet set;
  for (const auto& p : parts) {
    if (!set.parts_.empty() && p.lower <= set.parts_.back().upper) {
      set.parts_.back().upper = std::max(set.parts_.back().upper, p.upper);
    } else {
      set.parts_.push_back(p);
    }
  }
  return set;
}

bool PredictionSet::contains(double y) const {
  return std::any_of(parts_.begin(), parts_.end(), [y](const auto& p) { return p.contains(y); });
}

double PredictionSet::width() const {
  double total = 0.0;
  for (const auto& p : parts_) total += p.width();
  return total;
}

PredictionInterval PredictionSet::hull() const {
  if (parts_.empty()) return {kInf<double>, -kInf<double>};
  return {parts_.front().lower, parts_.back().upper};
}

bool PredictionSet::subset_of(const PredictionInterval& interval) const {
  return std::all_of(parts_.begin(), parts_.end(), [&](const auto& p) { return p.subset_of(interval); });
}

namespace {

std::vector<double> shifted(std::span<const double> centers, std::span<const double> residuals, double sign) {
  std::vector<double> out(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) out[i] = centers[i] + sign * residuals[i];
  return out;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_pair(std::span<const double> centers, std::span<const double> residuals) {
  if (centers.size() != residuals.size() || centers.empty()) {
    throw std::invalid_argument("centers and residuals must be non-empty and of equal length");
  }
}

}  // namespace

PredictionInterval centered_interval(double center, std::span<const double> residuals, const IntervalSpec& spec) {
  spec.validate();
  if (spec.asymmetric) {
    return {center + lower_quantile(residuals, spec.asymmetric->alpha_lo) - spec.inflation,
            center + upper_quantile(residuals, spec.asymmetric->alpha_hi) + spec.inflation};
  }
  const double half = upper_quantile(residuals, spec.alpha) + spec.inflation;
  return {center - half, center + half};
}

PredictionInterval plus_interval(std::span<const double> centers, std::span<const double> residuals,
                                 const IntervalSpec& spec) {
  spec.validate();
  check_pair(centers, residuals);
  if (spec.asymmetric) {
    const std::vector<double> values = shifted(centers, residuals, 1.0);
    return {lower_quantile<double>(values, spec.asymmetric->alpha_lo) - spec.inflation,
            upper_quantile<double>(values, spec.asymmetric->alpha_hi) + spec.inflation};
  }
  return {lower_quantile<double>(shifted(centers, residuals, -1.0), spec.alpha) - spec.inflation,
          upper_quantile<double>(shifted(centers, residuals, 1.0), spec.alpha) + spec.inflation};
}

PredictionInterval minmax_interval(std::span<const double> centers, std::span<const double> residuals,
                                   const IntervalSpec& spec) {
  spec.validate();
  check_pair(centers, residuals);
  const auto [lo, hi] = std::minmax_element(centers.begin(), centers.end());
  if (spec.asymmetric) {
    return {*lo + lower_quantile(residuals, spec.asymmetric->alpha_lo) - spec.inflation,
            *hi + upper_quantile(residuals, spec.asymmetric->alpha_hi) + spec.inflation};
  }
  const double q = upper_quantile(residuals, spec.alpha);
  return {*lo - q - spec.inflation, *hi + q + spec.inflation};
}

// ---------------------------------------------------------------------------

LooCache LooCache::build(const Dataset& train, const Regressor& regressor, Index folds, const FoldOptions& options) {
  const Index n = train.rows();
  if (folds < 1 || folds > n) {
    throw std::invalid_argument("fold count " + std::to_string(folds) + " must lie in [1, " + std::to_string(n) + "]");
  }
  LooCache cache;
  cache.fold_of_.resize(static_cast<std::size_t>(n));
  if (folds == n) {
    std::iota(cache.fold_of_.begin(), cache.fold_of_.end(), Index{0});
  } else {
    if (n % folds != 0) {
      if (options.strict) {
        throw std::invalid_argument("fold count " + std::to_string(folds) + " does not divide n = " + std::to_string(n));
      }
      cache.warning_ = "fold count " + std::to_string(folds) + " does not divide n = " + std::to_string(n) +
                       "; fold sizes differ by one";
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(options.seed, "folds");
    std::shuffle(order.begin(), order.end(), rng);
    for (Index p = 0; p < n; ++p) cache.fold_of_[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p % folds;
  }

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(folds));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(cache.fold_of(i))].push_back(i);
  cache.fold_models_.reserve(static_cast<std::size_t>(folds));
  for (const auto& held_out : members) cache.fold_models_.push_back(regressor.fit(train.without(held_out)));
  if (options.fit_full) cache.full_model_ = regressor.fit(train);

  cache.residuals_.resize(n);
  cache.signed_residuals_.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double r = train.y(i) - cache.fold_model(cache.fold_of(i))(train.x(i));
    cache.signed_residuals_(i) = r;
    cache.residuals_(i) = std::abs(r);
  }
  return cache;
}

const FittedModel& LooCache::full_model() const {
  if (!full_model_) throw std::logic_error("cache was built without the full-data model");
  return *full_model_;
}

Eigen::VectorXd LooCache::held_out_predictions(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd per_fold(folds());
  for (Index k = 0; k < folds(); ++k) per_fold(k) = fold_model(k)(x);
  Eigen::VectorXd out(size());
  for (Index i = 0; i < size(); ++i) out(i) = per_fold(fold_of(i));
  return out;
}

// ---------------------------------------------------------------------------

NaiveCalibration calibrate_naive(const Dataset& train, const Regressor& regressor) {
  if (train.empty()) throw std::invalid_argument("naive interval needs training data");
  NaiveCalibration c{regressor.fit(train), {}, {}};
  c.signed_residuals = train.responses() - c.model.predict(train.features());
  c.residuals = c.signed_residuals.cwiseAbs();
  return c;
}

PredictionInterval naive_interval(const NaiveCalibration& calibration, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto& r = spec.asymmetric ? calibration.signed_residuals : calibration.residuals;
  return centered_interval(calibration.model(x), as_span(r), spec);
}

PredictionInterval naive_interval(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return naive_interval(calibrate_naive(train, regressor), spec, x);
}

SplitCalibration calibrate_split(const Dataset& train, const Regressor& regressor, const SplitSpec& split) {
  SplitCalibration c;
  c.split = resolve_split(split, train.rows());
  if (c.split.holdout.empty()) throw std::invalid_argument("split conformal needs a non-empty holdout set");
  c.model = regressor.fit(train.subset(c.split.train));
  const Dataset holdout = train.subset(c.split.holdout);
  c.signed_residuals = holdout.responses() - c.model.predict(holdout.features());
  c.residuals = c.signed_residuals.cwiseAbs();
  return c;
}

PredictionInterval split_conformal(const SplitCalibration& calibration, const IntervalSpec& spec,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto& r = spec.asymmetric ? calibration.signed_residuals : calibration.residuals;
  return centered_interval(calibration.model(x), as_span(r), spec);
}

PredictionInterval split_conformal(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                   const SplitSpec& split, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return split_conformal(calibrate_split(train, regressor, split), spec, x);
}

namespace {

void require_loo(const LooCache& cache, const char* method) {
  if (!cache.leave_one_out()) throw std::invalid_argument(std::string(method) + " needs a leave-one-out cache (K = n)");
}

}  // namespace

PredictionInterval jackknife(const LooCache& cache, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require_loo(cache, "jackknife");
  return centered_interval(cache.full_model()(x), as_span(cache.residuals_for(spec)), spec);
}

PredictionInterval jackknife(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (train.rows() < 2) throw std::invalid_argument("jackknife needs n >= 2");
  return jackknife(LooCache::build(train, regressor, train.rows()), spec, x);
}

PredictionInterval jackknife_plus(const LooCache& cache, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require_loo(cache, "jackknife+");
  return cv_plus(cache, spec, x);
}

PredictionInterval jackknife_minmax(const LooCache& cache, const IntervalSpec& spec,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require_loo(cache, "jackknife-minmax");
  const Eigen::VectorXd centers = cache.held_out_predictions(x);
  return minmax_interval(as_span(centers), as_span(cache.residuals_for(spec)), spec);
}

PredictionInterval cv_plus(const LooCache& cache, const IntervalSpec& spec,
                           const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (cache.folds() < 2) throw std::invalid_argument("CV+ needs at least 2 folds");
  const Eigen::VectorXd centers = cache.held_out_predictions(x);
  return plus_interval(as_span(centers), as_span(cache.residuals_for(spec)), spec);
}

// ---------------------------------------------------------------------------

namespace {

struct Breakpoints {
  std::vector<double> lo;
  std::vector<double> hi;
};

Breakpoints cross_breakpoints(const LooCache& cache, const IntervalSpec& spec,
                              const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  spec.validate();
  if (spec.asymmetric || spec.inflation != 0.0) {
    throw std::invalid_argument("cross-conformal supports only the symmetric, uninflated form");
  }
  if (cache.folds() < 2) throw std::invalid_argument("cross-conformal needs at least 2 folds");
  const Eigen::VectorXd centers = cache.held_out_predictions(x);
  Breakpoints b;
  b.lo.resize(static_cast<std::size_t>(cache.size()));
  b.hi.resize(b.lo.size());
  for (Index i = 0; i < cache.size(); ++i) {
    b.lo[static_cast<std::size_t>(i)] = centers(i) - cache.residuals()(i);
    b.hi[static_cast<std::size_t>(i)] = centers(i) + cache.residuals()(i);
  }
  return b;
}

// (tau + strict + tau * tie) / (n + 1) > alpha, compared as counts.
bool rank_count_passes(double tau, Index strict, Index tie, double threshold) {
  return tau + static_cast<double>(strict) + tau * static_cast<double>(tie) > threshold;
}

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
}

}  // namespace

bool cross_conformal_contains(const LooCache& cache, const IntervalSpec& spec,
                              const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau, double y) {
  check_tau(tau);
  const Breakpoints b = cross_breakpoints(cache, spec, x);
  Index strict = 0, tie = 0;
  for (std::size_t i = 0; i < b.lo.size(); ++i) {
    if (b.lo[i] < y && y < b.hi[i]) ++strict;
    else if (y == b.lo[i] || y == b.hi[i]) ++tie;
  }
  return rank_count_passes(tau, strict, tie, scaled_level(spec.alpha, cache.size() + 1));
}

PredictionSet cross_conformal_set(const LooCache& cache, const IntervalSpec& spec,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau) {
  check_tau(tau);
  const Breakpoints b = cross_breakpoints(cache, spec, x);
  const double threshold = scaled_level(spec.alpha, cache.size() + 1);
  const std::size_t n = b.lo.size();

  std::vector<double> points;
  points.reserve(2 * n);
  points.insert(points.end(), b.lo.begin(), b.lo.end());
  points.insert(points.end(), b.hi.begin(), b.hi.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  // Counts are constant on each open cell between consecutive breakpoints,
  // so every cell and every breakpoint is decided by one evaluation.
  std::vector<PredictionInterval> parts;
  const double inf = kInf<double>;
  if (rank_count_passes(tau, 0, 0, threshold)) {
    parts.push_back({-inf, points.front()});
    parts.push_back({points.back(), inf});
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double p = points[k];
    Index strict = 0, tie = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (b.lo[i] < p && p < b.hi[i]) ++strict;
      else if (p == b.lo[i] || p == b.hi[i]) ++tie;
    }
    if (rank_count_passes(tau, strict, tie, threshold)) parts.push_back({p, p});
    if (k + 1 < points.size()) {
      const double q = points[k + 1];
      Index inside = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (b.lo[i] <= p && q <= b.hi[i]) ++inside;
      }
      if (rank_count_passes(tau, inside, 0, threshold)) parts.push_back({p, q});
    }
  }
  return PredictionSet::from_parts(std::move(parts));
}

std::vector<double> grid_values(const GridSpec& grid, const Dataset& train) {
  if (grid.points < 2) throw std::invalid_argument("full conformal grid needs at least 2 points");
  if (train.empty() && (!grid.lower || !grid.upper)) throw std::invalid_argument("grid range needs training data");
  const double lo = grid.lower ? *grid.lower : train.responses().minCoeff();
  const double hi = grid.upper ? *grid.upper : train.responses().maxCoeff();
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("invalid grid range");
  std::vector<double> values(static_cast<std::size_t>(grid.points));
  const double step = (hi - lo) / static_cast<double>(grid.points - 1);
  for (Index g = 0; g < grid.points; ++g) values[static_cast<std::size_t>(g)] = lo + step * static_cast<double>(g);
  values.back() = hi;
  return values;
}

bool full_conformal_contains(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) {
  spec.validate();
  if (spec.asymmetric || spec.inflation != 0.0) {
    throw std::invalid_argument("full conformal supports only the symmetric, uninflated form");
  }
  if (train.empty()) throw std::invalid_argument("full conformal needs training data");
  const FittedModel model = regressor.fit(train.with_row(x, y));
  const Eigen::VectorXd residuals = (train.responses() - model.predict(train.features())).cwiseAbs();
  return std::abs(y - model(x)) <= upper_quantile(residuals, spec.alpha);
}

PredictionSet full_conformal_set(const Dataset& train, const Regressor& regressor, const IntervalSpec& spec,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& x, const GridSpec& grid) {
  const std::vector<double> values = grid_values(grid, train);
  std::vector<PredictionInterval> parts;
  bool in_run = false;
  double run_start = 0.0;
  double run_end = 0.0;
  for (double y : values) {
    if (full_conformal_contains(train, regressor, spec, x, y)) {
      if (!in_run) run_start = y;
      in_run = true;
      run_end = y;
    } else if (in_run) {
      parts.push_back({run_start, run_end});
      in_run = false;
    }
  }
  if (in_run) parts.push_back({run_start, run_end});
  return PredictionSet::from_parts(std::move(parts));
}

// ---------------------------------------------------------------------------

Method parse_method(std::string_view token) {
  if (token == "naive") return Method::Naive;
  if (token == "split") return Method::Split;
  if (token == "jackknife") return Method::Jackknife;
  if (token == "jackknife+") return Method::JackknifePlus;
  if (token == "jackknife-mm") return Method::JackknifeMinmax;
  if (token == "cv+") return Method::CvPlus;
  if (token == "cross-conformal") return Method::CrossConformal;
  if (token == "full-conformal") return Method::FullConformal;
  throw std::invalid_argument("unknown method '" + std::string(token) +
                              "' (expected naive | split | jackknife | jackknife+ | jackknife-mm | cv+ | "
                              "cross-conformal | full-conformal)");
}

std::string_view method_token(Method method) {
  switch (method) {
    case Method::Naive: return "naive";
    case Method::Split: return "split";
    case Method::Jackknife: return "jackknife";
    case Method::JackknifePlus: return "jackknife+";
    case Method::JackknifeMinmax: return "jackknife-mm";
    case Method::CvPlus: return "cv+";
    case Method::CrossConformal: return "cross-conformal";
    case Method::FullConformal: return "full-conformal";
  }
  return "?";
}

}  // namespace jkp
