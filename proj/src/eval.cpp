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

#include "jkp/eval.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "jkp/random.hpp"

namespace jkp {

namespace {

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? std::nan("") : sum / static_cast<double>(values.size());
}

double se_of(const std::vector<double>& values) {
  const auto count = values.size();
  if (count < 2) return 0.0;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(count - 1)) / std::sqrt(static_cast<double>(count));
}

std::vector<double> finite_only(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  return out;
}

// Runs trials in parallel; each fills its own slot so the merge order is
// the trial order regardless of scheduling.
std::vector<CoverageReport> merge_trials(const std::vector<std::vector<TrialOutcome>>& outcomes,
                                         const std::vector<double>& alphas) {
  std::vector<CoverageReport> reports(alphas.size());
  for (std::size_t m = 0; m < alphas.size(); ++m) reports[m].alpha = alphas[m];
  for (const auto& trial : outcomes) {
    for (std::size_t m = 0; m < trial.size(); ++m) {
      reports[m].method = trial[m].method;
      reports[m].coverage.push_back(trial[m].coverage);
      reports[m].width.push_back(trial[m].mean_width);
      reports[m].infinite.push_back(trial[m].infinite);
    }
  }
  return reports;
}

}  // namespace

std::string MethodConfig::label() const {
  std::string out(method_token(method));
  if (method == Method::CvPlus || method == Method::CrossConformal) {
    out += "(K=" + (folds == 0 ? std::string("n") : std::to_string(folds)) + ")";
  }
  return out;
}

std::vector<std::vector<Prediction>> predict_all(const Dataset& train, const Eigen::MatrixXd& test_features,
                                                 const Regressor& regressor, const std::vector<MethodConfig>& methods,
                                                 std::uint64_t seed, std::vector<std::string>* warnings) {
  if (test_features.cols() != train.dims()) {
    throw std::invalid_argument("test rows have " + std::to_string(test_features.cols()) +
                                " features, training rows have " + std::to_string(train.dims()));
  }
  const Index n = train.rows();
  const Index n_test = test_features.rows();

  std::map<Index, LooCache> caches;
  std::optional<NaiveCalibration> naive;
  auto cache_for = [&](Index folds) -> const LooCache& {
    const Index k = folds == 0 ? n : folds;
    auto it = caches.find(k);
    if (it == caches.end()) {
      FoldOptions options;
      options.seed = derive_seed(seed, "folds", static_cast<std::uint64_t>(k));
      options.fit_full = k == n;
      it = caches.emplace(k, LooCache::build(train, regressor, k, options)).first;
      if (warnings && !it->second.warning().empty()) warnings->push_back(it->second.warning());
    }
    return it->second;
  };

  std::vector<std::vector<Prediction>> out(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const MethodConfig& config = methods[m];
    config.spec.validate();
    auto& row = out[m];
    row.resize(static_cast<std::size_t>(n_test));
    auto each = [&](auto&& fn) {
      for (Index t = 0; t < n_test; ++t) row[static_cast<std::size_t>(t)] = fn(test_features.row(t), t);
    };
    switch (config.method) {
      case Method::Naive: {
        if (!naive) naive = calibrate_naive(train, regressor);
        each([&](const auto& x, Index) { return Prediction{naive_interval(*naive, config.spec, x), {}}; });
        break;
      }
      case Method::Split: {
        SplitSpec split = config.split;
        split.seed = derive_seed(seed, "split", config.split.seed);
        const SplitCalibration calibration = calibrate_split(train, regressor, split);
        each([&](const auto& x, Index) { return Prediction{split_conformal(calibration, config.spec, x), {}}; });
        break;
      }
      case Method::Jackknife: {
        const LooCache& cache = cache_for(n);
        each([&](const auto& x, Index) { return Prediction{jackknife(cache, config.spec, x), {}}; });
        break;
      }
      case Method::JackknifePlus: {
        const LooCache& cache = cache_for(n);
        each([&](const auto& x, Index) { return Prediction{jackknife_plus(cache, config.spec, x), {}}; });
        break;
      }
      case Method::JackknifeMinmax: {
        const LooCache& cache = cache_for(n);
        each([&](const auto& x, Index) { return Prediction{jackknife_minmax(cache, config.spec, x), {}}; });
        break;
      }
      case Method::CvPlus: {
        const LooCache& cache = cache_for(config.folds);
        each([&](const auto& x, Index) { return Prediction{cv_plus(cache, config.spec, x), {}}; });
        break;
      }
      case Method::CrossConformal: {
        const LooCache& cache = cache_for(config.folds);
        Rng rng = make_rng(seed, "cross-conformal/tau", m);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        each([&](const auto& x, Index) {
          PredictionSet set = cross_conformal_set(cache, config.spec, x, unit(rng));
          return Prediction{set.hull(), set};
        });
        break;
      }
      case Method::FullConformal: {
        each([&](const auto& x, Index) {
          PredictionSet set = full_conformal_set(train, regressor, config.spec, x, config.grid);
          return Prediction{set.hull(), set};
        });
        break;
      }
    }
  }
  return out;
}

std::vector<TrialOutcome> run_trial(const Dataset& train, const Dataset& test, const Regressor& regressor,
                                    const std::vector<MethodConfig>& methods, std::uint64_t seed) {
  if (test.rows() == 0) throw std::invalid_argument("run_trial needs at least one test row");
  const auto predictions = predict_all(train, test.features(), regressor, methods, seed);
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    TrialOutcome outcome;
    outcome.method = methods[m].label();
    Index covered = 0;
    double width_sum = 0.0;
    for (Index t = 0; t < test.rows(); ++t) {
      const Prediction& p = predictions[m][static_cast<std::size_t>(t)];
      if (p.contains(test.y(t))) ++covered;
      const double w = p.width();
      if (std::isfinite(w)) {
        width_sum += w;
      } else {
        ++outcome.infinite;
      }
    }
    const Index finite = test.rows() - outcome.infinite;
    outcome.coverage = static_cast<double>(covered) / static_cast<double>(test.rows());
    outcome.mean_width = finite > 0 ? width_sum / static_cast<double>(finite) : std::nan("");
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

double CoverageReport::coverage_mean() const { return mean_of(coverage); }
double CoverageReport::coverage_se() const { return se_of(coverage); }
double CoverageReport::width_mean() const { return mean_of(finite_only(width)); }
double CoverageReport::width_se() const { return se_of(finite_only(width)); }

Index CoverageReport::infinite_count() const {
  Index total = 0;
  for (Index c : infinite) total += c;
  return total;
}

CoverageReport aggregate(const std::vector<CoverageReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate needs at least one report");
  CoverageReport pooled;
  pooled.method = reports.front().method;
  pooled.alpha = reports.front().alpha;
  for (const auto& r : reports) {
    if (r.method != pooled.method) {
      throw std::invalid_argument("cannot aggregate method '" + r.method + "' with '" + pooled.method + "'");
    }
    if (r.alpha != pooled.alpha) {
      throw std::invalid_argument("cannot aggregate alpha " + format_number(r.alpha) + " with " +
                                  format_number(pooled.alpha));
    }
    if (r.width.size() != r.coverage.size() || r.infinite.size() != r.coverage.size()) {
      throw std::invalid_argument("report '" + r.method + "' has ragged per-trial rows");
    }
    pooled.coverage.insert(pooled.coverage.end(), r.coverage.begin(), r.coverage.end());
    pooled.width.insert(pooled.width.end(), r.width.begin(), r.width.end());
    pooled.infinite.insert(pooled.infinite.end(), r.infinite.begin(), r.infinite.end());
  }
  return pooled;
}

void write_report_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "d,method,alpha,trials,coverage_mean,coverage_se,width_mean,width_se,infinite_count\n";
  for (const auto& row : rows) {
    const CoverageReport& r = row.report;
    out << row.d << ',' << r.method << ',' << format_number(r.alpha) << ',' << r.trials() << ','
        << format_number(r.coverage_mean()) << ',' << format_number(r.coverage_se()) << ','
        << format_number(r.width_mean()) << ',' << format_number(r.width_se()) << ',' << r.infinite_count()
        << '\n';
  }
}

std::vector<CoverageReport> gaussian_coverage(const GaussianCoverageConfig& config, const Regressor& regressor) {
  if (config.n < 2 || config.d < 1 || config.trials < 1 || config.n_test < 1) {
    throw std::invalid_argument("gaussian coverage needs n >= 2, d >= 1, trials >= 1, n_test >= 1");
  }
  if (config.methods.empty()) throw std::invalid_argument("no methods requested");
  std::vector<double> alphas;
  for (const auto& m : config.methods) {
    m.spec.validate();
    alphas.push_back(m.spec.alpha);
  }

  std::vector<std::vector<TrialOutcome>> outcomes(static_cast<std::size_t>(config.trials));
  parallel_for(outcomes.size(), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, "gaussian-trial", t);
    Rng rng = make_rng(trial_seed, "draw");
    const Eigen::VectorXd beta = draw_beta(config.d, rng);
    const Dataset train = draw_gaussian_linear(config.n, beta, rng);
    const Dataset test = draw_gaussian_linear(config.n_test, beta, rng);
    outcomes[t] = run_trial(train, test, regressor, config.methods, derive_seed(trial_seed, "methods"));
  });
  return merge_trials(outcomes, alphas);
}

std::vector<MethodConfig> figure2_methods(double alpha, bool full_conformal, Index grid_points) {
  std::vector<MethodConfig> methods;
  auto add = [&](Method method, Index folds = 0) {
    MethodConfig m;
    m.method = method;
    m.spec.alpha = alpha;
    m.folds = folds;
    m.grid.points = grid_points;
    methods.push_back(m);
  };
  add(Method::Naive);
  add(Method::Jackknife);
  add(Method::JackknifePlus);
  add(Method::JackknifeMinmax);
  add(Method::CvPlus, 10);
  add(Method::Split);
  if (full_conformal) add(Method::FullConformal);
  return methods;
}

std::vector<ExperimentRow> figure2_experiment(const Figure2Config& config) {
  if (config.d_list.empty()) throw std::invalid_argument("figure2 needs a non-empty d list");
  for (Index d : config.d_list) {
    if (d < 1) throw std::invalid_argument("figure2 dimensions must be positive");
  }
  const Regressor ols = Regressor::min_norm_ols();
  std::vector<ExperimentRow> rows;
  for (Index d : config.d_list) {
    GaussianCoverageConfig run;
    run.n = config.n;
    run.d = d;
    run.trials = config.trials;
    run.n_test = config.n_test;
    run.methods = figure2_methods(config.alpha, config.full_conformal, config.grid_points);
    run.seed = derive_seed(config.seed, "figure2", static_cast<std::uint64_t>(d));
    for (auto& report : gaussian_coverage(run, ols)) rows.push_back({d, std::move(report)});
  }
  return rows;
}

std::vector<MethodConfig> coverage_mc_methods(double alpha, const std::vector<Index>& folds) {
  std::vector<MethodConfig> methods;
  for (Method method : {Method::JackknifePlus, Method::JackknifeMinmax, Method::Split}) {
    MethodConfig m;
    m.method = method;
    m.spec.alpha = alpha;
    methods.push_back(m);
  }
  for (Index k : folds) {
    MethodConfig m;
    m.method = Method::CvPlus;
    m.spec.alpha = alpha;
    m.folds = k;
    methods.push_back(m);
  }
  return methods;
}

std::vector<CoverageReport> memorizer_pathology(const MemorizerConfig& config) {
  if (config.n < 2 || config.trials < 1 || config.n_test < 1) {
    throw std::invalid_argument("memorizer pathology needs n >= 2, trials >= 1, n_test >= 1");
  }
  if (!(config.alpha >= 1.0 / static_cast<double>(config.n + 1)) || config.alpha >= 1.0) {
    throw std::invalid_argument("memorizer pathology needs 1/(n+1) <= alpha < 1, otherwise every interval is "
                                "the whole line");
  }
  const Regressor reg = Regressor::memorizer(config.eps);
  std::vector<MethodConfig> methods;
  for (Method method : {Method::Naive, Method::Jackknife, Method::JackknifePlus}) {
    MethodConfig m;
    m.method = method;
    m.spec.alpha = config.alpha;
    methods.push_back(m);
  }
  auto draw = [](Index rows, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(rows, 1);
    for (Index i = 0; i < rows; ++i) x(i, 0) = normal(rng);
    return Dataset(std::move(x), Eigen::VectorXd::Zero(rows));
  };

  std::vector<std::vector<TrialOutcome>> outcomes(static_cast<std::size_t>(config.trials));
  parallel_for(outcomes.size(), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, "memorizer-trial", t);
    Rng rng = make_rng(trial_seed, "draw");
    const Dataset train = draw(config.n, rng);
    const Dataset test = draw(config.n_test, rng);
    outcomes[t] = run_trial(train, test, reg, methods, derive_seed(trial_seed, "methods"));
  });
  return merge_trials(outcomes, std::vector<double>(methods.size(), config.alpha));
}

double parity_gamma(Index n, double alpha) {
  const double nn = static_cast<double>(n);
  return 2.15 / alpha * std::sqrt(std::log(nn) / nn);
}

double parity_coverage_ceiling(Index n, double alpha) {
  const double nn = static_cast<double>(n);
  return 1.0 - 2.0 * alpha + 6.0 * std::sqrt(std::log(nn) / nn);
}

void validate_parity(const ParityConfig& config) {
  if (config.n < 2 || config.trials < 1 || config.n_test < 1) {
    throw std::invalid_argument("parity pathology needs n >= 2, trials >= 1, n_test >= 1");
  }
  if (!(config.alpha > 0.0 && config.alpha <= 0.5)) throw std::invalid_argument("parity pathology needs 0 < alpha <= 1/2");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("parity pathology needs epsilon > 0");
  const double ceiling = parity_coverage_ceiling(config.n, config.alpha);
  if (ceiling >= 1.0 - config.alpha) {
    throw std::invalid_argument("parity pathology is vacuous at n = " + std::to_string(config.n) +
                                ", alpha = " + format_number(config.alpha) + ": the coverage ceiling " +
                                format_number(ceiling) + " is not below 1 - alpha; increase n");
  }
  const double gamma = parity_gamma(config.n, config.alpha);
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("parity pathology needs gamma in (0, 1), got " + format_number(gamma));
  }
}

Eigen::VectorXd ParityLoo::centers(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return (tau * x(0) * x(2)) * sign_without;
}

ParityLoo parity_loo(const Dataset& train, double tau) {
  if (train.dims() != 3) throw std::invalid_argument("parity rows need three features (A, B, C)");
  const Index n = train.rows();
  double total = 1.0;
  for (Index i = 0; i < n; ++i) {
    const double b = train.features()(i, 1);
    if (b != 1.0 && b != -1.0) {
      throw std::invalid_argument("parity rows need B in {-1, +1} (row " + std::to_string(i) + ")");
    }
    total *= b;
  }
  ParityLoo loo;
  loo.tau = tau;
  loo.sign_without = total * train.features().col(1);
  loo.residuals.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double center = tau * train.features()(i, 0) * train.features()(i, 2) * loo.sign_without(i);
    loo.residuals(i) = std::abs(train.y(i) - center);
  }
  return loo;
}

CoverageReport parity_pathology(const ParityConfig& config) {
  validate_parity(config);
  const double gamma = parity_gamma(config.n, config.alpha);
  const double tau = config.epsilon * static_cast<double>(config.n);
  IntervalSpec spec;
  spec.alpha = config.alpha;
  spec.inflation = config.epsilon;

  std::vector<std::vector<TrialOutcome>> outcomes(static_cast<std::size_t>(config.trials));
  parallel_for(outcomes.size(), [&](std::size_t t) {
    Rng rng = make_rng(derive_seed(config.seed, "parity-trial", t), "draw");
    const Dataset train = attach_tau(draw_pathological_abc(config.n, config.alpha, gamma, rng), tau);
    const Dataset test = attach_tau(draw_pathological_abc(config.n_test, config.alpha, gamma, rng), tau);
    const ParityLoo loo = parity_loo(train, tau);
    const std::span<const double> residuals(loo.residuals.data(), static_cast<std::size_t>(loo.residuals.size()));

    TrialOutcome outcome;
    outcome.method = "jackknife+";
    Index covered = 0;
    double width_sum = 0.0;
    for (Index j = 0; j < test.rows(); ++j) {
      const Eigen::VectorXd centers = loo.centers(test.x(j));
      const PredictionInterval interval =
          plus_interval(std::span<const double>(centers.data(), static_cast<std::size_t>(centers.size())),
                        residuals, spec);
      if (interval.contains(test.y(j))) ++covered;
      if (std::isfinite(interval.width())) {
        width_sum += interval.width();
      } else {
        ++outcome.infinite;
      }
    }
    const Index finite = test.rows() - outcome.infinite;
    outcome.coverage = static_cast<double>(covered) / static_cast<double>(test.rows());
    outcome.mean_width = finite > 0 ? width_sum / static_cast<double>(finite) : std::nan("");
    outcomes[t] = {outcome};
  });
  return merge_trials(outcomes, {config.alpha}).front();
}

}  // namespace jkp
