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

#include "jkp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "jkp/data.hpp"
#include "jkp/eval.hpp"
#include "jkp/intervals.hpp"
#include "jkp/oracle.hpp"
#include "jkp/random.hpp"
#include "jkp/stability.hpp"

namespace jkp::cli {

namespace {

using Echo = std::vector<std::pair<std::string, std::string>>;

constexpr const char* kMethodTokens =
    "naive | split | jackknife | jackknife+ | jackknife-mm | cv+ | cross-conformal | full-conformal";
constexpr const char* kRegressorTokens = "ols | ridge | knn | mean | memorizer | parity";
constexpr const char* kExperimentTokens = "figure2 | pathology-memorizer | pathology-parity | coverage-mc";

std::string join_indices(const std::vector<Index>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

void echo_regressor(Echo& echo, const RegressorOptions& r) {
  echo.emplace_back("regressor", r.token);
  if (r.token == "ridge") {
    echo.emplace_back("lambda", format_number(r.lambda_rel));
    echo.emplace_back("intercept", r.intercept ? "true" : "false");
  } else if (r.token == "knn") {
    echo.emplace_back("k", std::to_string(r.k));
  } else if (r.token == "memorizer") {
    echo.emplace_back("memorizer_eps", format_number(r.memorizer_eps));
  } else if (r.token == "parity") {
    echo.emplace_back("tau", format_number(r.tau));
  }
}

void write_echo(std::ostream& out, const std::string& command, const Echo& echo) {
  out << "# jkp " << command << '\n';
  for (const auto& [key, value] : echo) out << "# " << key << '=' << value << '\n';
}

// The whole document is rendered first so a failure never leaves a
// half-written file behind.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write " + path);
  file << text;
  if (!file) throw DataError("failed writing " + path);
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::out_of_range& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

std::string components(const PredictionSet& set) {
  std::string out;
  for (const auto& part : set.parts()) {
    if (!out.empty()) out += ';';
    out += format_number(part.lower) + ':' + format_number(part.upper);
  }
  return out;
}

}  // namespace

Regressor RegressorOptions::build() const {
  RegressorParams params;
  params.lambda_rel = lambda_rel;
  params.intercept = intercept;
  params.k = k;
  params.memorizer_eps = memorizer_eps;
  params.tau = tau;
  return Regressor::from_token(token, params);
}

int cmd_intervals(const IntervalsConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.methods.empty()) throw std::invalid_argument("no --method given");
    if (config.alpha_lo.has_value() != config.alpha_hi.has_value()) {
      throw std::invalid_argument("--alpha-lo and --alpha-hi must be given together");
    }
    IntervalSpec spec;
    spec.alpha = config.alpha;
    spec.inflation = config.inflation;
    if (config.alpha_lo) spec.asymmetric = AsymmetricLevels{*config.alpha_lo, *config.alpha_hi};
    spec.validate();
    std::vector<Method> methods;
    for (const auto& token : config.methods) methods.push_back(parse_method(token));
    if (config.grid_points < 2) throw std::invalid_argument("--grid-points must be at least 2");
    if (config.folds < 0) throw std::invalid_argument("--folds must be positive (0 means n)");
    const Regressor regressor = config.regressor.build();

    const Dataset train = load_csv(config.train, config.target);
    const FeatureTable test = load_feature_csv(config.test, config.target);
    if (test.feature_names != train.feature_names()) {
      throw DataError("test features do not match training features (same names in the same order required)");
    }
    const Index n = train.rows();
    const Index folds = config.folds == 0 ? n : config.folds;

    std::vector<MethodConfig> configs;
    for (Method method : methods) {
      MethodConfig m;
      m.method = method;
      m.spec = spec;
      if (method == Method::CvPlus || method == Method::CrossConformal) {
        m.folds = folds;
        if (folds > n) throw std::invalid_argument("--folds exceeds the training size");
        if (config.strict_folds && n % folds != 0) {
          throw std::invalid_argument("--strict-folds: K = " + std::to_string(folds) + " does not divide n = " +
                                      std::to_string(n));
        }
      }
      m.split.holdout_fraction = config.holdout_fraction;
      m.grid.points = config.grid_points;
      m.grid.lower = config.grid_lower;
      m.grid.upper = config.grid_upper;
      configs.push_back(m);
    }

    std::vector<std::string> warnings;
    const auto predictions = predict_all(train, test.features, regressor, configs, config.seed, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';

    Echo echo = {{"train", config.train}, {"test", config.test}, {"target", config.target}};
    std::string method_list;
    for (const auto& m : configs) method_list += (method_list.empty() ? "" : ",") + m.label();
    echo.emplace_back("methods", method_list);
    echo.emplace_back("alpha", format_number(spec.alpha));
    if (spec.asymmetric) {
      echo.emplace_back("alpha_lo", format_number(spec.asymmetric->alpha_lo));
      echo.emplace_back("alpha_hi", format_number(spec.asymmetric->alpha_hi));
    }
    echo.emplace_back("inflation", format_number(spec.inflation));
    echo_regressor(echo, config.regressor);
    echo.emplace_back("holdout_fraction", format_number(config.holdout_fraction));
    echo.emplace_back("grid_points", std::to_string(config.grid_points));
    echo.emplace_back("seed", std::to_string(config.seed));

    std::ostringstream text;
    write_echo(text, "intervals", echo);
    text << "test_index,method,alpha,lower,upper,components,covered\n";
    for (Index t = 0; t < test.features.rows(); ++t) {
      for (std::size_t m = 0; m < configs.size(); ++m) {
        const Prediction& p = predictions[m][static_cast<std::size_t>(t)];
        text << t << ',' << configs[m].label() << ',' << format_number(spec.alpha) << ','
             << format_number(p.interval.lower) << ',' << format_number(p.interval.upper) << ','
             << (p.set ? components(*p.set) : std::string()) << ',';
        if (test.responses) text << (p.contains((*test.responses)(t)) ? '1' : '0');
        text << '\n';
      }
    }
    emit(config.out, text.str(), out);
    return kOk;
  });
}

int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Echo echo = {{"experiment", config.experiment}};
    std::vector<ExperimentRow> rows;
    const double alpha = config.alpha;
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("--alpha must be in (0, 1)");
    auto positive = [](std::optional<Index> v, Index fallback, const char* name) {
      const Index value = v.value_or(fallback);
      if (value < 1) throw std::invalid_argument(std::string("--") + name + " must be positive");
      return value;
    };

    if (config.experiment == "figure2") {
      Figure2Config f;
      f.n = positive(config.n, f.n, "n");
      if (!config.d_list.empty()) f.d_list = config.d_list;
      f.trials = positive(config.trials, f.trials, "trials");
      f.n_test = positive(config.n_test, f.n_test, "n-test");
      f.alpha = alpha;
      f.seed = config.seed;
      f.full_conformal = config.full_conformal;
      f.grid_points = config.grid_points;
      if (f.n < 10) throw std::invalid_argument("figure2 needs n >= 10 for its 10-fold CV+");
      echo.insert(echo.end(), {{"n", std::to_string(f.n)},
                               {"d_list", join_indices(f.d_list)},
                               {"trials", std::to_string(f.trials)},
                               {"n_test", std::to_string(f.n_test)},
                               {"regressor", "ols"},
                               {"full_conformal", f.full_conformal ? "true" : "false"}});
      if (f.full_conformal) echo.emplace_back("grid_points", std::to_string(f.grid_points));
      rows = figure2_experiment(f);
    } else if (config.experiment == "coverage-mc") {
      GaussianCoverageConfig g;
      g.n = positive(config.n, 20, "n");
      g.d = positive(config.d, 5, "d");
      g.trials = positive(config.trials, 500, "trials");
      g.n_test = positive(config.n_test, 50, "n-test");
      g.seed = config.seed;
      const std::vector<Index> folds = config.folds_list.empty() ? std::vector<Index>{2, 5, 0} : config.folds_list;
      for (Index k : folds) {
        if (k < 0 || k == 1 || k > g.n) throw std::invalid_argument("--folds-list entries must be in [2, n] (0 means n)");
      }
      g.methods = coverage_mc_methods(alpha, folds);
      echo.insert(echo.end(), {{"n", std::to_string(g.n)},
                               {"d", std::to_string(g.d)},
                               {"trials", std::to_string(g.trials)},
                               {"n_test", std::to_string(g.n_test)},
                               {"folds_list", join_indices(folds)}});
      echo_regressor(echo, config.regressor);
      for (auto& report : gaussian_coverage(g, config.regressor.build())) rows.push_back({g.d, std::move(report)});
    } else if (config.experiment == "pathology-memorizer") {
      MemorizerConfig m;
      m.n = positive(config.n, m.n, "n");
      m.trials = positive(config.trials, m.trials, "trials");
      m.n_test = positive(config.n_test, m.n_test, "n-test");
      m.alpha = alpha;
      m.eps = config.regressor.memorizer_eps;
      m.seed = config.seed;
      echo.insert(echo.end(), {{"n", std::to_string(m.n)},
                               {"trials", std::to_string(m.trials)},
                               {"n_test", std::to_string(m.n_test)},
                               {"memorizer_eps", format_number(m.eps)}});
      for (auto& report : memorizer_pathology(m)) rows.push_back({1, std::move(report)});
    } else if (config.experiment == "pathology-parity") {
      ParityConfig p;
      p.n = positive(config.n, p.n, "n");
      p.trials = positive(config.trials, p.trials, "trials");
      p.n_test = positive(config.n_test, p.n_test, "n-test");
      p.alpha = alpha;
      p.epsilon = config.epsilon;
      p.seed = config.seed;
      validate_parity(p);
      echo.insert(echo.end(), {{"n", std::to_string(p.n)},
                               {"trials", std::to_string(p.trials)},
                               {"n_test", std::to_string(p.n_test)},
                               {"epsilon", format_number(p.epsilon)},
                               {"gamma", format_number(parity_gamma(p.n, p.alpha))},
                               {"tau", format_number(p.epsilon * static_cast<double>(p.n))},
                               {"coverage_ceiling", format_number(parity_coverage_ceiling(p.n, p.alpha))}});
      rows.push_back({3, parity_pathology(p)});
    } else {
      throw std::invalid_argument("unknown experiment '" + config.experiment + "' (expected " + kExperimentTokens +
                                  ")");
    }
    echo.emplace_back("alpha", format_number(alpha));
    echo.emplace_back("seed", std::to_string(config.seed));

    std::ostringstream text;
    write_echo(text, "simulate", echo);
    write_report_csv(text, rows);
    emit(config.out, text.str(), out);
    return kOk;
  });
}

int cmd_audit(const AuditConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    constexpr Index kMaxN = 30;
    if (config.n && (*config.n > kMaxN || *config.n < 2)) {
      throw std::invalid_argument("audit --n must be in [2, " + std::to_string(kMaxN) +
                                  "] (pairwise refits grow quadratically)");
    }
    if (config.trials < 1) throw std::invalid_argument("--trials must be positive");
    if (config.k < 1) throw std::invalid_argument("--k must be positive");
    AuditCampaign campaign;
    campaign.n = config.n;
    campaign.knn_k = config.k;
    campaign.seed = config.seed;
    if (config.alpha) {
      check_level(*config.alpha);
      campaign.alphas = {*config.alpha};
    }
    if (config.regressor != "all") {
      if (config.regressor == "parity") throw std::invalid_argument("the parity regressor needs three-column (A, B, C) data");
      RegressorOptions probe;
      probe.token = config.regressor;
      probe.build();
      campaign.regressors = {config.regressor};
    }
    std::vector<ComparisonVariant> variants;
    if (config.variant == "both") {
      variants = {ComparisonVariant::Plus, ComparisonVariant::Minmax};
    } else {
      variants = {parse_variant(config.variant)};
    }

    std::vector<std::optional<AuditReport>> reports(static_cast<std::size_t>(config.trials));
    std::vector<std::string> tokens(reports.size());
    parallel_for(reports.size(), [&](std::size_t t) {
      AuditInstance instance = audit_instance(campaign, static_cast<Index>(t));
      tokens[t] = instance.regressor_token;
      reports[t] = audit(instance.points, instance.regressor, instance.alpha, variants);
    });

    Echo echo = {{"trials", std::to_string(config.trials)},
                 {"n", config.n ? std::to_string(*config.n) : std::string("4..20")},
                 {"alpha", config.alpha ? format_number(*config.alpha) : std::string("0.1,0.25,0.5")},
                 {"regressor", config.regressor},
                 {"k", std::to_string(config.k)},
                 {"variant", config.variant},
                 {"seed", std::to_string(config.seed)}};
    std::ostringstream text;
    write_echo(text, "audit", echo);
    text << "trial,n,regressor,alpha,variant,strange_count,strange_limit,bound_holds,test_covered,test_strange,"
            "implication_holds\n";
    Index violations = 0;
    std::string replay;
    for (std::size_t t = 0; t < reports.size(); ++t) {
      const AuditReport& r = *reports[t];
      for (const auto& v : r.variants) {
        text << t << ',' << r.n << ',' << tokens[t] << ',' << format_number(r.alpha) << ','
             << variant_token(v.variant) << ',' << v.strange_count << ',' << v.strange_limit << ','
             << v.bound_holds << ',' << v.test_covered << ',' << v.test_strange << ',' << v.implication_holds << '\n';
      }
      if (!r.ok()) {
        ++violations;
        replay += "# trial " + std::to_string(t) + " regressor " + tokens[t] + '\n' + r.replay;
      }
    }
    if (!config.out.empty()) emit(config.out, text.str(), out);
    out << "audited " << config.trials << " instances: " << violations << " violation"
        << (violations == 1 ? "" : "s") << '\n';
    if (violations > 0) {
      emit(config.replay, replay, out);
      err << "violations written to " << config.replay << '\n';
      return kViolation;
    }
    return kOk;
  });
}

int cmd_stability(const StabilityConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.n < 2 || config.d < 1 || config.trials < 1) {
      throw std::invalid_argument("stability needs n >= 2, d >= 1, trials >= 1");
    }
    if (!(config.epsilon >= 0.0)) throw std::invalid_argument("--epsilon must be >= 0");
    check_level(config.alpha);
    const StabilityKind kind = parse_stability_kind(config.kind);
    const Regressor regressor = config.regressor.build();
    Rng beta_rng = make_rng(config.seed, "stability/beta");
    const Eigen::VectorXd beta = draw_beta(config.d, beta_rng);
    const Sampler sampler = [beta](Index rows, Rng& rng) { return draw_gaussian_linear(rows, beta, rng); };
    const StabilityEstimate est =
        estimate_stability(regressor, sampler, config.n, config.epsilon, kind, config.trials, config.seed);
    const CoverageBounds bounds = coverage_lower_bounds(config.alpha, est.nu_hat, config.n, config.n);

    Echo echo;
    echo_regressor(echo, config.regressor);
    echo.insert(echo.end(), {{"n", std::to_string(config.n)},
                             {"d", std::to_string(config.d)},
                             {"epsilon", format_number(config.epsilon)},
                             {"kind", std::string(stability_kind_token(kind))},
                             {"trials", std::to_string(config.trials)},
                             {"alpha", format_number(config.alpha)},
                             {"seed", std::to_string(config.seed)}});
    std::ostringstream text;
    write_echo(text, "stability", echo);
    text << "n,kind,trials,epsilon,nu_hat,se,bound_jackknife_eps,bound_jackknife_plus_2eps,bound_naive_2eps\n";
    text << est.n << ',' << stability_kind_token(kind) << ',' << est.trials << ',' << format_number(est.epsilon)
         << ',' << format_number(est.nu_hat) << ',' << format_number(est.standard_error) << ','
         << format_number(bounds.jackknife_eps) << ',' << format_number(bounds.jackknife_plus_2eps) << ','
         << format_number(bounds.naive_2eps) << '\n';
    emit(config.out, text.str(), out);
    return kOk;
  });
}

namespace {

void add_regressor_options(CLI::App* app, RegressorOptions& r) {
  app->add_option("--regressor", r.token, std::string("Regressor: ") + kRegressorTokens)->capture_default_str();
  app->add_option("--lambda", r.lambda_rel, "Ridge penalty relative to the top squared singular value")
      ->capture_default_str();
  app->add_flag("!--no-intercept", r.intercept, "Fit ridge without an intercept");
  app->add_option("--k", r.k, "Neighbors for knn")->capture_default_str();
  app->add_option("--memorizer-eps", r.memorizer_eps, "Offset of the memorizer")->capture_default_str();
  app->add_option("--tau", r.tau, "Scale of the parity adversary")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"jkp: jackknife+ and conformal prediction intervals"};
  app.name("jkp");
  app.require_subcommand(1);

  IntervalsConfig ic;
  auto* intervals = app.add_subcommand("intervals", "Prediction intervals for every test row");
  intervals->add_option("--train", ic.train, "Training CSV (header row, numeric cells)")->required();
  intervals->add_option("--test", ic.test, "Test CSV; the target column is optional")->required();
  intervals->add_option("--target", ic.target, "Name of the response column")->capture_default_str();
  intervals->add_option("--method", ic.methods, std::string("Methods, repeat or comma-separate: ") + kMethodTokens)
      ->delimiter(',')
      ->capture_default_str();
  auto* alpha_opt = intervals->add_option("--alpha", ic.alpha, "Miscoverage level")->capture_default_str();
  intervals->add_option("--alpha-lo", ic.alpha_lo, "Lower-tail level of the asymmetric form");
  intervals->add_option("--alpha-hi", ic.alpha_hi, "Upper-tail level of the asymmetric form");
  intervals->add_option("--folds", ic.folds, "Folds K for cv+ and cross-conformal; 0 means n")->capture_default_str();
  intervals->add_flag("--strict-folds", ic.strict_folds, "Reject K that does not divide n");
  intervals->add_option("--inflation", ic.inflation, "Additive widening of both endpoints")->capture_default_str();
  add_regressor_options(intervals, ic.regressor);
  intervals->add_option("--holdout-fraction", ic.holdout_fraction, "Holdout share for split")->capture_default_str();
  intervals->add_option("--grid-points", ic.grid_points, "Grid size for full-conformal")->capture_default_str();
  intervals->add_option("--grid-lower", ic.grid_lower, "Grid start (default: min training response)");
  intervals->add_option("--grid-upper", ic.grid_upper, "Grid end (default: max training response)");
  intervals->add_option("--seed", ic.seed, "Master seed")->capture_default_str();
  intervals->add_option("--out", ic.out, "Output CSV (default: standard output)");

  SimulateConfig sc;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage experiments");
  simulate->add_option("--experiment", sc.experiment, std::string("Experiment: ") + kExperimentTokens)
      ->capture_default_str();
  simulate->add_option("--n", sc.n, "Training size");
  simulate->add_option("--d", sc.d, "Dimension for coverage-mc");
  simulate->add_option("--d-list", sc.d_list, "Comma-separated dimensions for figure2")->delimiter(',');
  simulate->add_option("--trials", sc.trials, "Monte Carlo trials");
  simulate->add_option("--n-test", sc.n_test, "Test points per trial");
  simulate->add_option("--alpha", sc.alpha, "Miscoverage level")->capture_default_str();
  simulate->add_option("--epsilon", sc.epsilon, "Inflation for pathology-parity")->capture_default_str();
  simulate->add_option("--folds-list", sc.folds_list, "CV+ fold counts for coverage-mc; 0 means n")->delimiter(',');
  add_regressor_options(simulate, sc.regressor);
  simulate->add_flag("--full-conformal", sc.full_conformal, "Add full conformal to figure2 (slow)");
  simulate->add_option("--grid-points", sc.grid_points, "Grid size for full conformal")->capture_default_str();
  simulate->add_option("--seed", sc.seed, "Master seed")->capture_default_str();
  simulate->add_option("--out", sc.out, "Output CSV (default: standard output)");

  AuditConfig ac;
  auto* audit_cmd = app.add_subcommand("audit", "Randomized strange-set audit of the coverage argument");
  audit_cmd->add_option("--n", ac.n, "Training size, at most 30 (default: drawn from 4..20)");
  audit_cmd->add_option("--trials", ac.trials, "Random instances")->capture_default_str();
  audit_cmd->add_option("--alpha", ac.alpha, "Level (default: cycle 0.1, 0.25, 0.5)");
  audit_cmd->add_option("--regressor", ac.regressor, "Regressor: all | mean | ols | knn | ridge | memorizer")
      ->capture_default_str();
  audit_cmd->add_option("--k", ac.k, "Neighbors for knn, capped at n - 1")->capture_default_str();
  audit_cmd->add_option("--variant", ac.variant, "Comparison variant: plus | minmax | both")->capture_default_str();
  audit_cmd->add_option("--seed", ac.seed, "Master seed")->capture_default_str();
  audit_cmd->add_option("--out", ac.out, "Per-instance CSV");
  audit_cmd->add_option("--replay", ac.replay, "Where violating instances are written")->capture_default_str();

  StabilityConfig stc;
  auto* stability = app.add_subcommand("stability", "Empirical leave-one-out stability on Gaussian-linear data");
  add_regressor_options(stability, stc.regressor);
  stability->add_option("--n", stc.n, "Training size")->capture_default_str();
  stability->add_option("--d", stc.d, "Feature dimension")->capture_default_str();
  stability->add_option("--epsilon", stc.epsilon, "Deviation threshold")->capture_default_str();
  stability->add_option("--kind", stc.kind, "in_sample | out_of_sample")->capture_default_str();
  stability->add_option("--trials", stc.trials, "Monte Carlo trials")->capture_default_str();
  stability->add_option("--alpha", stc.alpha, "Level used for the reported bounds")->capture_default_str();
  stability->add_option("--seed", stc.seed, "Master seed")->capture_default_str();
  stability->add_option("--out", stc.out, "Output CSV (default: standard output)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  if (intervals->parsed()) {
    if (ic.alpha_lo && ic.alpha_hi && alpha_opt->count() == 0) ic.alpha = *ic.alpha_lo + *ic.alpha_hi;
    return cmd_intervals(ic, out, err);
  }
  if (simulate->parsed()) return cmd_simulate(sc, out, err);
  if (audit_cmd->parsed()) return cmd_audit(ac, out, err);
  return cmd_stability(stc, out, err);
}

}  // namespace jkp::cli
