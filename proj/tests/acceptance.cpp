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

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never tuned at run time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "jkp/eval.hpp"
#include "jkp/intervals.hpp"
#include "jkp/oracle.hpp"
#include "jkp/quantile.hpp"
#include "jkp/stability.hpp"

using namespace jkp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

IntervalSpec level(double alpha) {
  IntervalSpec s;
  s.alpha = alpha;
  return s;
}

MethodConfig method(Method m, double alpha, Index folds = 0) {
  MethodConfig c;
  c.method = m;
  c.spec.alpha = alpha;
  c.folds = folds;
  return c;
}

// Shared by criteria 1 and 2.
constexpr Index kAuditInstances = 1000;
constexpr std::uint64_t kAuditSeed = 20260101;

AuditCampaign audit_campaign() {
  AuditCampaign c;
  c.n_min = 4;
  c.n_max = 20;
  c.regressors = {"mean", "ols", "knn"};
  c.alphas = {0.1, 0.25, 0.5};
  c.seed = kAuditSeed;
  return c;
}

Outcome strange_set_audit() {
  const AuditCampaign campaign = audit_campaign();
  Index bound_violations = 0, implication_violations = 0, noncovered = 0;
  for (Index t = 0; t < kAuditInstances; ++t) {
    const AuditInstance inst = audit_instance(campaign, t);
    const AuditReport report = audit(inst.points, inst.regressor, inst.alpha);
    for (const VariantAudit& v : report.variants) {
      bound_violations += v.bound_holds ? 0 : 1;
      implication_violations += v.implication_holds ? 0 : 1;
      noncovered += v.test_covered ? 0 : 1;
    }
  }
  Outcome o;
  o.pass = bound_violations == 0 && implication_violations == 0;
  o.detail = std::to_string(kAuditInstances) + " instances x 2 variants; bound violations " +
             std::to_string(bound_violations) + ", implication violations " + std::to_string(implication_violations) +
             " (" + std::to_string(noncovered) + " noncovered tests checked)";
  return o;
}

Outcome containment_suite() {
  const AuditCampaign campaign = audit_campaign();
  std::mt19937_64 tau_rng(derive_seed(kAuditSeed, "acceptance/tau"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Index cc = 0, mm = 0, ident = 0, median = 0, median_checked = 0;
  for (Index t = 0; t < kAuditInstances; ++t) {
    const AuditInstance inst = audit_instance(campaign, t);
    const Index n = inst.points.rows() - 1;
    const Dataset train = inst.points.without(n);
    const Eigen::RowVectorXd x = inst.points.x(n);
    const IntervalSpec spec = level(inst.alpha);
    const LooCache loo = LooCache::build(train, inst.regressor, n);
    const PredictionInterval jp = jackknife_plus(loo, spec, x);
    const PredictionInterval cvn = cv_plus(loo, spec, x);
    ident += (std::bit_cast<std::uint64_t>(jp.lower) == std::bit_cast<std::uint64_t>(cvn.lower) &&
              std::bit_cast<std::uint64_t>(jp.upper) == std::bit_cast<std::uint64_t>(cvn.upper))
                 ? 0
                 : 1;
    mm += jp.subset_of(jackknife_minmax(loo, spec, x)) ? 0 : 1;

    const double tau = unit(tau_rng);
    cc += cross_conformal_set(loo, spec, x, tau).subset_of(cvn) ? 0 : 1;
    FoldOptions options;
    options.seed = static_cast<std::uint64_t>(t);
    // Two folds leave floor(n / 2) training rows, so k-NN caps k there.
    const Regressor half = inst.regressor_token == "knn"
                               ? Regressor::knn(std::min<Index>(campaign.knn_k, n / 2))
                               : inst.regressor;
    const LooCache two = LooCache::build(train, half, 2, options);
    cc += cross_conformal_set(two, spec, x, tau).subset_of(cv_plus(two, spec, x)) ? 0 : 1;

    if (inst.alpha <= 0.5) {
      Eigen::VectorXd m = loo.held_out_predictions(x);
      std::sort(m.data(), m.data() + m.size());
      const double med = n % 2 ? m(n / 2) : 0.5 * (m(n / 2 - 1) + m(n / 2));
      median += jp.contains(med) ? 0 : 1;
      ++median_checked;
    }
  }
  Outcome o;
  o.pass = cc == 0 && mm == 0 && ident == 0 && median == 0;
  o.detail = "violations: cross-conformal in CV+ " + std::to_string(cc) + " (K=n and K=2), jackknife+ in minmax " +
             std::to_string(mm) + ", CV+(K=n) bit-identity " + std::to_string(ident) + ", median " +
             std::to_string(median) + "/" + std::to_string(median_checked);
  return o;
}

Outcome coverage_monte_carlo() {
  constexpr Index kN = 20;
  constexpr double kSlack = 0.02;
  const double cv_floor = std::sqrt(2.0 / static_cast<double>(kN));
  Outcome o;
  std::ostringstream detail;
  for (const char* token : {"mean", "ols"}) {
    for (double alpha : {0.1, 0.2}) {
      GaussianCoverageConfig g;
      g.n = kN;
      g.d = 5;
      g.trials = 500;
      g.n_test = 50;
      g.methods = coverage_mc_methods(alpha, {2, 5, kN});
      g.seed = derive_seed(7, token, static_cast<std::uint64_t>(alpha * 100));
      const auto reports = gaussian_coverage(g, Regressor::from_token(token));
      const double bounds[] = {1 - 2 * alpha, 1 - alpha, 1 - alpha, 1 - 2 * alpha - cv_floor,
                               1 - 2 * alpha - cv_floor, 1 - 2 * alpha - cv_floor};
      detail << token << " a=" << alpha << ":";
      for (std::size_t m = 0; m < reports.size(); ++m) {
        const double cov = reports[m].coverage_mean();
        const bool ok = cov >= bounds[m] - kSlack;
        o.pass &= ok;
        detail << ' ' << reports[m].method << '=' << fmt(cov, 3) << (ok ? "" : "(LOW)");
      }
      detail << "; ";
    }
  }
  o.detail = detail.str();
  return o;
}

Outcome figure2_replication() {
  Figure2Config f;
  f.n = 100;
  f.d_list = {20, 100, 180};
  f.trials = 20;
  f.n_test = 100;
  f.alpha = 0.1;
  f.seed = 2019;
  const auto rows = figure2_experiment(f);
  auto cov = [&](Index d, const std::string& m) {
    for (const auto& r : rows) {
      if (r.d == d && r.report.method == m) return r.report.coverage_mean();
    }
    return std::nan("");
  };
  const double jk100 = cov(100, "jackknife"), naive100 = cov(100, "naive"), jp100 = cov(100, "jackknife+");
  const double gap20 = std::abs(cov(20, "jackknife") - cov(20, "jackknife+"));
  const double gap180 = std::abs(cov(180, "jackknife") - cov(180, "jackknife+"));
  Outcome o;
  o.pass = jk100 <= 0.65 && naive100 <= 0.05 && jp100 >= 0.85 && jp100 <= 1.0 && gap20 <= 0.05 && gap180 <= 0.05;
  o.detail = "d=100: jackknife " + fmt(jk100, 3) + " (<=0.65), naive " + fmt(naive100, 3) + " (<=0.05), jackknife+ " +
             fmt(jp100, 3) + " (in [0.85,1]); |jk - jk+| d=20 " + fmt(gap20, 3) + ", d=180 " + fmt(gap180, 3) +
             " (<=0.05)";
  return o;
}

Outcome memorizer() {
  MemorizerConfig m;
  m.n = 10;
  m.trials = 50;
  m.seed = 5;
  const auto reports = memorizer_pathology(m);
  bool naive_zero = true, jk_zero = true, jp_one = true;
  for (double c : reports[0].coverage) naive_zero &= c == 0.0;
  for (double c : reports[1].coverage) jk_zero &= c == 0.0;
  for (double c : reports[2].coverage) jp_one &= c == 1.0;
  Outcome o;
  o.pass = naive_zero && jk_zero && jp_one;
  o.detail = "50 trials: naive all zero " + std::string(naive_zero ? "yes" : "no") + ", jackknife all zero " +
             (jk_zero ? "yes" : "no") + ", jackknife+ all one " + (jp_one ? "yes" : "no");
  return o;
}

Outcome parity() {
  ParityConfig p;
  p.n = 100000;
  p.alpha = 0.25;
  p.epsilon = 0.01;
  p.trials = 50;
  p.n_test = 200;
  p.seed = 17;
  const CoverageReport r = parity_pathology(p);
  const double gamma = parity_gamma(p.n, p.alpha);
  const double expected = 1.0 - 2.0 * p.alpha * (1.0 - gamma);
  const double cov = r.coverage_mean();
  Outcome o;
  o.pass = cov <= 0.564 && cov >= 0.45 && r.trials() * p.n_test >= 2000;
  o.detail = std::to_string(r.trials() * p.n_test) + " evaluations: coverage " + fmt(cov) + " (se " +
             fmt(r.coverage_se()) + "), window [0.45, 0.564], construction predicts " + fmt(expected) +
             ", ceiling formula " + fmt(parity_coverage_ceiling(p.n, p.alpha));
  return o;
}

Outcome knn_stability() {
  constexpr double kAlpha = 0.1;
  constexpr Index kTrials = 2000;
  Outcome o;
  std::ostringstream detail;
  for (Index k : {1, 3}) {
    for (Index n : {20, 100}) {
      const std::uint64_t seed = derive_seed(31, "knn", static_cast<std::uint64_t>(k * 1000 + n));
      Rng beta_rng = make_rng(seed, "beta");
      const Eigen::VectorXd beta = draw_beta(5, beta_rng);
      const Sampler sampler = [beta](Index rows, Rng& rng) { return draw_gaussian_linear(rows, beta, rng); };
      const Regressor reg = Regressor::knn(k);
      const StabilityEstimate est =
          estimate_stability(reg, sampler, n, 0.0, StabilityKind::OutOfSample, kTrials, seed);
      const double nu = static_cast<double>(k) / static_cast<double>(n);
      const double se = std::sqrt(nu * (1.0 - nu) / static_cast<double>(kTrials));
      const bool stable = est.nu_hat <= nu + 3.0 * se;

      // Coverage on fresh Gaussian-linear draws with the same beta.
      GaussianCoverageConfig g;
      g.n = n;
      g.d = 5;
      g.trials = kTrials;
      g.n_test = 10;
      g.methods = {method(Method::Jackknife, kAlpha), method(Method::JackknifePlus, kAlpha)};
      g.seed = derive_seed(seed, "coverage");
      const auto reports = gaussian_coverage(g, reg);
      const double jk = reports[0].coverage_mean(), jp = reports[1].coverage_mean();
      const bool jk_ok = jk >= 1 - kAlpha - 2 * std::sqrt(nu) - 0.02;
      const bool jp_ok = jp >= 1 - kAlpha - 4 * std::sqrt(nu) - 0.02;
      o.pass &= stable && jk_ok && jp_ok;
      detail << "K=" << k << " n=" << n << ": nu " << fmt(est.nu_hat) << "<=" << fmt(nu + 3 * se)
             << (stable ? "" : "(FAIL)") << " jk " << fmt(jk, 3) << (jk_ok ? "" : "(FAIL)") << " jk+ " << fmt(jp, 3)
             << (jp_ok ? "" : "(FAIL)") << "; ";
    }
  }
  o.detail = detail.str();
  return o;
}

Outcome quantile_oracle() {
  std::mt19937_64 rng(derive_seed(99, "acceptance/quantile"));
  Index mismatches = 0, identity = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const long n = std::uniform_int_distribution<long>(1, 60)(rng);
    std::vector<double> v(static_cast<std::size_t>(n));
    const bool coarse = trial % 2 == 0;
    for (auto& x : v) {
      const double z = std::normal_distribution<double>(0, 5)(rng);
      x = coarse ? std::round(z) : z;
    }
    // alpha is p / q so the reference ranks are exact integer arithmetic.
    const long q = trial % 3 == 0 ? 100 : std::uniform_int_distribution<long>(1, 1000)(rng);
    const long p = std::uniform_int_distribution<long>(0, q)(rng);
    const double alpha = static_cast<double>(p) / static_cast<double>(q);

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const long up_num = (q - p) * (n + 1);
    const long up_rank = up_num / q + (up_num % q ? 1 : 0);
    const long lo_rank = p * (n + 1) / q;
    auto pick = [&](long rank) {
      if (rank < 1) return -kInf<double>;
      if (rank > n) return kInf<double>;
      return sorted[static_cast<std::size_t>(rank - 1)];
    };
    const std::span<const double> span(v);
    mismatches += upper_quantile(span, alpha) == pick(up_rank) ? 0 : 1;
    mismatches += lower_quantile(span, alpha) == pick(lo_rank) ? 0 : 1;
    std::vector<double> neg(v.size());
    std::transform(v.begin(), v.end(), neg.begin(), [](double x) { return -x; });
    identity += lower_quantile(span, alpha) == -upper_quantile(std::span<const double>(neg), alpha) ? 0 : 1;
  }
  Outcome o;
  o.pass = mismatches == 0 && identity == 0;
  o.detail = "10000 pairs: brute-force mismatches " + std::to_string(mismatches) + ", identity failures " +
             std::to_string(identity);
  return o;
}

Outcome sweep_vs_grid() {
  std::mt19937_64 rng(derive_seed(123, "acceptance/sweep"));
  Index misclassified = 0, compared = 0, skipped = 0;
  const char* tokens[] = {"mean", "ols", "knn"};
  for (int inst = 0; inst < 200; ++inst) {
    const Index n = std::uniform_int_distribution<Index>(3, 20)(rng);
    const long q = 100;
    const long p = std::uniform_int_distribution<long>(1, 60)(rng);
    const double alpha = static_cast<double>(p) / static_cast<double>(q);
    const Dataset d = inst % 2 ? jkp::testing::lumpy(n + 1, 2, 7000 + inst) : jkp::testing::gaussian(n + 1, 2, 7000 + inst);
    const Dataset train = d.without(n);
    const Eigen::RowVectorXd x = d.x(n);
    RegressorParams params;
    params.k = std::min<Index>(2, inst % 4 == 0 ? n / 2 : n - 1);
    const Regressor reg = Regressor::from_token(tokens[inst % 3], params);
    const Index k = inst % 4 == 0 ? 2 : n;
    FoldOptions options;
    options.seed = static_cast<std::uint64_t>(inst);
    const LooCache cache = LooCache::build(train, reg, k, options);
    const double tau = std::uniform_real_distribution<double>(0, 1)(rng);
    const PredictionSet set = cross_conformal_set(cache, level(alpha), x, tau);
    const Eigen::VectorXd m = cache.held_out_predictions(x);
    const Eigen::VectorXd& r = cache.residuals();
    const double span = 1.5 * ((m.array().abs() + r.array()).maxCoeff()) + 1.0;
    for (int g = 0; g < 10000; ++g) {
      const double y = -span + 2.0 * span * (g + 0.5) / 10000.0;
      long double count = tau;
      bool boundary = false;
      for (Index i = 0; i < n; ++i) {
        const double gap = std::abs(y - m(i));
        boundary |= std::abs(gap - r(i)) <= 1e-9 * (1.0 + std::abs(y));
        count += gap < r(i) ? 1.0L : 0.0L;
        count += gap == r(i) ? static_cast<long double>(tau) : 0.0L;
      }
      if (boundary) {
        ++skipped;
        continue;
      }
      const bool member = count * q > static_cast<long double>(p) * static_cast<long double>(n + 1);
      misclassified += set.contains(y) == member ? 0 : 1;
      ++compared;
    }
  }
  Outcome o;
  o.pass = misclassified == 0;
  o.detail = "200 instances, " + std::to_string(compared) + " grid points compared (" + std::to_string(skipped) +
             " boundary points skipped): " + std::to_string(misclassified) + " misclassified";
  return o;
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "jkp_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Dataset train = jkp::testing::gaussian(30, 3, 1);
  const Dataset test = jkp::testing::gaussian(8, 3, 2);
  save_csv(train, dir / "train.csv");
  save_csv(test, dir / "test.csv");
  const std::string cli = JKP_CLI_PATH;
  const std::string t = (dir / "train.csv").string(), s = (dir / "test.csv").string();
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"intervals",
       "intervals --train " + t + " --test " + s +
           " --method naive,split,jackknife,jackknife+,jackknife-mm,cv+,cross-conformal,full-conformal --folds 5"
           " --grid-points 40 --seed 3"},
      {"intervals-ridge", "intervals --train " + t + " --test " + s +
                              " --regressor ridge --alpha-lo 0.05 --alpha-hi 0.1 --method jackknife+,cv+ --folds 3"},
      {"simulate-figure2",
       "simulate --experiment figure2 --n 30 --d-list 5,40 --trials 3 --n-test 10 --seed 4"},
      {"simulate-coverage", "simulate --experiment coverage-mc --trials 20 --seed 4"},
      {"simulate-memorizer", "simulate --experiment pathology-memorizer --trials 5 --seed 4"},
      {"simulate-parity",
       "simulate --experiment pathology-parity --n 20000 --alpha 0.25 --trials 2 --n-test 20 --seed 4"},
      {"audit", "audit --trials 50 --seed 4"},
      {"stability", "stability --regressor knn --k 2 --n 30 --trials 200 --seed 4"},
  };
  Outcome o;
  std::ostringstream detail;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / (name + "_" + std::to_string(rep) + ".csv");
      const std::string command = "\"" + cli + "\" " + args + " --out " + out.string() + " > /dev/null 2>&1";
      ran &= std::system(command.c_str()) == 0;
      outputs[rep] = jkp::testing::slurp(out);
    }
    const bool same = ran && !outputs[0].empty() && outputs[0] == outputs[1];
    o.pass &= same;
    detail << name << (same ? " identical" : ran ? " DIFFERENT" : " FAILED TO RUN") << "; ";
  }
  fs::remove_all(dir);
  o.detail = detail.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "strange-set audit", 120, strange_set_audit},
      {2, "containment suite", 120, containment_suite},
      {3, "coverage Monte Carlo", 300, coverage_monte_carlo},
      {4, "OLS dimension sweep", 600, figure2_replication},
      {5, "memorizer pathology", 60, memorizer},
      {6, "parity pathology", 120, parity},
      {7, "k-NN stability", 300, knn_stability},
      {8, "quantile oracle", 60, quantile_oracle},
      {9, "cross-conformal sweep vs grid", 120, sweep_vs_grid},
      {10, "CLI determinism", 300, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.time_limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s [%.1fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds, c.time_limit_seconds, in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
