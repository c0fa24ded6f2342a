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
#include <ostream>
#include <string>
#include <vector>

#include "jkp/regress.hpp"

/// Library side of the jkp command-line tool. Every subcommand is a plain
/// function over a config struct so it can be driven from tests.
namespace jkp::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kConfigError = 2, kDataError = 3 };

struct RegressorOptions {
  std::string token = "ols";
  double lambda_rel = 1e-3;
  bool intercept = true;
  Index k = 5;
  double memorizer_eps = 1.0;
  double tau = 1.0;

  Regressor build() const;
};

struct IntervalsConfig {
  std::string train;
  std::string test;
  std::string target = "y";
  std::vector<std::string> methods = {"jackknife+"};
  double alpha = 0.1;
  std::optional<double> alpha_lo;
  std::optional<double> alpha_hi;
  /// 0 means n.
  Index folds = 0;
  bool strict_folds = false;
  double inflation = 0.0;
  RegressorOptions regressor;
  double holdout_fraction = 0.5;
  Index grid_points = 200;
  std::optional<double> grid_lower;
  std::optional<double> grid_upper;
  std::uint64_t seed = 0;
  /// Empty writes to the output stream.
  std::string out;
};

struct SimulateConfig {
  std::string experiment = "figure2";
  std::optional<Index> n;
  std::optional<Index> d;
  std::vector<Index> d_list;
  std::optional<Index> trials;
  std::optional<Index> n_test;
  double alpha = 0.1;
  double epsilon = 0.01;
  std::vector<Index> folds_list;
  RegressorOptions regressor;
  bool full_conformal = false;
  Index grid_points = 50;
  std::uint64_t seed = 0;
  std::string out;
};

struct AuditConfig {
  std::optional<Index> n;
  Index trials = 1000;
  /// Unset cycles through 0.1, 0.25 and 0.5.
  std::optional<double> alpha;
  /// mean | ols | knn | all
  std::string regressor = "all";
  /// plus | minmax | both
  std::string variant = "both";
  Index k = 3;
  std::uint64_t seed = 0;
  std::string out;
  std::string replay = "audit_replay.txt";
};

struct StabilityConfig {
  RegressorOptions regressor{"knn"};
  Index n = 100;
  Index d = 5;
  double epsilon = 0.0;
  std::string kind = "out_of_sample";
  Index trials = 2000;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_intervals(const IntervalsConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err);
int cmd_audit(const AuditConfig& config, std::ostream& out, std::ostream& err);
int cmd_stability(const StabilityConfig& config, std::ostream& out, std::ostream& err);

/// Parses arguments (without the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jkp::cli
