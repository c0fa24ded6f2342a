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

#include "jkp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "jkp/random.hpp"

namespace jkp {

ResidualMatrix residual_matrix(const Dataset& points, const Regressor& regressor) {
  const Index size = points.rows();
  if (size < 3) throw std::invalid_argument("residual matrix needs at least 3 rows");
  ResidualMatrix out;
  out.residuals = Eigen::MatrixXd::Constant(size, size, kInf<double>);
  out.test_predictions.resize(size - 1);
  const Index last = size - 1;
  for (Index i = 0; i < size; ++i) {
    for (Index j = i + 1; j < size; ++j) {
      const Index pair[] = {i, j};
      const FittedModel model = regressor.fit(points.without(std::span<const Index>(pair)));
      out.residuals(i, j) = std::abs(points.y(i) - model(points.x(i)));
      out.residuals(j, i) = std::abs(points.y(j) - model(points.x(j)));
      if (j == last) out.test_predictions(i) = model(points.x(last));
    }
  }
  return out;
}

ComparisonMatrix comparison_matrix(const Eigen::MatrixXd& residuals, ComparisonVariant variant) {
  const Index size = residuals.rows();
  if (residuals.cols() != size) throw std::invalid_argument("residual matrix must be square");
  ComparisonMatrix a = ComparisonMatrix::Zero(size, size);
  for (Index i = 0; i < size; ++i) {
    const double own = variant == ComparisonVariant::Minmax ? residuals.row(i).minCoeff() : 0.0;
    for (Index j = 0; j < size; ++j) {
      if (i == j) continue;
      const double lhs = variant == ComparisonVariant::Minmax ? own : residuals(i, j);
      a(i, j) = lhs > residuals(j, i) ? 1 : 0;
    }
  }
  return a;
}

std::vector<Index> strange_set(const ComparisonMatrix& comparisons, double alpha) {
  check_level(alpha);
  const Index size = comparisons.rows();
  const std::int64_t allowed_losses = level_floor(alpha, size);
  std::vector<Index> strange;
  for (Index i = 0; i < size; ++i) {
    if (size - comparisons.row(i).sum() <= allowed_losses) strange.push_back(i);
  }
  return strange;
}

namespace {

// Decides coverage through the same rounded residuals the comparison matrix
// uses. Equal to interval membership in exact arithmetic, and immune to the
// rounding of mu +/- R at exact ties.
bool covered_in_residual_form(const ResidualMatrix& r, ComparisonVariant variant, double y, Index rank) {
  const Index last = r.size() - 1;
  const auto& m = r.test_predictions;
  Index above = 0, below = 0;
  if (variant == ComparisonVariant::Plus) {
    for (Index i = 0; i < last; ++i) {
      above += y - m(i) > r.residuals(i, last) ? 1 : 0;
      below += m(i) - y > r.residuals(i, last) ? 1 : 0;
    }
  } else {
    const double hi = m.maxCoeff(), lo = m.minCoeff();
    for (Index i = 0; i < last; ++i) {
      above += y > hi && y - hi > r.residuals(i, last) ? 1 : 0;
      below += y < lo && lo - y > r.residuals(i, last) ? 1 : 0;
    }
  }
  return above < rank && below < rank;
}

}  // namespace

bool AuditReport::ok() const {
  return std::all_of(variants.begin(), variants.end(), [](const VariantAudit& v) { return v.ok(); });
}

std::string_view variant_token(ComparisonVariant variant) {
  return variant == ComparisonVariant::Plus ? "plus" : "minmax";
}

ComparisonVariant parse_variant(std::string_view token) {
  if (token == "plus") return ComparisonVariant::Plus;
  if (token == "minmax") return ComparisonVariant::Minmax;
  throw std::invalid_argument("unknown variant '" + std::string(token) + "' (expected plus | minmax)");
}

AuditReport audit(const Dataset& points, const Regressor& regressor, double alpha,
                  const std::vector<ComparisonVariant>& variants) {
  check_level(alpha);
  const ResidualMatrix r = residual_matrix(points, regressor);
  const Index size = r.size();
  const Index last = size - 1;

  AuditReport report;
  report.n = last;
  report.alpha = alpha;

  // mu_{-(j,last)} is the leave-one-out model of the training rows, so these
  // are the jackknife+ ingredients.
  const Eigen::VectorXd loo_residuals = r.residuals.col(last).head(last);
  const std::span<const double> centers(r.test_predictions.data(), static_cast<std::size_t>(last));
  const std::span<const double> radii(loo_residuals.data(), static_cast<std::size_t>(last));
  const IntervalSpec spec{alpha, std::nullopt, 0.0};
  const double scaled = scaled_level(alpha, size);
  const std::int64_t allowed = level_floor(alpha, size);

  for (ComparisonVariant variant : variants) {
    VariantAudit v;
    v.variant = variant;
    const std::vector<Index> strange = strange_set(comparison_matrix(r.residuals, variant), alpha);
    v.strange_count = static_cast<Index>(strange.size());
    if (variant == ComparisonVariant::Plus) {
      v.strange_limit = std::max<Index>(0, 2 * allowed - 1);
      v.bound_holds = static_cast<double>(v.strange_count) < 2.0 * scaled && v.strange_count <= v.strange_limit;
      v.interval = plus_interval(centers, radii, spec);
    } else {
      v.strange_limit = allowed;
      v.bound_holds = static_cast<double>(v.strange_count) <= scaled;
      v.interval = minmax_interval(centers, radii, spec);
    }
    v.test_covered = covered_in_residual_form(r, variant, points.y(last), size - allowed);
    v.test_strange = std::find(strange.begin(), strange.end(), last) != strange.end();
    v.implication_holds = v.test_covered || v.test_strange;
    report.variants.push_back(v);
  }

  if (!report.ok()) {
    std::ostringstream out;
    out << "# regressor=" << regressor.name() << " alpha=" << format_number(alpha) << " n=" << last << '\n';
    for (const auto& name : points.feature_names()) out << name << ',';
    out << points.target_name() << '\n';
    for (Index i = 0; i < size; ++i) {
      for (Index j = 0; j < points.dims(); ++j) out << format_number(points.features()(i, j)) << ',';
      out << format_number(points.y(i)) << '\n';
    }
    report.replay = out.str();
  }
  return report;
}

AuditInstance audit_instance(const AuditCampaign& campaign, Index t) {
  if (campaign.regressors.empty() || campaign.alphas.empty()) {
    throw std::invalid_argument("audit campaign needs at least one regressor and one alpha");
  }
  if (campaign.n_min < 2 || campaign.n_max < campaign.n_min || campaign.dims < 1) {
    throw std::invalid_argument("audit campaign needs 2 <= n_min <= n_max and dims >= 1");
  }
  Rng rng = make_rng(campaign.seed, "audit-instance", static_cast<std::uint64_t>(t));
  const Index n = campaign.n ? *campaign.n
                             : std::uniform_int_distribution<Index>(campaign.n_min, campaign.n_max)(rng);
  if (n < 2) throw std::invalid_argument("audit needs n >= 2 training rows");
  const auto pick = static_cast<std::size_t>(t);
  const std::string token = campaign.regressors[pick % campaign.regressors.size()];
  const double alpha = campaign.alphas[(pick / campaign.regressors.size()) % campaign.alphas.size()];

  const Eigen::VectorXd beta = draw_beta(campaign.dims, rng);
  Dataset points = draw_gaussian_linear(n + 1, beta, rng);
  if (t % 2 == 1) {
    Eigen::MatrixXd x = (points.features() * 2.0).array().round() / 2.0;
    Eigen::VectorXd y = (points.responses() * 2.0).array().round() / 2.0;
    points = Dataset(std::move(x), std::move(y));
  }

  RegressorParams params;
  params.k = std::min(campaign.knn_k, n - 1);
  return AuditInstance{std::move(points), token, Regressor::from_token(token, params), alpha};
}

}  // namespace jkp
