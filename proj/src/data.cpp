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

#include "jkp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace jkp {

DataError::DataError(const std::string& what, Index row, Index column)
    : std::runtime_error(what), row_(row), column_(column) {}

Dataset::Dataset(Eigen::MatrixXd features, Eigen::VectorXd responses,
                 std::vector<std::string> feature_names, std::string target_name)
    : features_(std::move(features)),
      responses_(std::move(responses)),
      feature_names_(std::move(feature_names)),
      target_name_(std::move(target_name)) {
  if (features_.rows() != responses_.size()) {
    throw std::invalid_argument("feature rows and response length differ");
  }
  if (!features_.allFinite() || !responses_.allFinite()) {
    throw std::invalid_argument("dataset entries must be finite");
  }
  if (feature_names_.empty()) {
    for (Index j = 0; j < features_.cols(); ++j) feature_names_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Index>(feature_names_.size()) != features_.cols()) {
    throw std::invalid_argument("feature name count differs from column count");
  }
}

Dataset Dataset::subset(std::span<const Index> indices) const {
  Eigen::MatrixXd x(static_cast<Index>(indices.size()), dims());
  Eigen::VectorXd y(static_cast<Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    x.row(static_cast<Index>(r)) = features_.row(indices[r]);
    y(static_cast<Index>(r)) = responses_(indices[r]);
  }
  return Dataset(std::move(x), std::move(y), feature_names_, target_name_);
}

Dataset Dataset::without(std::span<const Index> removed) const {
  std::vector<char> drop(static_cast<std::size_t>(rows()), 0);
  for (Index i : removed) drop.at(static_cast<std::size_t>(i)) = 1;
  std::vector<Index> keep;
  keep.reserve(drop.size());
  for (Index i = 0; i < rows(); ++i) {
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  return subset(keep);
}

Dataset Dataset::without(Index removed) const {
  const Index one[] = {removed};
  return without(std::span<const Index>(one));
}

Dataset Dataset::with_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const {
  if (x.size() != dims()) throw std::invalid_argument("appended row has wrong dimension");
  Eigen::MatrixXd features(rows() + 1, dims());
  features.topRows(rows()) = features_;
  features.row(rows()) = x;
  Eigen::VectorXd responses(rows() + 1);
  responses.head(rows()) = responses_;
  responses(rows()) = y;
  return Dataset(std::move(features), std::move(responses), feature_names_, target_name_);
}

Dataset Dataset::with_responses(Eigen::VectorXd responses) const {
  return Dataset(features_, std::move(responses), feature_names_, target_name_);
}

Dataset Dataset::canonical() const {
  std::vector<Index> order(static_cast<std::size_t>(rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < dims(); ++j) {
      const double u = features_(a, j), v = features_(b, j);
      if (u < v) return true;
      if (v < u) return false;
    }
    return responses_(a) < responses_(b);
  });
  return subset(order);
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, Index row, Index line, Index column) {
  const auto where = " at row " + std::to_string(row) + " (line " + std::to_string(line) + "), column " +
                     std::to_string(column);
  if (cell.empty()) throw DataError("empty cell" + where, row, column);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("non-numeric cell '" + cell + "'" + where, row, column);
  }
  if (!std::isfinite(value)) throw DataError("non-finite cell '" + cell + "'" + where, row, column);
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  RawTable table;
  std::string line;
  Index row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (table.header.empty()) {
      if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) cells.front() = trim(cells.front().substr(3));
      table.header = std::move(cells);
      continue;
    }
    // Rows are numbered from the first data row; line numbers count the header.
    const auto data_row = static_cast<Index>(table.rows.size()) + 1;
    if (cells.size() != table.header.size()) {
      throw DataError("row " + std::to_string(data_row) + " (line " + std::to_string(row) + ") has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(table.header.size()),
                      data_row);
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      values[c] = parse_cell(cells[c], data_row, row, static_cast<Index>(c + 1));
    }
    table.rows.push_back(std::move(values));
  }
  if (table.header.empty()) throw DataError("empty file " + path.string());
  if (table.rows.empty()) throw DataError("no data rows in " + path.string());
  return table;
}

std::optional<std::size_t> find_target(const RawTable& table, const std::string& target) {
  std::optional<std::size_t> found;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] != target) continue;
    if (found) {
      throw DataError("duplicate target column '" + target + "' (columns " + std::to_string(*found + 1) +
                          " and " + std::to_string(c + 1) + ")",
                      1, static_cast<Index>(c + 1));
    }
    found = c;
  }
  return found;
}

FeatureTable to_features(const RawTable& table, std::optional<std::size_t> target) {
  const auto n = static_cast<Index>(table.rows.size());
  const auto width = static_cast<Index>(table.header.size());
  const Index d = target ? width - 1 : width;
  FeatureTable out;
  out.features.resize(n, d);
  if (target) out.responses = Eigen::VectorXd(n);
  for (Index c = 0, j = 0; c < width; ++c) {
    if (target && static_cast<std::size_t>(c) == *target) continue;
    out.feature_names.push_back(table.header[static_cast<std::size_t>(c)]);
    for (Index i = 0; i < n; ++i) out.features(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    ++j;
  }
  if (target) {
    for (Index i = 0; i < n; ++i) (*out.responses)(i) = table.rows[static_cast<std::size_t>(i)][*target];
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  const RawTable table = read_table(path);
  const auto target = find_target(table, target_column);
  if (!target) throw DataError("target column '" + target_column + "' not found in " + path.string(), 1);
  FeatureTable t = to_features(table, target);
  return Dataset(std::move(t.features), std::move(*t.responses), std::move(t.feature_names), target_column);
}

FeatureTable load_feature_csv(const std::filesystem::path& path, const std::string& target_column) {
  const RawTable table = read_table(path);
  return to_features(table, find_target(table, target_column));
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& name : data.feature_names()) out << name << ',';
  out << data.target_name() << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.dims(); ++j) out << format_number(data.features()(i, j)) << ',';
    out << format_number(data.y(i)) << '\n';
  }
}

Split resolve_split(const SplitSpec& spec, Index n) {
  Split split;
  if (!spec.train_indices.empty() || !spec.holdout_indices.empty()) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto* list : {&spec.train_indices, &spec.holdout_indices}) {
      for (Index i : *list) {
        if (i < 0 || i >= n) throw std::invalid_argument("split index out of range");
        if (seen[static_cast<std::size_t>(i)]++) throw std::invalid_argument("split index listed twice");
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw std::invalid_argument("explicit split does not cover every row");
    }
    split.train = spec.train_indices;
    split.holdout = spec.holdout_indices;
  } else {
    if (!(spec.holdout_fraction >= 0.0 && spec.holdout_fraction <= 1.0)) {
      throw std::invalid_argument("holdout fraction must lie in [0, 1]");
    }
    const auto holdout = static_cast<Index>(std::lround(spec.holdout_fraction * static_cast<double>(n)));
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(spec.seed, "split");
    std::shuffle(order.begin(), order.end(), rng);
    split.holdout.assign(order.begin(), order.begin() + holdout);
    split.train.assign(order.begin() + holdout, order.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

Eigen::VectorXd draw_beta(Index d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index j = 0; j < d; ++j) u(j) = normal(rng);
    norm = u.norm();
  }
  return std::sqrt(10.0) * u / norm;
}

Dataset draw_gaussian_linear(Index n, const Eigen::VectorXd& beta, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, beta.size());
  Eigen::VectorXd noise(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < beta.size(); ++j) x(i, j) = normal(rng);
    noise(i) = normal(rng);
  }
  Eigen::VectorXd y = x * beta + noise;
  return Dataset(std::move(x), std::move(y));
}

GaussianLinear gen_gaussian_linear(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("n and d must be at least 1");
  Rng beta_rng = make_rng(seed, "gaussian-linear/beta");
  Rng row_rng = make_rng(seed, "gaussian-linear/rows");
  GaussianLinear out;
  out.beta = draw_beta(d, beta_rng);
  out.data = draw_gaussian_linear(n, out.beta, row_rng);
  return out;
}

Dataset draw_pathological_abc(Index n, double alpha, double gamma, Rng& rng) {
  const double rate = 2.0 * alpha * (1.0 - gamma);
  if (!(rate > 0.0 && rate < 1.0)) {
    throw std::invalid_argument("pathological distribution needs 0 < 2 alpha (1 - gamma) < 1");
  }
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  std::bernoulli_distribution a_dist(rate);
  std::bernoulli_distribution b_dist(0.5);
  std::uniform_real_distribution<double> c_dist(-1.0, 1.0);
  Eigen::MatrixXd x(n, 3);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = a_dist(rng) ? 1.0 : 0.0;
    x(i, 1) = b_dist(rng) ? 1.0 : -1.0;
    x(i, 2) = c_dist(rng);
  }
  return Dataset(std::move(x), Eigen::VectorXd::Zero(n), {"a", "b", "c"});
}

Dataset gen_pathological_abc(Index n, double alpha, double gamma, std::uint64_t seed) {
  Rng rng = make_rng(seed, "pathological-abc");
  return draw_pathological_abc(n, alpha, gamma, rng);
}

Dataset attach_tau(const Dataset& data, double tau) {
  if (data.dims() < 1) throw std::invalid_argument("attach_tau needs the A column");
  return data.with_responses(tau * data.features().col(0));
}

}  // namespace jkp
