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
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Core>

#include "jkp/data.hpp"
#include "jkp/random.hpp"

namespace jkp::testing {

/// One feature 0, 1, 2 and responses 0, 0, 3: small enough to do by hand.
inline Dataset worked() {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 0, 0, 3;
  return Dataset(x, y);
}

inline Eigen::RowVectorXd row(std::initializer_list<double> values) {
  Eigen::RowVectorXd r(static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) r(i++) = v;
  return r;
}

inline Dataset gaussian(Index n, Index d, std::uint64_t seed) { return gen_gaussian_linear(n, d, seed).data; }

/// Rows rounded to a half-integer grid so ties appear often.
inline Dataset lumpy(Index n, Index d, std::uint64_t seed) {
  const Dataset g = gaussian(n, d, seed);
  Eigen::MatrixXd x = (g.features() * 2.0).array().round() / 2.0;
  Eigen::VectorXd y = (g.responses() * 2.0).array().round() / 2.0;
  return Dataset(x, y);
}

/// A scratch file under the system temp directory, removed on scope exit.
class TempFile {
 public:
  explicit TempFile(const std::string& name, const std::string& contents = {})
      : path_(std::filesystem::temp_directory_path() / ("jkp_test_" + name)) {
    if (!contents.empty()) {
      std::ofstream(path_, std::ios::binary) << contents;
    }
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace jkp::testing
