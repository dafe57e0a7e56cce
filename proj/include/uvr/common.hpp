// Copyright 2026 The uvrepose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace uvr {

// Error taxonomy. Every failure the library reports is one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, long vertex)
      : Error(what), vertex_(vertex) {}
  long vertex() const noexcept { return vertex_; }

 private:
  long vertex_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Binary H x W grid, row-major, values in {0, 1}.
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

/// Derives an independent generator for a named sub-experiment from the root
/// seed, so each stream is reproducible regardless of what the others consume.
Rng stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);

/// Non-fatal diagnostics go through one replaceable sink (stderr by default).
using WarningSink = std::function<void(std::string_view)>;
void warn(std::string_view message);
WarningSink set_warning_sink(WarningSink sink);

}  // namespace uvr
