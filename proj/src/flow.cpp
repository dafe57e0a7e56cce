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
#include "uvr/flow.hpp"

#include <numbers>

namespace uvr {

Scheme scheme_from_name(std::string_view name) {
  if (name == "euler") return Scheme::kEuler;
  if (name == "heun") return Scheme::kHeun;
  throw ConfigError("unknown sampler scheme '" + std::string(name) + "' (expected euler or heun)");
}

std::string_view scheme_name(Scheme s) { return s == Scheme::kEuler ? "euler" : "heun"; }

namespace {

double mean_pairwise(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) sum += (b.colwise() - a.col(i)).colwise().norm().sum();
  return sum / (static_cast<double>(a.cols()) * static_cast<double>(b.cols()));
}

}  // namespace

double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() == 0 || y.cols() == 0) throw InputError("energy_distance: bad sample sets");
  return 2.0 * mean_pairwise(x, y) - mean_pairwise(x, x) - mean_pairwise(y, y);
}

Eigen::MatrixXd gaussian_ring(int n, Rng& rng, int modes, double radius, double stddev) {
  if (n < 0 || modes < 1) throw InputError("gaussian_ring: bad arguments");
  std::uniform_int_distribution<int> pick(0, modes - 1);
  std::normal_distribution<double> noise(0.0, stddev);
  Eigen::MatrixXd out(2, n);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * pick(rng) / modes;
    const double nx = noise(rng);
    const double ny = noise(rng);
    out(0, i) = radius * std::cos(a) + nx;
    out(1, i) = radius * std::sin(a) + ny;
  }
  return out;
}

}  // namespace uvr
