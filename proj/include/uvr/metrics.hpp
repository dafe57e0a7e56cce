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

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uvr/body.hpp"
#include "uvr/idgraph.hpp"
#include "uvr/image.hpp"

namespace uvr {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over the pixels where mask is set (all channels).
/// Identical inputs give kInfinitePsnr.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

/// Mean local SSIM of the channel-mean grayscale images over every window that
/// fits inside the image; with a mask, only windows centred on set pixels count.
double ssim(const Image& a, const Image& b, const Mask* mask = nullptr, const SsimParams& params = {});

/// exp(-d^2 / (2 area k^2)) averaged over visible ground-truth keypoints.
/// `k` holds per-keypoint constants keyed by name; missing names use
/// default_k.
double oks(const KeypointSet& pred, const KeypointSet& gt, double area, const std::map<std::string, double>& k = {},
           double default_k = 0.07);

template <typename DerivedA, typename DerivedB>
double face_sim(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return cosine_sim(a, b);
}

/// Per-sample metric rows; aggregate means skip infinite values and count them.
class MetricReport {
 public:
  void add(const std::string& sample_id, const std::map<std::string, double>& values);

  const std::vector<std::string>& columns() const { return columns_; }
  size_t sample_count() const { return rows_.size(); }
  double value(size_t row, const std::string& column) const;

  struct Summary {
    double mean = 0.0;
    long finite = 0;
    long infinite = 0;
  };
  Summary summary(const std::string& column) const;

  void write_csv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> ids_;
  std::vector<std::map<std::string, double>> rows_;
};

/// Shortest decimal form that round-trips, "inf" for infinities.
std::string format_metric(double v);

}  // namespace uvr
