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
#include "uvr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace uvr {

namespace {

using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_pair(const Image& a, const Image& b, const Mask* mask, const char* what) {
  if (!a.same_shape(b)) throw InputError(std::string(what) + ": image shapes differ");
  if (a.empty()) throw InputError(std::string(what) + ": empty image");
  if (mask && (mask->rows() != a.height() || mask->cols() != a.width())) {
    throw InputError(std::string(what) + ": mask shape does not match image");
  }
}

Plane gray(const Image& img) {
  Plane g = Plane::Zero(img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c) g += img.plane(c).cast<double>();
  return g / img.channels();
}

// 'valid' separable correlation: output (H - n + 1) x (W - n + 1).
Plane filter_valid(const Plane& src, const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  const Eigen::Index oh = src.rows() - n + 1;
  const Eigen::Index ow = src.cols() - n + 1;
  Plane rows = Plane::Zero(src.rows(), ow);
  for (Eigen::Index k = 0; k < n; ++k) rows += w[k] * src.middleCols(k, ow);
  Plane out = Plane::Zero(oh, ow);
  for (Eigen::Index k = 0; k < n; ++k) out += w[k] * rows.middleRows(k, oh);
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, const Mask* mask) {
  check_pair(a, b, mask, "psnr");
  double sse = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    const Plane d = (a.plane(c).cast<double>() - b.plane(c).cast<double>()).square();
    if (mask) {
      sse += (d * mask->cast<double>()).sum();
      count += mask->cast<long>().sum();
    } else {
      sse += d.sum();
      count += d.size();
    }
  }
  if (count == 0) throw InputError("psnr: mask selects no pixels");
  const double mse = sse / static_cast<double>(count);
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, const Mask* mask, const SsimParams& p) {
  check_pair(a, b, mask, "ssim");
  if (p.window < 1 || p.window % 2 == 0) throw ConfigError("ssim window must be odd and positive");
  if (a.width() < p.window || a.height() < p.window) {
    throw InputError("ssim: image " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " is smaller than the " + std::to_string(p.window) + "x" + std::to_string(p.window) + " window");
  }
  const int r = p.window / 2;
  Eigen::VectorXd w(p.window);
  for (int i = 0; i < p.window; ++i) w[i] = std::exp(-0.5 * (i - r) * (i - r) / (p.sigma * p.sigma));
  w /= w.sum();

  const Plane x = gray(a);
  const Plane y = gray(b);
  const Plane mx = filter_valid(x, w);
  const Plane my = filter_valid(y, w);
  const Plane sxx = filter_valid(x * x, w) - mx.square();
  const Plane syy = filter_valid(y * y, w) - my.square();
  const Plane sxy = filter_valid(x * y, w) - mx * my;
  const Plane map = ((2 * mx * my + p.c1) * (2 * sxy + p.c2)) /
                    ((mx.square() + my.square() + p.c1) * (sxx + syy + p.c2));

  if (!mask) return map.mean();
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < map.rows(); ++i)
    for (Eigen::Index j = 0; j < map.cols(); ++j)
      if ((*mask)(i + r, j + r)) {
        sum += map(i, j);
        ++n;
      }
  if (n == 0) throw InputError("ssim: mask selects no window centres");
  return sum / static_cast<double>(n);
}

double oks(const KeypointSet& pred, const KeypointSet& gt, double area, const std::map<std::string, double>& k,
           double default_k) {
  if (!(area > 0.0)) throw InputError("oks: object area must be positive");
  double sum = 0.0;
  int n = 0;
  for (const Keypoint& g : gt) {
    if (!g.visible) continue;
    auto it = std::find_if(pred.begin(), pred.end(), [&](const Keypoint& q) { return q.name == g.name; });
    if (it == pred.end()) throw InputError("oks: prediction lacks keypoint '" + g.name + "'");
    const auto kit = k.find(g.name);
    const double kk = kit == k.end() ? default_k : kit->second;
    const double d2 = (it->position - g.position).squaredNorm();
    sum += std::exp(-d2 / (2.0 * area * kk * kk));
    ++n;
  }
  if (n == 0) throw InputError("oks: no visible ground-truth keypoints");
  return sum / n;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void MetricReport::add(const std::string& sample_id, const std::map<std::string, double>& values) {
  for (const auto& [name, v] : values) {
    if (std::isnan(v)) throw NumericError("metric '" + name + "' is NaN for sample " + sample_id);
    if (std::find(columns_.begin(), columns_.end(), name) == columns_.end()) columns_.push_back(name);
  }
  ids_.push_back(sample_id);
  rows_.push_back(values);
}

double MetricReport::value(size_t row, const std::string& column) const {
  const auto it = rows_.at(row).find(column);
  if (it == rows_[row].end()) throw InputError("metric report has no '" + column + "' for row " + ids_[row]);
  return it->second;
}

MetricReport::Summary MetricReport::summary(const std::string& column) const {
  Summary s;
  double sum = 0.0;
  for (const auto& row : rows_) {
    const auto it = row.find(column);
    if (it == row.end()) continue;
    if (std::isinf(it->second)) {
      ++s.infinite;
    } else {
      sum += it->second;
      ++s.finite;
    }
  }
  s.mean = s.finite ? sum / static_cast<double>(s.finite) : 0.0;
  return s;
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sample";
  for (const auto& c : columns_) out << ',' << c;
  out << '\n';
  for (size_t i = 0; i < rows_.size(); ++i) {
    out << ids_[i];
    for (const auto& c : columns_) {
      const auto it = rows_[i].find(c);
      out << ',' << (it == rows_[i].end() ? std::string() : format_metric(it->second));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void MetricReport::write_json(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["samples"] = rows_.size();
  for (const auto& c : columns_) {
    const Summary s = summary(c);
    j["metrics"][c] = {{"mean", s.mean}, {"finite", s.finite}, {"infinite", s.infinite}};
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace uvr
