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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "uvr/metrics.hpp"

using namespace uvr;
namespace fs = std::filesystem;

namespace {

Image noise_image(int w, int h, Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, 3);
  for (Eigen::Index i = 0; i < img.data().size(); ++i) img.data()[i] = u(rng);
  return img;
}

// Direct double loop over every window position with explicit weighted
// moments.
double ssim_brute(const Image& a, const Image& b, int n = 11, double sigma = 1.5) {
  const double c1 = 1e-4, c2 = 9e-4;
  const int r = n / 2;
  std::vector<double> w(static_cast<size_t>(n * n));
  double total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) total += w[static_cast<size_t>(i * n + j)] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2 * sigma * sigma));
  auto g = [](const Image& im, int y, int x) {
    double s = 0;
    for (int c = 0; c < im.channels(); ++c) s += im.at(c, y, x);
    return s / im.channels();
  };
  double sum = 0;
  int count = 0;
  for (int y0 = 0; y0 + n <= a.height(); ++y0) {
    for (int x0 = 0; x0 + n <= a.width(); ++x0) {
      double mx = 0, my = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double k = w[static_cast<size_t>(i * n + j)] / total;
          mx += k * g(a, y0 + i, x0 + j);
          my += k * g(b, y0 + i, x0 + j);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double k = w[static_cast<size_t>(i * n + j)] / total;
          const double dx = g(a, y0 + i, x0 + j) - mx, dy = g(b, y0 + i, x0 + j) - my;
          vx += k * dx * dx;
          vy += k * dy * dy;
          cxy += k * dx * dy;
        }
      sum += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / count;
}

}  // namespace

TEST_CASE("psnr") {
  Rng rng(1);
  const Image a = noise_image(16, 16, rng);
  CHECK(psnr(a, a) == kInfinitePsnr);
  CHECK(psnr(Image(8, 8, 3, 0.0f), Image(8, 8, 3, 0.1f)) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr(Image(8, 8, 3, 0.0f), Image(8, 8, 3, 1.0f)) == 0.0);

  Mask m = Mask::Zero(8, 8);
  CHECK_THROWS_AS(psnr(Image(8, 8, 3), Image(8, 8, 3), &m), InputError);
  CHECK_THROWS_AS(psnr(Image(8, 8, 3), Image(4, 8, 3)), InputError);

  // The masked value only sees the selected pixels.
  Image b(8, 8, 3, 0.0f);
  m(2, 3) = 1;
  for (int c = 0; c < 3; ++c) b.at(c, 0, 0) = 1.0f;
  CHECK(psnr(Image(8, 8, 3, 0.0f), b, &m) == kInfinitePsnr);

  double prev = kInfinitePsnr;
  for (float amp : {0.01f, 0.02f, 0.05f, 0.1f, 0.2f}) {
    Image n = a;
    Rng r(2);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (Eigen::Index i = 0; i < n.data().size(); ++i) n.data()[i] += amp * u(r);
    const double v = psnr(a, n);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim") {
  Rng rng(3);
  const Image a = noise_image(24, 20, rng), b = noise_image(24, 20, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  CHECK(ssim(Image(16, 16, 3, 0.0f), Image(16, 16, 3, 1.0f)) == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-9));
  CHECK(ssim(a, b) == doctest::Approx(ssim_brute(a, b)).epsilon(1e-9));
  Image c = a;
  for (Eigen::Index i = 0; i < c.data().size(); ++i) c.data()[i] = 0.5f * c.data()[i] + 0.25f * b.data()[i];
  CHECK(ssim(a, c) == doctest::Approx(ssim_brute(a, c)).epsilon(1e-9));
  CHECK_THROWS_AS(ssim(Image(10, 10, 3), Image(10, 10, 3)), InputError);

  // With every centre selected the mask changes nothing.
  const Mask all = Mask::Ones(20, 24);
  CHECK(ssim(a, b, &all) == doctest::Approx(ssim(a, b)).epsilon(1e-14));
  const Mask none = Mask::Zero(20, 24);
  CHECK_THROWS_AS(ssim(a, b, &none), InputError);
}

TEST_CASE("oks") {
  const KeypointSet gt = {{"a", {10, 10}, true}, {"b", {20, 20}, true}, {"c", {0, 0}, false}};
  CHECK(oks(gt, gt, 100.0) == 1.0);
  KeypointSet pred = gt;
  // d^2 = 2 area k^2 gives exp(-1) for that keypoint.
  const double k = 0.07, area = 100.0;
  pred[0].position.x() += std::sqrt(2.0 * area * k * k);
  CHECK(oks(pred, gt, area) == doctest::Approx((std::exp(-1.0) + 1.0) / 2.0).epsilon(1e-12));
  // Invisible ground truth does not count.
  pred = gt;
  pred[2].position = {500, 500};
  CHECK(oks(pred, gt, area) == 1.0);

  KeypointSet shifted_pred = pred, shifted_gt = gt;
  for (auto* s : {&shifted_pred, &shifted_gt})
    for (Keypoint& p : *s) p.position += Eigen::Vector2d(37, -11);
  pred[1].position.y() += 3;
  shifted_pred[1].position.y() += 3;
  CHECK(oks(pred, gt, area) == doctest::Approx(oks(shifted_pred, shifted_gt, area)).epsilon(1e-12));

  KeypointSet hidden = gt;
  for (Keypoint& p : hidden) p.visible = false;
  CHECK_THROWS_AS(oks(gt, hidden, area), InputError);
  CHECK_THROWS_AS(oks(gt, gt, 0.0), InputError);
}

TEST_CASE("face similarity") {
  const Eigen::Vector3d a(1, 2, 3), b(-2, 0.5, 1);
  CHECK(face_sim(a, b) == doctest::Approx(face_sim(4.0 * a, 0.25 * b)).epsilon(1e-14));
  CHECK(face_sim(a, a) == doctest::Approx(1.0));
  CHECK(face_sim(a, -a) == doctest::Approx(-1.0));
}

TEST_CASE("metric report") {
  MetricReport r;
  r.add("s0", {{"psnr", 20.0}, {"ssim", 0.5}});
  r.add("s1", {{"psnr", kInfinitePsnr}, {"ssim", 0.7}});
  r.add("s2", {{"psnr", 30.0}, {"ssim", 0.9}});
  CHECK(r.sample_count() == 3);
  const auto s = r.summary("psnr");
  CHECK(s.mean == 25.0);
  CHECK(s.finite == 2);
  CHECK(s.infinite == 1);
  CHECK(r.summary("ssim").mean == doctest::Approx(0.7));
  CHECK(r.value(1, "ssim") == 0.7);
  CHECK_THROWS_AS(r.add("bad", {{"psnr", std::nan("")}}), NumericError);

  const fs::path p = fs::temp_directory_path() / "uvr_test_metrics.csv";
  r.write_csv(p);
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string csv = ss.str();
  CHECK(csv.find("inf") != std::string::npos);
  CHECK(csv.find("s2") != std::string::npos);
  fs::remove(p);

  CHECK(format_metric(kInfinitePsnr) == "inf");
  CHECK(format_metric(0.1) == "0.1");
  for (double v : {1.0 / 3.0, 12345.678, 1e-300}) CHECK(std::stod(format_metric(v)) == v);
}
