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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace uvr {

inline double edge_fn(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

/// Visits every cell of a w x h grid whose centre (x + 0.5, y + 0.5) lies in
/// the triangle, with the top-left rule deciding centres exactly on an edge.
/// fn(x, y, b) receives barycentric weights of the centre w.r.t. (a, b, c).
template <typename Fn>
void scan_triangle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                   int w, int h, Fn&& fn) {
  const double area = edge_fn(a, b, c);
  if (area == 0.0 || !std::isfinite(area)) return;
  // Work in positive orientation; keep the caller's vertex order for weights.
  const Eigen::Vector2d* v[3] = {&a, &b, &c};
  int order[3] = {0, 1, 2};
  if (area < 0.0) std::swap(order[1], order[2]);
  const Eigen::Vector2d& p0 = *v[order[0]];
  const Eigen::Vector2d& p1 = *v[order[1]];
  const Eigen::Vector2d& p2 = *v[order[2]];
  const double signed_area = std::abs(area);

  auto top_left = [](const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
    const double dx = to.x() - from.x();
    const double dy = to.y() - from.y();
    return dy < 0.0 || (dy == 0.0 && dx > 0.0);
  };
  // Edge k is opposite vertex k.
  const bool tl0 = top_left(p1, p2);
  const bool tl1 = top_left(p2, p0);
  const bool tl2 = top_left(p0, p1);

  const double min_x = std::min({p0.x(), p1.x(), p2.x()});
  const double max_x = std::max({p0.x(), p1.x(), p2.x()});
  const double min_y = std::min({p0.y(), p1.y(), p2.y()});
  const double max_y = std::max({p0.y(), p1.y(), p2.y()});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(max_y - 0.5)));

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d p(x + 0.5, y + 0.5);
      const double w0 = edge_fn(p1, p2, p);
      const double w1 = edge_fn(p2, p0, p);
      const double w2 = edge_fn(p0, p1, p);
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
      if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) continue;
      double bary[3];
      bary[order[0]] = w0 / signed_area;
      bary[order[1]] = w1 / signed_area;
      bary[order[2]] = w2 / signed_area;
      fn(x, y, Eigen::Vector3d(bary[0], bary[1], bary[2]));
    }
  }
}

/// Barycentric weights of p w.r.t. (a, b, c); extrapolates outside.
inline Eigen::Vector3d barycentric(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                   const Eigen::Vector2d& c, const Eigen::Vector2d& p) {
  const double area = edge_fn(a, b, c);
  return {edge_fn(b, c, p) / area, edge_fn(c, a, p) / area, edge_fn(a, b, p) / area};
}

/// Per-pixel nearest-surface record.
struct DepthBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // +inf where empty
  std::vector<int> face;      // -1 where empty
  std::vector<Eigen::Vector3d> bary;

  DepthBuffer(int w, int h)
      : width(w),
        height(h),
        depth(static_cast<size_t>(w) * h, std::numeric_limits<double>::infinity()),
        face(static_cast<size_t>(w) * h, -1),
        bary(static_cast<size_t>(w) * h, Eigen::Vector3d::Zero()) {}

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

}  // namespace uvr
