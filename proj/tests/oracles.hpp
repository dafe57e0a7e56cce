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

// Independent reference implementations used by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "uvr/body.hpp"
#include "uvr/dataset.hpp"
#include "uvr/idgraph.hpp"
#include "uvr/raster.hpp"

namespace uvr::oracle {

// Moller-Trumbore; returns the ray parameter of the hit or a negative value.
inline double ray_triangle(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& a,
                           const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return -1.0;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(q) * inv;
}

struct VisibilityComparison {
  long domain = 0;  // texels covered by a retained UV triangle
  long agree = 0;
  double agreement() const { return domain ? static_cast<double>(agree) / domain : 1.0; }
};

// Texel-by-texel visibility by casting a ray from the camera centre to the
// texel's surface point and testing every triangle.
inline VisibilityComparison compare_visibility(const Mesh& mesh, const Camera& cam, const RasterConfig& cfg,
                                               const Mask& zbuffer_mask, Mask* oracle_mask = nullptr) {
  const int size = cfg.texture_size;
  const Eigen::Isometry3d w2c = cam.cam_to_world.inverse();
  const Eigen::Vector3d eye = cam.center();
  const Eigen::Index nf = mesh.face_count();

  // Screen-space bounding boxes only prune triangles that cannot contain the
  // ray's pixel; every candidate is intersected exactly.
  std::vector<Eigen::AlignedBox2d> boxes(static_cast<size_t>(nf));
  for (Eigen::Index f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d pc = w2c * mesh.vertices.col(mesh.faces(k, f));
      boxes[static_cast<size_t>(f)].extend(Eigen::Vector2d(cam.focal * pc.x() / pc.z(), cam.focal * pc.y() / pc.z()));
    }
  }

  // Which face owns each texel, with the barycentric weights of its centre.
  std::vector<int> owner(static_cast<size_t>(size) * size, -1);
  std::vector<Eigen::Vector3d> weights(static_cast<size_t>(size) * size);
  for (Eigen::Index f = 0; f < nf; ++f) {
    bool seam = false;
    for (int k = 0; k < 3; ++k) {
      seam |= (mesh.uv.col(mesh.faces(k, f)) - mesh.uv.col(mesh.faces((k + 1) % 3, f))).norm() > cfg.tau_dist;
    }
    if (seam) continue;
    const Eigen::Vector2d a = mesh.uv.col(mesh.faces(0, f)) * size;
    const Eigen::Vector2d b = mesh.uv.col(mesh.faces(1, f)) * size;
    const Eigen::Vector2d c = mesh.uv.col(mesh.faces(2, f)) * size;
    const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (area == 0.0) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d p(x + 0.5, y + 0.5);
        auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v, const Eigen::Vector2d& q) {
          return (v - u).x() * (q - u).y() - (v - u).y() * (q - u).x();
        };
        const Eigen::Vector3d l(cross(b, c, p) / area, cross(c, a, p) / area, cross(a, b, p) / area);
        if (l.minCoeff() < 0.0) continue;
        const size_t i = static_cast<size_t>(y) * size + x;
        owner[i] = static_cast<int>(f);
        weights[i] = l;
      }
    }
  }

  VisibilityComparison out;
  if (oracle_mask) *oracle_mask = Mask::Zero(size, size);
  for (size_t i = 0; i < owner.size(); ++i) {
    const int f = owner[i];
    if (f < 0) continue;
    ++out.domain;
    const Eigen::Vector3d& l = weights[i];
    const Eigen::Vector3d va = mesh.vertices.col(mesh.faces(0, f));
    const Eigen::Vector3d vb = mesh.vertices.col(mesh.faces(1, f));
    const Eigen::Vector3d vc = mesh.vertices.col(mesh.faces(2, f));
    const Eigen::Vector3d p = l[0] * va + l[1] * vb + l[2] * vc;
    const Eigen::Vector3d pc = w2c * p;
    bool visible = !cfg.cull_backfaces || (vb - va).cross(vc - va).dot(va - eye) < 0.0;
    const double px = cam.focal * pc.x() / pc.z() + cam.principal.x();
    const double py = cam.focal * pc.y() / pc.z() + cam.principal.y();
    visible = visible && pc.z() > 0.0 && px >= 0.0 && px < cam.width && py >= 0.0 && py < cam.height;
    if (visible) {
      const Eigen::Vector2d q(cam.focal * pc.x() / pc.z(), cam.focal * pc.y() / pc.z());
      const Eigen::Vector3d d = p - eye;
      const double t_max = 1.0 - cfg.eps_z / pc.z();
      for (Eigen::Index g = 0; g < nf && visible; ++g) {
        if (g == f || !boxes[static_cast<size_t>(g)].contains(q)) continue;
        if (cfg.cull_backfaces &&
            !((mesh.vertices.col(mesh.faces(1, g)) - mesh.vertices.col(mesh.faces(0, g)))
                  .cross(mesh.vertices.col(mesh.faces(2, g)) - mesh.vertices.col(mesh.faces(0, g)))
                  .dot(mesh.vertices.col(mesh.faces(0, g)) - eye) < 0.0)) {
          continue;
        }
        const double t = ray_triangle(eye, d, mesh.vertices.col(mesh.faces(0, g)), mesh.vertices.col(mesh.faces(1, g)),
                                      mesh.vertices.col(mesh.faces(2, g)));
        if (t > 0.0 && t < t_max) visible = false;
      }
    }
    const bool z = zbuffer_mask(static_cast<Eigen::Index>(i / size), static_cast<Eigen::Index>(i % size)) != 0;
    out.agree += z == visible;
    if (oracle_mask) (*oracle_mask)(static_cast<Eigen::Index>(i / size), static_cast<Eigen::Index>(i % size)) = visible;
  }
  return out;
}

// A random pose: bucket pose with generous jitter and free global yaw.
inline PoseParams random_pose(Rng& rng, const BodyConfig& body = {}) {
  const int bucket = std::uniform_int_distribution<int>(0, kPoseBuckets - 1)(rng);
  return jittered_pose(bucket, rng, 15.0, 30.0, body);
}

// Camera on a circle around the body looking at its centre.
inline Camera random_camera(Rng& rng, int size = 256) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double yaw = 0.5 * u(rng);
  const double dist = 2.3 + 0.2 * u(rng);
  const double height = 0.05 + 0.2 * u(rng);
  const Eigen::Vector3d eye(dist * std::sin(yaw), height, dist * std::cos(yaw));
  return Camera::look_at(eye, Eigen::Vector3d(0.0, 0.05, 0.0), 256.0 * size / 256.0, size, size);
}

// `clusters` groups of `size` unit vectors whose pairwise cosine is close to
// `within` inside a group and `cross` across groups, built from a shared
// axis, one axis per group and one private axis per vector, plus small noise.
// Ids are "k<cluster>_<member>"; the capture group cycles over three labels
// independently of the cluster.
inline std::vector<EmbeddingRecord> planted_partition(int clusters, int size, double within, double cross, Rng& rng,
                                                      double noise = 0.01) {
  const int n = clusters * size;
  const int dim = 1 + clusters + n + 32;
  std::normal_distribution<double> g(0.0, noise);
  std::vector<EmbeddingRecord> out;
  for (int k = 0; k < clusters; ++k) {
    for (int m = 0; m < size; ++m) {
      const int i = k * size + m;
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      v[0] = std::sqrt(cross);
      v[1 + k] = std::sqrt(within - cross);
      v[1 + clusters + i] = std::sqrt(1.0 - within);
      for (int d = 1 + clusters + n; d < dim; ++d) v[d] = g(rng);
      EmbeddingRecord r;
      r.id = "k" + std::to_string(k) + "_" + std::to_string(m);
      r.group = "g" + std::to_string(i % 3);
      r.vector = v.normalized();
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace uvr::oracle
