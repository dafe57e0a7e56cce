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
#include "uvr/raster.hpp"

#include <algorithm>
#include <cmath>

namespace uvr {

void TextureMap::enforce_mask() {
  for (int c = 0; c < pixels.channels(); ++c) pixels.plane(c) *= mask.cast<float>();
}

void RasterConfig::validate() const {
  if (!(tau_dist >= 0.0 && tau_dist <= 1.0)) throw ConfigError("tau_dist must lie in [0, 1]");
  if (!(eps_z > 0.0)) throw ConfigError("eps_z must be positive");
  if (texture_size < 1 || (texture_size & (texture_size - 1)) != 0) {
    throw ConfigError("texture size must be a power of two");
  }
}

bool front_facing(const Mesh& mesh, Eigen::Index f, const Eigen::Vector3d& eye) {
  const Eigen::Vector3d a = mesh.vertices.col(mesh.faces(0, f));
  const Eigen::Vector3d b = mesh.vertices.col(mesh.faces(1, f));
  const Eigen::Vector3d c = mesh.vertices.col(mesh.faces(2, f));
  return (b - a).cross(c - a).dot(a - eye) < 0.0;
}

DepthBuffer depth_pass(const Mesh& mesh, const ImageCoords& ic, const Camera& camera, bool cull) {
  DepthBuffer zb(camera.width, camera.height);
  const Eigen::Vector3d eye = camera.center();
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    if (cull && !front_facing(mesh, f, eye)) continue;
    const Eigen::Vector3i tri = mesh.faces.col(f);
    const Eigen::Vector3d inv_z(1.0 / ic.depth[tri[0]], 1.0 / ic.depth[tri[1]], 1.0 / ic.depth[tri[2]]);
    scan_triangle(ic.pixels.col(tri[0]), ic.pixels.col(tri[1]), ic.pixels.col(tri[2]), zb.width, zb.height,
                  [&](int x, int y, const Eigen::Vector3d& b) {
                    const double z = 1.0 / b.dot(inv_z);
                    const size_t i = zb.index(x, y);
                    if (z < zb.depth[i]) {
                      zb.depth[i] = z;
                      zb.face[i] = static_cast<int>(f);
                      zb.bary[i] = b;
                    }
                  });
  }
  return zb;
}

namespace {

bool seam_filtered(const Mesh& mesh, Eigen::Index f, double tau) {
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d a = mesh.uv.col(mesh.faces(k, f));
    const Eigen::Vector2d b = mesh.uv.col(mesh.faces((k + 1) % 3, f));
    if ((a - b).norm() > tau) return true;
  }
  return false;
}

// Faces sharing a vertex with each face.
std::vector<std::vector<int>> face_neighbours(const Mesh& mesh) {
  std::vector<std::vector<int>> by_vertex(static_cast<size_t>(mesh.vertices.cols()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
    for (int k = 0; k < 3; ++k) by_vertex[static_cast<size_t>(mesh.faces(k, f))].push_back(static_cast<int>(f));
  std::vector<std::vector<int>> out(static_cast<size_t>(mesh.face_count()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    auto& n = out[static_cast<size_t>(f)];
    for (int k = 0; k < 3; ++k) {
      const auto& v = by_vertex[static_cast<size_t>(mesh.faces(k, f))];
      n.insert(n.end(), v.begin(), v.end());
    }
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return out;
}

struct Occlusion {
  const DepthBuffer& zb;
  const ImageCoords& ic;
  const Mesh& mesh;
  const std::vector<std::vector<int>>& neighbours;
  const std::vector<char>& drawn;  // faces the depth pass rasterized
  std::vector<int> seen;

  // True when a face stored in the z-buffer around `src`, or one of its
  // neighbours, covers `src` closer than `limit`. Each candidate's own plane
  // is evaluated at `src`, so thin occluders that own no pixel centre and
  // silhouettes that split a pixel are resolved exactly.
  bool operator()(int self, const Eigen::Vector2d& src, double limit) {
    const int cx = static_cast<int>(src.x()), cy = static_cast<int>(src.y());
    seen.clear();
    for (int y = std::max(0, cy - 1); y <= std::min(zb.height - 1, cy + 1); ++y) {
      for (int x = std::max(0, cx - 1); x <= std::min(zb.width - 1, cx + 1); ++x) {
        const int g = zb.face[zb.index(x, y)];
        if (g < 0) continue;
        for (int h : neighbours[static_cast<size_t>(g)]) {
          if (h == self || !drawn[static_cast<size_t>(h)] || std::find(seen.begin(), seen.end(), h) != seen.end()) {
            continue;
          }
          seen.push_back(h);
          if (covers(h, src, limit)) return true;
        }
      }
    }
    return false;
  }

  bool covers(int g, const Eigen::Vector2d& src, double limit) const {
    const Eigen::Vector3i t = mesh.faces.col(g);
    const Eigen::Vector2d a = ic.pixels.col(t[0]), b = ic.pixels.col(t[1]), c = ic.pixels.col(t[2]);
    if (edge_fn(a, b, c) == 0.0) return false;
    const Eigen::Vector3d beta = barycentric(a, b, c, src);
    if (beta.minCoeff() < 0.0) return false;
    const double inv = beta.dot(Eigen::Vector3d(1.0 / ic.depth[t[0]], 1.0 / ic.depth[t[1]], 1.0 / ic.depth[t[2]]));
    return inv > 0.0 && 1.0 / inv < limit;
  }
};

// Shared by rasterize_uv and visibility_mask so their masks agree bit-exactly.
TextureMap uv_pass(const Mesh& mesh, const Camera& camera, const RasterConfig& config, const Image* image) {
  config.validate();
  camera.validate();
  if (image && (image->width() != camera.width || image->height() != camera.height)) {
    throw InputError("image resolution " + std::to_string(image->width()) + "x" + std::to_string(image->height()) +
                     " does not match camera " + std::to_string(camera.width) + "x" + std::to_string(camera.height));
  }
  const int size = config.texture_size;
  const int channels = image ? image->channels() : 1;
  TextureMap tex{Image(size, size, channels), Mask::Zero(size, size)};
  if (mesh.face_count() == 0) return tex;

  const ImageCoords ic = project(mesh, camera);
  // Phase one: the complete z-buffer. Phase two below only reads it.
  const DepthBuffer zb = depth_pass(mesh, ic, camera, config.cull_backfaces);
  const Eigen::Vector3d eye = camera.center();
  const auto neighbours = face_neighbours(mesh);
  std::vector<char> drawn(static_cast<size_t>(mesh.face_count()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    drawn[static_cast<size_t>(f)] = !config.cull_backfaces || front_facing(mesh, f, eye);
  }
  Occlusion occluded{zb, ic, mesh, neighbours, drawn, {}};
  std::vector<float> sample(static_cast<size_t>(channels));
  // Image lookups use only pixels the mesh covers, so background never bleeds
  // into silhouette texels.
  Mask covered(camera.height, camera.width);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) covered(y, x) = zb.face[zb.index(x, y)] >= 0;

  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    if (config.cull_backfaces && !front_facing(mesh, f, eye)) continue;
    if (seam_filtered(mesh, f, config.tau_dist)) continue;
    const Eigen::Vector3i tri = mesh.faces.col(f);
    const Eigen::Vector2d p0 = ic.pixels.col(tri[0]);
    const Eigen::Vector2d p1 = ic.pixels.col(tri[1]);
    const Eigen::Vector2d p2 = ic.pixels.col(tri[2]);
    const Eigen::Vector3d z3(ic.depth[tri[0]], ic.depth[tri[1]], ic.depth[tri[2]]);

    scan_triangle(mesh.uv.col(tri[0]) * size, mesh.uv.col(tri[1]) * size, mesh.uv.col(tri[2]) * size, size, size,
                  [&](int tx, int ty, const Eigen::Vector3d& b) {
                    const Eigen::Vector2d src = b[0] * p0 + b[1] * p1 + b[2] * p2;
                    if (!(src.x() >= 0.0 && src.x() < camera.width && src.y() >= 0.0 && src.y() < camera.height)) {
                      return;
                    }
                    // Occlusion is decided at the exact projection of the surface point.
                    const Eigen::Vector3d bz = b.cwiseProduct(z3);
                    const double z = bz.sum();
                    const Eigen::Vector2d exact = (bz[0] * p0 + bz[1] * p1 + bz[2] * p2) / z;
                    if (occluded(static_cast<int>(f), exact, z - config.eps_z)) return;
                    tex.mask(ty, tx) = 1;
                    if (image) {
                      if (!bilinear_sample_masked(*image, covered, src.x(), src.y(), sample)) {
                        bilinear_sample(*image, src.x(), src.y(), sample);
                      }
                      for (int c = 0; c < channels; ++c) tex.pixels.at(c, ty, tx) = sample[static_cast<size_t>(c)];
                    }
                  });
  }
  return tex;
}

}  // namespace

TextureMap rasterize_uv(const Mesh& mesh, const Camera& camera, const Image& image, const RasterConfig& config) {
  return uv_pass(mesh, camera, config, &image);
}

Mask visibility_mask(const Mesh& mesh, const Camera& camera, const RasterConfig& config) {
  return uv_pass(mesh, camera, config, nullptr).mask;
}

Rendering render_textured(const Mesh& mesh, const Camera& camera, const TextureMap& texture) {
  camera.validate();
  const int channels = texture.pixels.channels();
  Rendering out{Image(camera.width, camera.height, channels), Mask::Zero(camera.height, camera.width),
                Mask::Zero(camera.height, camera.width)};
  if (mesh.face_count() == 0) return out;
  const int tw = texture.width();
  const int th = texture.height();
  if (texture.mask.rows() != th || texture.mask.cols() != tw) throw InputError("texture mask shape mismatch");

  const ImageCoords ic = project(mesh, camera);
  const DepthBuffer zb = depth_pass(mesh, ic, camera, true);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const size_t i = zb.index(x, y);
      const int f = zb.face[i];
      if (f < 0) continue;
      out.foreground(y, x) = 1;
      const Eigen::Vector3d& b = zb.bary[i];
      const Eigen::Vector2d uv = b[0] * mesh.uv.col(mesh.faces(0, f)) + b[1] * mesh.uv.col(mesh.faces(1, f)) +
                                 b[2] * mesh.uv.col(mesh.faces(2, f));
      const double px = std::clamp(uv.x() * tw - 0.5, 0.0, tw - 1.0);
      const double py = std::clamp(uv.y() * th - 0.5, 0.0, th - 1.0);
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      const int x1 = std::min(x0 + 1, tw - 1);
      const int y1 = std::min(y0 + 1, th - 1);
      const double fx = px - x0;
      const double fy = py - y0;
      const int xs[4] = {x0, x1, x0, x1};
      const int ys[4] = {y0, y0, y1, y1};
      const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      double total = 0.0;
      for (int k = 0; k < 4; ++k) total += texture.mask(ys[k], xs[k]) ? ws[k] : 0.0;
      if (total <= 0.0) continue;
      out.coverage(y, x) = 1;
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          if (texture.mask(ys[k], xs[k])) acc += ws[k] * texture.pixels.at(c, ys[k], xs[k]);
        out.image.at(c, y, x) = static_cast<float>(acc / total);
      }
    }
  }
  return out;
}

Mask part_footprint(const Mesh& mesh, const Camera& camera, BodyPart part) {
  Mask out = Mask::Zero(camera.height, camera.width);
  if (mesh.face_count() == 0) return out;
  const ImageCoords ic = project(mesh, camera);
  const DepthBuffer zb = depth_pass(mesh, ic, camera, true);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      const int f = zb.face[zb.index(x, y)];
      if (f >= 0 && mesh.face_part[static_cast<size_t>(f)] == part) out(y, x) = 1;
    }
  return out;
}

}  // namespace uvr
