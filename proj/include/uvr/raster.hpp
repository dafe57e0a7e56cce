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

#include "uvr/body.hpp"
#include "uvr/image.hpp"
#include "uvr/scan.hpp"

namespace uvr {

/// UV-space texture with its visibility mask. pixels are zero wherever mask is.
struct TextureMap {
  Image pixels;
  Mask mask;

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
  bool operator==(const TextureMap& o) const {
    return pixels == o.pixels && mask.rows() == o.mask.rows() && mask.cols() == o.mask.cols() &&
           (mask == o.mask).all();
  }
  /// Zeroes pixels outside the mask.
  void enforce_mask();
};

struct RasterConfig {
  double tau_dist = 0.25;  // max UV edge length of a retained triangle
  double eps_z = 1e-3;     // depth tolerance of the visibility test
  bool cull_backfaces = true;
  int texture_size = 256;

  void validate() const;
};

bool front_facing(const Mesh& mesh, Eigen::Index face, const Eigen::Vector3d& eye);

/// Nearest-surface pass over the image grid. Depth is camera z, interpolated
/// perspective-correctly through 1/z.
DepthBuffer depth_pass(const Mesh& mesh, const ImageCoords& coords, const Camera& camera, bool cull_backfaces);

/// Partial texture by inverse rasterisation: every texel covered by a retained
/// UV triangle maps to x_src = sum_k b_k V_img[k]; the texel is kept when
/// x_src lies inside the image and its surface point is not occluded, and
/// takes the bilinear image value there, weighted over pixels the mesh covers.
/// Occlusion is tested at the exact projection of the surface point against
/// the faces the z-buffer stored around it (and faces sharing a vertex with
/// them), so thin occluders between pixel centres still count.
TextureMap rasterize_uv(const Mesh& mesh, const Camera& camera, const Image& image, const RasterConfig& config = {});

/// Mask component of rasterize_uv without sampling.
Mask visibility_mask(const Mesh& mesh, const Camera& camera, const RasterConfig& config = {});

struct Rendering {
  Image image;
  Mask coverage;    // pixel received at least one unmasked texel
  Mask foreground;  // pixel is covered by the mesh
};

/// Forward textured rendering with mask-aware bilinear texture lookup; UVs are
/// interpolated affinely in screen space so the map inverts rasterize_uv.
Rendering render_textured(const Mesh& mesh, const Camera& camera, const TextureMap& texture);

inline Image render_from_texture(const Mesh& mesh, const Camera& camera, const TextureMap& texture) {
  return render_textured(mesh, camera, texture).image;
}

/// Pixels whose front-most surface belongs to `part`.
Mask part_footprint(const Mesh& mesh, const Camera& camera, BodyPart part);

}  // namespace uvr
