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

#include <optional>

#include "uvr/donor.hpp"
#include "uvr/flow.hpp"

namespace uvr {

/// Conditions for one generation. Presence is the engaged state of each
/// optional; absent conditions encode as zeros with their flag cleared.
struct ConditionSet {
  std::optional<TextureMap> texture;
  std::optional<Image> pose_render;
  std::optional<Image> face_crop;

  bool has_texture() const { return texture.has_value(); }
  bool has_pose() const { return pose_render.has_value(); }
  bool has_face() const { return face_crop.has_value(); }
};

ConditionSet apply_dropout(ConditionSet c, DropoutDecision d);

/// Area-resamples every present condition to resolution R and stacks them as
/// pose (3), texture (3), face (3) channels; presence = (pose, texture, face).
EncodedCondition<float> encode_condition(const ConditionSet& c, int resolution);

/// Image flattened channel-major, the layout of one batch column.
Eigen::VectorXf flatten(const Image& img);
Image unflatten(const Eigen::Ref<const Eigen::VectorXf>& v, int width, int height, int channels);

/// Square image-space box around the projected head.
struct FaceBox {
  double cx = 0.0;
  double cy = 0.0;
  double half = 0.0;
};

/// Box of side 2.4 x the projected head radius centred on the head.
FaceBox face_box(const Mesh& posed, const Camera& camera);
/// Area-resampled crop of `box` at size x size; outside the image reads black.
Image crop_face(const Image& img, const FaceBox& box, int size);

/// Head footprint at resolution R (any coverage counts), dilated by `dilation`.
Mask face_region_mask(const Mesh& posed, const Camera& camera, int resolution, int dilation = 2);

struct ConditionedSample {
  ConditionSet condition;
  Image target;
};

/// Paired branch: texture unwrapped from the reference view, pose render of the
/// target, face crop of the reference; the target image is the supplied
/// ground truth in the target pose.
ConditionedSample make_condition_paired(const Image& ref_image, const Mesh& ref_posed, const Mesh& target_posed,
                                        const Image& target_image, const Camera& camera, int face_size,
                                        const RasterConfig& raster = {});

/// Single-image branch: donor-masked texture of the image itself, pose render
/// of the same pose, no face crop; the target is the input image.
ConditionedSample make_condition_single(const Image& image, const Mesh& posed, const Camera& camera,
                                        const Mask& donor_mask, const RasterConfig& raster = {});

}  // namespace uvr
