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
#include "uvr/condition.hpp"

#include <cmath>

namespace uvr {

ConditionSet apply_dropout(ConditionSet c, DropoutDecision d) {
  switch (d) {
    case DropoutDecision::kDropAll:
      c.texture.reset();
      c.pose_render.reset();
      c.face_crop.reset();
      break;
    case DropoutDecision::kDropTexture: c.texture.reset(); break;
    case DropoutDecision::kDropFace: c.face_crop.reset(); break;
    case DropoutDecision::kDropPose: c.pose_render.reset(); break;
    case DropoutDecision::kKeepAll: break;
  }
  return c;
}

Eigen::VectorXf flatten(const Image& img) { return img.data().matrix(); }

Image unflatten(const Eigen::Ref<const Eigen::VectorXf>& v, int width, int height, int channels) {
  Image img(width, height, channels);
  if (v.size() != img.data().size()) throw InputError("unflatten: size mismatch");
  img.data() = v.array();
  return img;
}

namespace {

void put_channels(EncodedCondition<float>& e, int first, const Image& img, int r) {
  if (img.channels() != 3) throw InputError("condition images must have 3 channels");
  const Image small = (img.width() == r && img.height() == r) ? img : resize_area(img, r, r);
  for (int c = 0; c < 3; ++c)
    e.spatial.row(first + c) = Eigen::Map<const Eigen::RowVectorXf>(small.plane(c).data(), static_cast<Eigen::Index>(r) * r);
}

}  // namespace

EncodedCondition<float> encode_condition(const ConditionSet& c, int r) {
  if (r < 1) throw ConfigError("working resolution must be positive");
  EncodedCondition<float> e;
  e.spatial = Eigen::MatrixXf::Zero(9, static_cast<Eigen::Index>(r) * r);
  e.presence = Eigen::VectorXf::Zero(3);
  if (c.pose_render) {
    put_channels(e, 0, *c.pose_render, r);
    e.presence[0] = 1.0f;
  }
  if (c.texture) {
    put_channels(e, 3, c.texture->pixels, r);
    e.presence[1] = 1.0f;
  }
  if (c.face_crop) {
    put_channels(e, 6, *c.face_crop, r);
    e.presence[2] = 1.0f;
  }
  return e;
}

FaceBox face_box(const Mesh& posed, const Camera& camera) {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int n = 0;
  for (Eigen::Index v = 0; v < posed.vertex_count(); ++v) {
    if (posed.vertex_part[static_cast<size_t>(v)] != BodyPart::kHead) continue;
    center += posed.vertices.col(v);
    ++n;
  }
  if (n == 0) throw InputError("face_box: mesh has no head vertices");
  center /= n;
  double radius = 0.0;
  for (Eigen::Index v = 0; v < posed.vertex_count(); ++v)
    if (posed.vertex_part[static_cast<size_t>(v)] == BodyPart::kHead)
      radius = std::max(radius, (posed.vertices.col(v) - center).norm());
  const Eigen::Vector3d pc = camera.cam_to_world.inverse() * center;
  if (!(pc.z() > kNearPlane)) throw ProjectionError("face_box: head centre is behind the camera", -1);
  FaceBox box;
  box.cx = camera.focal * pc.x() / pc.z() + camera.principal.x();
  box.cy = camera.focal * pc.y() / pc.z() + camera.principal.y();
  box.half = 1.2 * camera.focal * radius / pc.z();
  return box;
}

Image crop_face(const Image& img, const FaceBox& box, int size) {
  if (size < 1 || !(box.half > 0.0)) throw InputError("crop_face: empty crop");
  return resample_area(img, box.cx - box.half, box.cy - box.half, 2.0 * box.half, 2.0 * box.half, size, size);
}

Mask face_region_mask(const Mesh& posed, const Camera& camera, int resolution, int dilation) {
  const Image cover = resize_area(mask_to_image(part_footprint(posed, camera, BodyPart::kHead)), resolution, resolution);
  Mask m = (cover.plane(0) > 0.0f).cast<std::uint8_t>();
  return dilate(m, dilation);
}

ConditionedSample make_condition_paired(const Image& ref_image, const Mesh& ref_posed, const Mesh& target_posed,
                                        const Image& target_image, const Camera& camera, int face_size,
                                        const RasterConfig& raster) {
  ConditionedSample s;
  s.condition.texture = rasterize_uv(ref_posed, camera, ref_image, raster);
  s.condition.pose_render = render_pose_image(target_posed, camera);
  s.condition.face_crop = crop_face(ref_image, face_box(ref_posed, camera), face_size);
  s.target = target_image;
  return s;
}

ConditionedSample make_condition_single(const Image& image, const Mesh& posed, const Camera& camera,
                                        const Mask& donor_mask, const RasterConfig& raster) {
  ConditionedSample s;
  s.condition.texture = apply_donor(rasterize_uv(posed, camera, image, raster), donor_mask);
  s.condition.pose_render = render_pose_image(posed, camera);
  s.target = image;
  return s;
}

}  // namespace uvr
