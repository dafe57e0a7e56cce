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
#include "uvr/body.hpp"

#include <cmath>
#include <numbers>

#include "uvr/raster.hpp"
#include "uvr/scan.hpp"

namespace uvr {

namespace {

constexpr std::array<std::string_view, kPartCount> kPartNames = {
    "torso",        "head",       "left_upper_arm", "left_forearm", "right_upper_arm",
    "right_forearm", "left_thigh", "left_shin",      "right_thigh",  "right_shin"};

constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "neck", "left_shoulder", "left_elbow", "right_shoulder", "right_elbow",
    "left_hip", "left_knee", "right_hip", "right_knee"};

constexpr double kAtlas = 256.0;  // reference grid the chart layout is drawn on

Eigen::AlignedBox2d texel_box(double x, double y, double w, double h) {
  // One texel of inset on every side leaves a two-texel gutter between cells.
  return {Eigen::Vector2d((x + 1.0) / kAtlas, (y + 1.0) / kAtlas),
          Eigen::Vector2d((x + w - 1.0) / kAtlas, (y + h - 1.0) / kAtlas)};
}

int limb_index(BodyPart p) { return static_cast<int>(p) - static_cast<int>(BodyPart::kLeftUpperArm); }

// Joint that drives each part; kJointCount means the root.
int driving_joint(BodyPart p) {
  switch (p) {
    case BodyPart::kTorso: return kJointCount;
    case BodyPart::kHead: return static_cast<int>(Joint::kNeck);
    case BodyPart::kLeftUpperArm: return static_cast<int>(Joint::kLeftShoulder);
    case BodyPart::kLeftForearm: return static_cast<int>(Joint::kLeftElbow);
    case BodyPart::kRightUpperArm: return static_cast<int>(Joint::kRightShoulder);
    case BodyPart::kRightForearm: return static_cast<int>(Joint::kRightElbow);
    case BodyPart::kLeftThigh: return static_cast<int>(Joint::kLeftHip);
    case BodyPart::kLeftShin: return static_cast<int>(Joint::kLeftKnee);
    case BodyPart::kRightThigh: return static_cast<int>(Joint::kRightHip);
    case BodyPart::kRightShin: return static_cast<int>(Joint::kRightKnee);
  }
  return kJointCount;
}

int parent_joint(Joint j) {
  switch (j) {
    case Joint::kLeftElbow: return static_cast<int>(Joint::kLeftShoulder);
    case Joint::kRightElbow: return static_cast<int>(Joint::kRightShoulder);
    case Joint::kLeftKnee: return static_cast<int>(Joint::kLeftHip);
    case Joint::kRightKnee: return static_cast<int>(Joint::kRightHip);
    default: return kJointCount;
  }
}

class MeshBuilder {
 public:
  int add_vertex(const Eigen::Vector3d& p, const Eigen::Vector2d& uv, BodyPart part) {
    verts_.push_back(p);
    uvs_.push_back(uv);
    vparts_.push_back(part);
    return static_cast<int>(verts_.size()) - 1;
  }

  // Orients the triangle so its normal agrees with `outward`.
  void add_face(int a, int b, int c, const Eigen::Vector3d& outward, BodyPart part) {
    const Eigen::Vector3d n = (verts_[b] - verts_[a]).cross(verts_[c] - verts_[a]);
    if (n.dot(outward) < 0.0) std::swap(b, c);
    faces_.push_back(Eigen::Vector3i(a, b, c));
    fparts_.push_back(part);
  }

  const Eigen::Vector3d& vertex(int i) const { return verts_[i]; }

  void cylinder(BodyPart part, const Eigen::Vector3d& top, const Eigen::Vector3d& bottom, double rx,
                double rz, int rings, const PartCharts& charts) {
    const int s = kRadialSegments;
    const Eigen::Vector3d axis = bottom - top;
    const Eigen::AlignedBox2d& side = charts.side;
    std::vector<int> grid;
    for (int i = 0; i <= rings; ++i) {
      const double a = static_cast<double>(i) / rings;
      const Eigen::Vector3d center = top + a * axis;
      for (int j = 0; j <= s; ++j) {
        const double phi = angle(j);
        const Eigen::Vector3d p = center + Eigen::Vector3d(rx * std::cos(phi), 0.0, rz * std::sin(phi));
        const Eigen::Vector2d uv(side.min().x() + side.sizes().x() * j / s,
                                 side.min().y() + side.sizes().y() * a);
        grid.push_back(add_vertex(p, uv, part));
      }
    }
    auto at = [&](int i, int j) { return grid[static_cast<size_t>(i) * (s + 1) + j]; };
    for (int i = 0; i < rings; ++i) {
      for (int j = 0; j < s; ++j) {
        const int v00 = at(i, j), v01 = at(i, j + 1), v10 = at(i + 1, j), v11 = at(i + 1, j + 1);
        add_face(v00, v10, v11, radial(v00, v10, v11, top, axis), part);
        add_face(v00, v11, v01, radial(v00, v11, v01, top, axis), part);
      }
    }
    const Eigen::Vector3d dir = axis.normalized();
    cap(part, top, rx, rz, -dir, charts.caps[0]);
    cap(part, bottom, rx, rz, dir, charts.caps[1]);
  }

  void sphere(BodyPart part, const Eigen::Vector3d& c, double r, int stacks, const Eigen::AlignedBox2d& chart) {
    const int s = kRadialSegments;
    std::vector<int> grid;
    for (int k = 0; k <= stacks; ++k) {
      const double v = static_cast<double>(k) / stacks;
      const double theta = std::numbers::pi / 2.0 - std::numbers::pi * v;
      for (int j = 0; j <= s; ++j) {
        const double phi = angle(j);
        Eigen::Vector3d p = c + r * Eigen::Vector3d(std::cos(theta) * std::cos(phi), std::sin(theta),
                                                    std::cos(theta) * std::sin(phi));
        if (k == 0) p = c + Eigen::Vector3d(0.0, r, 0.0);
        if (k == stacks) p = c - Eigen::Vector3d(0.0, r, 0.0);
        const Eigen::Vector2d uv(chart.min().x() + chart.sizes().x() * j / s,
                                 chart.min().y() + chart.sizes().y() * v);
        grid.push_back(add_vertex(p, uv, part));
      }
    }
    auto at = [&](int k, int j) { return grid[static_cast<size_t>(k) * (s + 1) + j]; };
    for (int k = 0; k < stacks; ++k) {
      for (int j = 0; j < s; ++j) {
        const int v00 = at(k, j), v01 = at(k, j + 1), v10 = at(k + 1, j), v11 = at(k + 1, j + 1);
        if (k != stacks - 1) add_face(v00, v10, v11, centroid(v00, v10, v11) - c, part);
        if (k != 0) add_face(v00, v11, v01, centroid(v00, v11, v01) - c, part);
      }
    }
  }

  Mesh finish() const {
    Mesh m;
    m.vertices.resize(3, static_cast<Eigen::Index>(verts_.size()));
    m.uv.resize(2, static_cast<Eigen::Index>(uvs_.size()));
    for (size_t i = 0; i < verts_.size(); ++i) {
      m.vertices.col(static_cast<Eigen::Index>(i)) = verts_[i];
      m.uv.col(static_cast<Eigen::Index>(i)) = uvs_[i];
    }
    m.faces.resize(3, static_cast<Eigen::Index>(faces_.size()));
    for (size_t f = 0; f < faces_.size(); ++f) m.faces.col(static_cast<Eigen::Index>(f)) = faces_[f];
    m.face_part = fparts_;
    m.vertex_part = vparts_;
    return m;
  }

 private:
  // Front of every chart (+z) sits at the chart's horizontal centre; the seam
  // runs down the back.
  static double angle(int j) {
    return -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * j / kRadialSegments;
  }

  Eigen::Vector3d centroid(int a, int b, int c) const { return (verts_[a] + verts_[b] + verts_[c]) / 3.0; }

  Eigen::Vector3d radial(int a, int b, int c, const Eigen::Vector3d& top, const Eigen::Vector3d& axis) const {
    const Eigen::Vector3d g = centroid(a, b, c);
    const double s = (g - top).dot(axis) / axis.squaredNorm();
    return g - (top + s * axis);
  }

  void cap(BodyPart part, const Eigen::Vector3d& center, double rx, double rz, const Eigen::Vector3d& outward,
           const Eigen::AlignedBox2d& chart) {
    const Eigen::Vector2d mid = chart.center();
    const Eigen::Vector2d half = chart.sizes() / 2.0;
    const int hub = add_vertex(center, mid, part);
    std::vector<int> ring;
    for (int j = 0; j < kRadialSegments; ++j) {
      const double phi = angle(j);
      const Eigen::Vector3d p = center + Eigen::Vector3d(rx * std::cos(phi), 0.0, rz * std::sin(phi));
      const Eigen::Vector2d uv = mid + Eigen::Vector2d(half.x() * std::cos(phi), half.y() * std::sin(phi));
      ring.push_back(add_vertex(p, uv, part));
    }
    for (int j = 0; j < kRadialSegments; ++j) {
      add_face(hub, ring[j], ring[(j + 1) % kRadialSegments], outward, part);
    }
  }

  std::vector<Eigen::Vector3d> verts_;
  std::vector<Eigen::Vector2d> uvs_;
  std::vector<BodyPart> vparts_;
  std::vector<Eigen::Vector3i> faces_;
  std::vector<BodyPart> fparts_;
};

}  // namespace

std::string_view part_name(BodyPart p) { return kPartNames[static_cast<int>(p)]; }
std::string_view joint_name(Joint j) { return kJointNames[static_cast<int>(j)]; }

BodyPart part_from_name(std::string_view name) {
  for (int i = 0; i < kPartCount; ++i)
    if (kPartNames[i] == name) return static_cast<BodyPart>(i);
  throw InputError("unknown body part '" + std::string(name) + "'");
}

Joint joint_from_name(std::string_view name) {
  for (int i = 0; i < kJointCount; ++i)
    if (kJointNames[i] == name) return static_cast<Joint>(i);
  throw InputError("unknown joint '" + std::string(name) + "'");
}

PartCharts atlas_charts(BodyPart p) {
  PartCharts charts;
  auto cap_box = [](int ci) { return texel_box((ci % 16) * 16.0, 224.0 + (ci / 16) * 16.0, 16.0, 16.0); };
  if (p == BodyPart::kTorso) {
    charts.side = texel_box(0.0, 0.0, 128.0, 96.0);
    charts.caps = {cap_box(0), cap_box(1)};
  } else if (p == BodyPart::kHead) {
    charts.side = texel_box(128.0, 0.0, 128.0, 96.0);
  } else {
    const int li = limb_index(p);
    charts.side = texel_box((li % 4) * 64.0, 96.0 + (li / 4) * 64.0, 64.0, 64.0);
    charts.caps = {cap_box(2 + 2 * li), cap_box(3 + 2 * li)};
  }
  return charts;
}

Eigen::AlignedBox2d BodyConfig::default_face_region() {
  // Longitudes within 60 degrees of the front, latitudes within 45 degrees of
  // the equator, on the head's equirectangular chart.
  const Eigen::AlignedBox2d head = atlas_charts(BodyPart::kHead).side;
  const Eigen::Vector2d lo = head.min() + head.sizes().cwiseProduct(Eigen::Vector2d(1.0 / 3.0, 0.25));
  const Eigen::Vector2d hi = head.min() + head.sizes().cwiseProduct(Eigen::Vector2d(2.0 / 3.0, 0.75));
  return {lo, hi};
}

std::array<JointLimit, kJointCount> BodyConfig::default_limits() {
  constexpr double d = std::numbers::pi / 180.0;
  return {{
      {-80 * d, 80 * d},    // neck
      {-180 * d, 60 * d},   // left shoulder
      {-150 * d, 150 * d},  // left elbow
      {-180 * d, 60 * d},   // right shoulder
      {-150 * d, 150 * d},  // right elbow
      {-120 * d, 45 * d},   // left hip
      {0.0, 150 * d},       // left knee
      {-120 * d, 45 * d},   // right hip
      {0.0, 150 * d},       // right knee
  }};
}

void BodyConfig::validate() const {
  const double dims[] = {torso_length,     torso_radius_x, torso_radius_z,  neck_length,    head_radius,
                         shoulder_offset,  shoulder_drop,  upper_arm_length, upper_arm_radius,
                         forearm_length,   forearm_radius, hip_offset,      thigh_length,   thigh_radius,
                         shin_length,      shin_radius};
  for (double v : dims) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("body dimensions must be strictly positive");
  }
  if (tessellation < 1) throw ConfigError("tessellation level must be >= 1");
  const Eigen::AlignedBox2d unit(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
  if (face_region.isEmpty() || !unit.contains(face_region)) {
    throw ConfigError("face region must lie inside the unit square");
  }
  for (const JointLimit& l : limits) {
    if (!(l.lo <= l.hi)) throw ConfigError("joint limit lo > hi");
  }
}

Mesh build_body(const BodyConfig& config) {
  config.validate();
  const BodyConfig& c = config;
  Skeleton sk;
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d neck(0.0, c.torso_length, 0.0);
  sk.pivot[static_cast<int>(Joint::kNeck)] = neck;
  sk.pivot[static_cast<int>(Joint::kLeftShoulder)] = Eigen::Vector3d(c.shoulder_offset, c.torso_length - c.shoulder_drop, 0.0);
  sk.pivot[static_cast<int>(Joint::kRightShoulder)] = Eigen::Vector3d(-c.shoulder_offset, c.torso_length - c.shoulder_drop, 0.0);
  sk.pivot[static_cast<int>(Joint::kLeftElbow)] = sk.pivot[static_cast<int>(Joint::kLeftShoulder)] - c.upper_arm_length * up;
  sk.pivot[static_cast<int>(Joint::kRightElbow)] = sk.pivot[static_cast<int>(Joint::kRightShoulder)] - c.upper_arm_length * up;
  sk.pivot[static_cast<int>(Joint::kLeftHip)] = Eigen::Vector3d(c.hip_offset, 0.0, 0.0);
  sk.pivot[static_cast<int>(Joint::kRightHip)] = Eigen::Vector3d(-c.hip_offset, 0.0, 0.0);
  sk.pivot[static_cast<int>(Joint::kLeftKnee)] = sk.pivot[static_cast<int>(Joint::kLeftHip)] - c.thigh_length * up;
  sk.pivot[static_cast<int>(Joint::kRightKnee)] = sk.pivot[static_cast<int>(Joint::kRightHip)] - c.thigh_length * up;
  // Neck turns the head; shoulders, hips and knees flex about x; elbows swing
  // about the upper arm's z so a raised arm folds across the chest.
  sk.axis[static_cast<int>(Joint::kNeck)] = Eigen::Vector3d::UnitY();
  for (Joint j : {Joint::kLeftShoulder, Joint::kRightShoulder, Joint::kLeftHip, Joint::kRightHip,
                  Joint::kLeftKnee, Joint::kRightKnee}) {
    sk.axis[static_cast<int>(j)] = Eigen::Vector3d::UnitX();
  }
  sk.axis[static_cast<int>(Joint::kLeftElbow)] = Eigen::Vector3d::UnitZ();
  sk.axis[static_cast<int>(Joint::kRightElbow)] = Eigen::Vector3d::UnitZ();
  sk.head_center = neck + (c.neck_length + c.head_radius) * up;
  sk.limits = c.limits;

  MeshBuilder b;
  const int rings = c.tessellation;
  b.cylinder(BodyPart::kTorso, neck, Eigen::Vector3d::Zero(), c.torso_radius_x, c.torso_radius_z, rings,
             atlas_charts(BodyPart::kTorso));
  b.sphere(BodyPart::kHead, sk.head_center, c.head_radius, 4 * c.tessellation, atlas_charts(BodyPart::kHead).side);

  struct Limb {
    BodyPart part;
    Joint joint;
    double length;
    double radius;
  };
  const Limb limbs[] = {
      {BodyPart::kLeftUpperArm, Joint::kLeftShoulder, c.upper_arm_length, c.upper_arm_radius},
      {BodyPart::kLeftForearm, Joint::kLeftElbow, c.forearm_length, c.forearm_radius},
      {BodyPart::kRightUpperArm, Joint::kRightShoulder, c.upper_arm_length, c.upper_arm_radius},
      {BodyPart::kRightForearm, Joint::kRightElbow, c.forearm_length, c.forearm_radius},
      {BodyPart::kLeftThigh, Joint::kLeftHip, c.thigh_length, c.thigh_radius},
      {BodyPart::kLeftShin, Joint::kLeftKnee, c.shin_length, c.shin_radius},
      {BodyPart::kRightThigh, Joint::kRightHip, c.thigh_length, c.thigh_radius},
      {BodyPart::kRightShin, Joint::kRightKnee, c.shin_length, c.shin_radius},
  };
  for (const Limb& l : limbs) {
    const Eigen::Vector3d top = sk.pivot[static_cast<int>(l.joint)];
    b.cylinder(l.part, top, top - l.length * up, l.radius, l.radius, rings, atlas_charts(l.part));
  }

  Mesh m = b.finish();
  m.skeleton = sk;
  return m;
}

Eigen::Matrix3d euler_xyz(const Eigen::Vector3d& a) {
  return (Eigen::AngleAxisd(a.z(), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(a.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(a.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

PoseParams clamp_pose(const PoseParams& pose, const std::array<JointLimit, kJointCount>& limits) {
  PoseParams out = pose;
  for (int j = 0; j < kJointCount; ++j) {
    if (!std::isfinite(pose.angles[j])) throw InputError("non-finite joint angle for " + std::string(kJointNames[j]));
    out.angles[j] = std::clamp(pose.angles[j], limits[j].lo, limits[j].hi);
  }
  if (!pose.rotation.allFinite() || !pose.translation.allFinite()) throw InputError("non-finite global transform");
  return out;
}

std::array<Eigen::Isometry3d, kJointCount + 1> joint_transforms(const Skeleton& sk, const PoseParams& raw) {
  const PoseParams pose = clamp_pose(raw, sk.limits);
  std::array<Eigen::Isometry3d, kJointCount + 1> w;
  Eigen::Isometry3d root = Eigen::Isometry3d::Identity();
  root.linear() = euler_xyz(pose.rotation);
  root.translation() = pose.translation;
  w[kJointCount] = root;
  // Joint enum order lists every parent before its children.
  for (int j = 0; j < kJointCount; ++j) {
    const int parent = parent_joint(static_cast<Joint>(j));
    Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
    local.linear() = Eigen::AngleAxisd(pose.angles[j], sk.axis[j]).toRotationMatrix();
    local.translation() = sk.pivot[j] - local.linear() * sk.pivot[j];
    w[j] = w[parent] * local;
  }
  return w;
}

Mesh pose_body(const Mesh& rest, const PoseParams& pose) {
  const auto w = joint_transforms(rest.skeleton, pose);
  Mesh out = rest;
  for (Eigen::Index v = 0; v < rest.vertex_count(); ++v) {
    const Eigen::Isometry3d& t = w[driving_joint(rest.vertex_part[static_cast<size_t>(v)])];
    out.vertices.col(v) = t.linear() * rest.vertices.col(v) + t.translation();
  }
  return out;
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double focal, int width,
                       int height) {
  Camera cam;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.principal = Eigen::Vector2d(width / 2.0, height / 2.0);
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  if (std::abs(z.dot(up)) > 0.999) up = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d x = z.cross(up).normalized();
  const Eigen::Vector3d y = z.cross(x);
  cam.cam_to_world.linear().col(0) = x;
  cam.cam_to_world.linear().col(1) = y;
  cam.cam_to_world.linear().col(2) = z;
  cam.cam_to_world.translation() = eye;
  return cam;
}

Camera Camera::default_camera(int width, int height) {
  const double focal = 256.0 * width / 256.0;
  return look_at(Eigen::Vector3d(0.0, 0.05, 2.2), Eigen::Vector3d(0.0, 0.05, 0.0), focal, width, height);
}

void Camera::validate() const {
  if (!(focal > 0.0)) throw ConfigError("camera focal length must be positive");
  if (width < 16 || height < 16) throw ConfigError("camera resolution must be at least 16x16");
}

ImageCoords project(const Mesh& mesh, const Camera& camera, double near) {
  camera.validate();
  const Eigen::Isometry3d world_to_cam = camera.cam_to_world.inverse();
  const Eigen::Matrix3Xd pc = (world_to_cam.linear() * mesh.vertices).colwise() + world_to_cam.translation();
  ImageCoords out;
  out.pixels.resize(2, mesh.vertex_count());
  out.depth = pc.row(2).transpose();
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    const double z = pc(2, v);
    if (!(z > near)) {
      throw ProjectionError("vertex " + std::to_string(v) + " is at or behind the near plane (depth " +
                                std::to_string(z) + ")",
                            static_cast<long>(v));
    }
    out.pixels(0, v) = camera.focal * pc(0, v) / z + camera.principal.x();
    out.pixels(1, v) = camera.focal * pc(1, v) / z + camera.principal.y();
  }
  return out;
}

Eigen::Vector3f part_color(BodyPart p) {
  static const std::array<Eigen::Vector3f, kPartCount> colors = {
      Eigen::Vector3f(0.85f, 0.25f, 0.25f), Eigen::Vector3f(0.95f, 0.85f, 0.35f),
      Eigen::Vector3f(0.25f, 0.75f, 0.30f), Eigen::Vector3f(0.20f, 0.90f, 0.80f),
      Eigen::Vector3f(0.30f, 0.35f, 0.95f), Eigen::Vector3f(0.75f, 0.35f, 0.95f),
      Eigen::Vector3f(0.95f, 0.55f, 0.15f), Eigen::Vector3f(0.60f, 0.40f, 0.20f),
      Eigen::Vector3f(0.55f, 0.85f, 0.25f), Eigen::Vector3f(0.90f, 0.40f, 0.65f)};
  return colors[static_cast<int>(p)];
}

Image render_pose_image(const Mesh& mesh, const Camera& camera) {
  camera.validate();
  Image img(camera.width, camera.height, 3);
  if (mesh.face_count() == 0) return img;
  const ImageCoords ic = project(mesh, camera);
  const DepthBuffer zb = depth_pass(mesh, ic, camera, true);
  const Eigen::Vector3d eye = camera.center();
  std::vector<float> shade(static_cast<size_t>(mesh.face_count()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.col(mesh.faces(0, f));
    const Eigen::Vector3d b = mesh.vertices.col(mesh.faces(1, f));
    const Eigen::Vector3d c = mesh.vertices.col(mesh.faces(2, f));
    const Eigen::Vector3d n = (b - a).cross(c - a).normalized();
    const Eigen::Vector3d view = (eye - (a + b + c) / 3.0).normalized();
    shade[static_cast<size_t>(f)] = static_cast<float>(0.35 + 0.65 * std::max(0.0, n.dot(view)));
  }
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const int f = zb.face[zb.index(x, y)];
      if (f < 0) continue;
      const Eigen::Vector3f col = part_color(mesh.face_part[static_cast<size_t>(f)]) * shade[static_cast<size_t>(f)];
      for (int k = 0; k < 3; ++k) img.at(k, y, x) = col[k];
    }
  }
  return img;
}

KeypointSet keypoints(const Mesh& rest, const PoseParams& pose, const Camera& camera) {
  camera.validate();
  const Skeleton& sk = rest.skeleton;
  const auto w = joint_transforms(sk, pose);
  KeypointSet out;
  std::vector<std::pair<std::string, Eigen::Vector3d>> points;
  points.emplace_back("pelvis", w[kJointCount] * sk.root);
  for (int j = 0; j < kJointCount; ++j) {
    const int parent = parent_joint(static_cast<Joint>(j));
    points.emplace_back(std::string(kJointNames[j]), w[parent] * sk.pivot[j]);
  }
  points.emplace_back("head", w[static_cast<int>(Joint::kNeck)] * sk.head_center);

  Mesh pivots;
  pivots.vertices.resize(3, static_cast<Eigen::Index>(points.size()));
  for (size_t i = 0; i < points.size(); ++i) pivots.vertices.col(static_cast<Eigen::Index>(i)) = points[i].second;
  const ImageCoords ic = project(pivots, camera);
  for (size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector2d px = ic.pixels.col(static_cast<Eigen::Index>(i));
    const bool in_frame = px.x() >= 0.0 && px.x() < camera.width && px.y() >= 0.0 && px.y() < camera.height;
    out.push_back({points[i].first, px, in_frame && ic.depth[static_cast<Eigen::Index>(i)] > 0.0});
  }
  return out;
}

}  // namespace uvr
