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

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "uvr/common.hpp"
#include "uvr/image.hpp"

namespace uvr {

// Procedural articulated body: capsule-like cylinders for torso and limbs plus
// a sphere head, a fixed UV atlas and a nine-hinge joint tree rooted at the
// pelvis. World frame is y-up, the body faces +z, its left side is +x.

enum class BodyPart : std::uint8_t {
  kTorso,
  kHead,
  kLeftUpperArm,
  kLeftForearm,
  kRightUpperArm,
  kRightForearm,
  kLeftThigh,
  kLeftShin,
  kRightThigh,
  kRightShin,
};
inline constexpr int kPartCount = 10;

enum class Joint : std::uint8_t {
  kNeck,
  kLeftShoulder,
  kLeftElbow,
  kRightShoulder,
  kRightElbow,
  kLeftHip,
  kLeftKnee,
  kRightHip,
  kRightKnee,
};
inline constexpr int kJointCount = 9;

std::string_view part_name(BodyPart p);
std::string_view joint_name(Joint j);
BodyPart part_from_name(std::string_view name);
Joint joint_from_name(std::string_view name);

struct JointLimit {
  double lo;
  double hi;
};

struct BodyConfig {
  double torso_length = 0.60;
  double torso_radius_x = 0.17;
  double torso_radius_z = 0.11;
  double neck_length = 0.04;
  double head_radius = 0.15;
  double shoulder_offset = 0.24;  // lateral distance of the shoulder pivot
  double shoulder_drop = 0.05;    // below the top of the torso
  double upper_arm_length = 0.30;
  double upper_arm_radius = 0.05;
  double forearm_length = 0.28;
  double forearm_radius = 0.04;
  double hip_offset = 0.09;
  double thigh_length = 0.42;
  double thigh_radius = 0.07;
  double shin_length = 0.42;
  double shin_radius = 0.055;
  // Rings along each cylinder; the head uses 4 * tessellation latitude bands.
  // Radial resolution is fixed at 16 so extents are level-independent.
  int tessellation = 4;
  Eigen::AlignedBox2d face_region = default_face_region();
  std::array<JointLimit, kJointCount> limits = default_limits();

  static Eigen::AlignedBox2d default_face_region();
  static std::array<JointLimit, kJointCount> default_limits();
  void validate() const;
};

inline constexpr int kRadialSegments = 16;

struct PoseParams {
  std::array<double, kJointCount> angles{};  // radians
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();  // Euler X then Y then Z
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  double& angle(Joint j) { return angles[static_cast<int>(j)]; }
  double angle(Joint j) const { return angles[static_cast<int>(j)]; }
  bool operator==(const PoseParams&) const = default;
};

/// Rest-pose joint pivots and hinge axes, carried by every mesh so posing
/// needs nothing but the mesh itself.
struct Skeleton {
  std::array<Eigen::Vector3d, kJointCount> pivot;
  std::array<Eigen::Vector3d, kJointCount> axis;
  Eigen::Vector3d root = Eigen::Vector3d::Zero();  // pelvis
  Eigen::Vector3d head_center = Eigen::Vector3d::Zero();
  std::array<JointLimit, kJointCount> limits{};
};

struct Mesh {
  Eigen::Matrix3Xd vertices;
  Eigen::Matrix3Xi faces;
  Eigen::Matrix2Xd uv;
  std::vector<BodyPart> face_part;
  std::vector<BodyPart> vertex_part;
  Skeleton skeleton;

  Eigen::Index vertex_count() const { return vertices.cols(); }
  Eigen::Index face_count() const { return faces.cols(); }
};

struct Camera {
  double focal = 256.0;
  Eigen::Vector2d principal{128.0, 128.0};
  Eigen::Isometry3d cam_to_world = Eigen::Isometry3d::Identity();
  int width = 256;
  int height = 256;

  /// Camera frame is x right, y down, z forward.
  static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double focal = 256.0,
                        int width = 256, int height = 256);
  /// Frontal camera centred on the default body.
  static Camera default_camera(int width = 256, int height = 256);
  void validate() const;
  Eigen::Vector3d center() const { return cam_to_world.translation(); }
};

struct ImageCoords {
  Eigen::Matrix2Xd pixels;
  Eigen::VectorXd depth;
};

struct Keypoint {
  std::string name;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool visible = false;
};
using KeypointSet = std::vector<Keypoint>;

inline constexpr double kNearPlane = 1e-3;

Mesh build_body(const BodyConfig& config = {});
Mesh pose_body(const Mesh& rest, const PoseParams& pose);
ImageCoords project(const Mesh& mesh, const Camera& camera, double near = kNearPlane);
Image render_pose_image(const Mesh& mesh, const Camera& camera);
KeypointSet keypoints(const Mesh& rest, const PoseParams& pose, const Camera& camera);

/// World transform of every joint (and the root) for a pose; index
/// kJointCount is the root.
std::array<Eigen::Isometry3d, kJointCount + 1> joint_transforms(const Skeleton& skeleton,
                                                                const PoseParams& pose);
Eigen::Matrix3d euler_xyz(const Eigen::Vector3d& angles);
PoseParams clamp_pose(const PoseParams& pose, const std::array<JointLimit, kJointCount>& limits);

/// Fixed colour per body part used by the pose rendering.
Eigen::Vector3f part_color(BodyPart p);

/// Atlas chart rectangles (side chart and two cap charts per part).
struct PartCharts {
  Eigen::AlignedBox2d side;
  std::vector<Eigen::AlignedBox2d> caps;
};
PartCharts atlas_charts(BodyPart p);

}  // namespace uvr
