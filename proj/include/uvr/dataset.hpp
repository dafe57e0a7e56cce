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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uvr/io.hpp"
#include "uvr/raster.hpp"

namespace uvr {

// ---- synthetic identities and poses ----------------------------------------

inline constexpr int kPoseBuckets = 8;

/// Canonical arm/leg configuration `bucket` in [0, 8).
PoseParams bucket_pose(int bucket);
/// Bucket pose with uniform joint jitter and a global yaw, clamped to limits.
PoseParams jittered_pose(int bucket, Rng& rng, double joint_jitter_deg, double yaw_range_deg,
                         const BodyConfig& body = {});

/// Identity = face pattern seed plus a uniform body tint.
struct IdentityStyle {
  Eigen::Vector3f tint;
  Eigen::Vector3f skin;
  Eigen::Vector3f hair;
  std::uint64_t face_seed = 0;
};

IdentityStyle make_identity(Rng& rng);
/// Full UV atlas for an identity; every texel is set.
TextureMap identity_texture(const IdentityStyle& style, int size = 256, const BodyConfig& body = {});
/// Ground-truth view of a textured body on a black background.
Image render_identity(const Mesh& posed, const Camera& camera, const TextureMap& texture);

// ---- datasets ----------------------------------------------------------------

struct DataConfig {
  int paired_identities = 4;
  int poses_per_identity = 4;  // training poses of each paired identity
  int heldout_poses = 1;       // evaluation poses of each paired identity
  int unpaired_identities = 8;
  int image_size = 256;
  double joint_jitter_deg = 4.0;
  double yaw_range_deg = 10.0;
  RasterConfig raster;
  DonorConfig donor;

  void validate() const;
};

struct SampleRecord {
  std::string id;
  std::string identity;
  std::string image;  // paths relative to the data directory
  std::string pose;
  std::string camera;
  std::string mask;
  std::string donors;
  std::optional<std::string> partner;
  int bucket = 0;
};

enum class ManifestKind { kPaired, kUnpaired, kEval };
std::string_view manifest_kind_name(ManifestKind k);

struct DatasetManifest {
  ManifestKind kind = ManifestKind::kPaired;
  std::vector<SampleRecord> samples;

  const SampleRecord* find(const std::string& id) const;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
/// Loads a manifest and checks that every referenced file exists under `root`.
DatasetManifest read_manifest(const std::filesystem::path& path, const std::filesystem::path& root);

struct Dataset {
  std::filesystem::path root;
  DatasetManifest paired;
  DatasetManifest unpaired;
  DatasetManifest eval;

  /// Every distinct training sample (paired and unpaired manifests).
  std::vector<SampleRecord> training_samples() const;
};

/// Renders K paired identities with P training and H held-out poses each, plus
/// single-image identities; writes images, visibility masks, poses, cameras,
/// textures, the rest mesh and donor pools under `root`, and the manifests
/// paired.json, unpaired.json and eval.json.
Dataset gen_dataset(const DataConfig& config, std::uint64_t seed, const std::filesystem::path& root);

/// Loads manifests and checks closure: partners share identity and differ in
/// pose, and every donor id names a training sample.
Dataset load_dataset(const std::filesystem::path& root);

/// One sample with its files decoded.
struct LoadedSample {
  SampleRecord record;
  Image image;
  PoseParams pose;
  Camera camera;
  Mask visibility;
  DonorPool pool;
};

LoadedSample load_sample(const Dataset& ds, const SampleRecord& r);

}  // namespace uvr
