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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uvr/raster.hpp"

namespace uvr {

double iou(const Mask& a, const Mask& b);

struct DonorConfig {
  double iou_lo = 0.4;  // inclusive
  double iou_hi = 0.8;  // inclusive
  int pool_size = 10;

  void validate() const;
};

struct DonorEntry {
  std::string id;
  double iou = 0.0;
};

struct DonorPool {
  std::string source_id;
  std::vector<DonorEntry> donors;

  /// No candidate met the IoU band; callers fall back to patch masking.
  bool exhausted() const noexcept { return donors.empty(); }
};

/// Samples up to pool_size donors uniformly without replacement among the
/// candidates whose IoU with `source` lies in [iou_lo, iou_hi]. `ids` names
/// the candidates (defaults to their indices). The caller excludes the
/// source's own mask from `candidates`.
DonorPool build_donor_pool(const Mask& source, std::span<const Mask> candidates, std::span<const std::string> ids,
                           const DonorConfig& config, Rng& rng, std::string source_id = {});

/// T_p (.) M_donor: mask becomes the intersection, pixels outside it are zeroed.
TextureMap apply_donor(const TextureMap& texture, const Mask& donor_mask);

struct Patch {
  int x = 0;
  int y = 0;
  int size = 0;

  bool overlaps(const Patch& o) const {
    return x < o.x + o.size && o.x < x + size && y < o.y + o.size && o.y < y + size;
  }
};

struct PatchMasking {
  TextureMap texture;
  std::vector<Patch> patches;
  int requested = 0;  // k drawn from uniform{1..max_patches}
};

/// Zeroes k ~ uniform{1..max_patches} non-overlapping square patches placed by
/// rejection sampling (at most 100 attempts per patch).
PatchMasking random_patch_mask(const TextureMap& texture, Rng& rng, int max_patches = 6, int patch_size = 64);

enum class DropoutDecision : std::uint8_t { kDropAll, kDropTexture, kDropFace, kDropPose, kKeepAll };
inline constexpr int kDropoutBranches = 5;

std::string_view dropout_name(DropoutDecision d);

struct DropoutProbs {
  double p_all = 0.05;
  double p_tex = 0.3;
  double p_face = 0.3;
  double p_pose = 0.1;

  double keep_all() const { return 1.0 - (p_all + p_tex + p_face + p_pose); }
  void validate() const;
};

/// One uniform draw partitioned into the five mutually exclusive branches.
DropoutDecision sample_dropout(Rng& rng, const DropoutProbs& probs = {});

}  // namespace uvr
