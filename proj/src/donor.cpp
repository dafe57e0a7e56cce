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
#include "uvr/donor.hpp"

#include <algorithm>
#include <numeric>

namespace uvr {

namespace {

void require_same_shape(const Mask& a, const Mask& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(what) + ": mask dimensions differ (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                     ")");
  }
}

}  // namespace

double iou(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "iou");
  const auto ab = a.cast<bool>();
  const auto bb = b.cast<bool>();
  const long inter = (ab && bb).count();
  const long uni = (ab || bb).count();
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void DonorConfig::validate() const {
  if (!(iou_lo >= 0.0 && iou_lo <= iou_hi && iou_hi <= 1.0)) throw ConfigError("donor IoU band must satisfy 0 <= lo <= hi <= 1");
  if (pool_size < 0) throw ConfigError("donor pool size must be non-negative");
}

DonorPool build_donor_pool(const Mask& source, std::span<const Mask> candidates, std::span<const std::string> ids,
                           const DonorConfig& config, Rng& rng, std::string source_id) {
  config.validate();
  if (!ids.empty() && ids.size() != candidates.size()) throw InputError("donor ids and candidates differ in length");
  std::vector<size_t> qualifying;
  std::vector<double> ious(candidates.size(), 0.0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    ious[i] = iou(source, candidates[i]);
    if (ious[i] >= config.iou_lo && ious[i] <= config.iou_hi) qualifying.push_back(i);
  }
  // Partial Fisher-Yates: the first pool_size slots are a uniform sample.
  const size_t take = std::min(qualifying.size(), static_cast<size_t>(config.pool_size));
  for (size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<size_t> pick(i, qualifying.size() - 1);
    std::swap(qualifying[i], qualifying[pick(rng)]);
  }
  DonorPool pool;
  pool.source_id = std::move(source_id);
  for (size_t i = 0; i < take; ++i) {
    const size_t c = qualifying[i];
    pool.donors.push_back({ids.empty() ? std::to_string(c) : ids[c], ious[c]});
  }
  return pool;
}

TextureMap apply_donor(const TextureMap& texture, const Mask& donor_mask) {
  require_same_shape(texture.mask, donor_mask, "apply_donor");
  TextureMap out = texture;
  out.mask = texture.mask * donor_mask.cwiseMin(std::uint8_t{1});
  out.enforce_mask();
  return out;
}

PatchMasking random_patch_mask(const TextureMap& texture, Rng& rng, int max_patches, int patch_size) {
  const int w = texture.width();
  const int h = texture.height();
  if (patch_size <= 0 || patch_size > std::min(w, h)) throw InputError("patch size must be in [1, min(H, W)]");
  PatchMasking out{texture, {}, 0};
  if (max_patches <= 0) return out;
  out.requested = std::uniform_int_distribution<int>(1, max_patches)(rng);
  std::uniform_int_distribution<int> px(0, w - patch_size);
  std::uniform_int_distribution<int> py(0, h - patch_size);
  for (int k = 0; k < out.requested; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Patch p{px(rng), py(rng), patch_size};
      if (std::none_of(out.patches.begin(), out.patches.end(), [&](const Patch& q) { return p.overlaps(q); })) {
        out.patches.push_back(p);
        break;
      }
    }
  }
  for (const Patch& p : out.patches) {
    out.texture.mask.block(p.y, p.x, p.size, p.size).setZero();
  }
  out.texture.enforce_mask();
  return out;
}

std::string_view dropout_name(DropoutDecision d) {
  switch (d) {
    case DropoutDecision::kDropAll: return "drop_all";
    case DropoutDecision::kDropTexture: return "drop_texture";
    case DropoutDecision::kDropFace: return "drop_face";
    case DropoutDecision::kDropPose: return "drop_pose";
    case DropoutDecision::kKeepAll: return "keep_all";
  }
  return "keep_all";
}

void DropoutProbs::validate() const {
  if (p_all < 0.0 || p_tex < 0.0 || p_face < 0.0 || p_pose < 0.0) throw ConfigError("dropout probabilities must be non-negative");
  if (p_all + p_tex + p_face + p_pose > 1.0 + 1e-12) throw ConfigError("dropout probabilities sum to more than 1");
}

DropoutDecision sample_dropout(Rng& rng, const DropoutProbs& p) {
  p.validate();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double edge = p.p_all;
  if (u < edge) return DropoutDecision::kDropAll;
  edge += p.p_tex;
  if (u < edge) return DropoutDecision::kDropTexture;
  edge += p.p_face;
  if (u < edge) return DropoutDecision::kDropFace;
  edge += p.p_pose;
  if (u < edge) return DropoutDecision::kDropPose;
  return DropoutDecision::kKeepAll;
}

}  // namespace uvr
