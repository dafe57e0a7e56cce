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

#include <utility>
#include <vector>

#include "uvr/condition.hpp"

namespace uvr {

struct SubjectImage {
  Image image;
  PoseParams pose;
  Camera camera;
};

/// N >= 2 images of one identity.
struct SubjectSet {
  Mesh rest;
  std::vector<SubjectImage> images;

  void validate() const;
};

/// Uniform over ordered pairs (i, j) with i != j.
std::pair<int, int> sample_pair(int n, Rng& rng);

/// Per-image tensors at working resolution, computed once before adaptation.
struct PreparedSubject {
  int resolution = 0;
  std::vector<EncodedCondition<float>> own;  // pose, texture and face of image i
  std::vector<Eigen::VectorXf> targets;      // image i, flattened
  std::vector<Eigen::VectorXf> face_masks;   // M_i repeated over channels, flattened

  int size() const { return static_cast<int>(targets.size()); }
  /// c = {T_i, p_j, face crop of i}.
  EncodedCondition<float> pair_condition(int i, int j) const;
};

PreparedSubject prepare_subject(const SubjectSet& s, int resolution, const RasterConfig& raster = {});

/// Mask repeated over channels, flattened channel-major.
Eigen::VectorXf expand_mask(const Mask& m, int channels);

/// Face-masked flow loss normalised by the number of masked elements.
template <typename Scalar>
Scalar ft_loss(NetView<Scalar> view, const FlowBatch<Scalar>& batch, std::span<const EncodedCondition<Scalar>> conds,
               const MatX<Scalar>& masks) {
  return flow_objective<Scalar>(view, batch, conds, &masks, GradTarget::kNone).loss;
}

struct RegularizationSample {
  EncodedCondition<float> condition;
  Eigen::VectorXf target;
};

struct FinetuneConfig {
  int iters = 5000;
  int batch = 4;
  AdamWConfig optimizer;
  AdapterConfig adapter;

  void validate() const;
};

struct FinetuneResult {
  AdapterParams<float> adapter;
  std::vector<float> losses;
};

/// Trains only the adapter factors. With a regularisation set, one batch slot
/// per step holds a regularisation sample under the unmasked loss.
FinetuneResult finetune(const ConvVelocityNet<float>& net, const PreparedSubject& subject, const FinetuneConfig& config,
                        Rng& rng, std::span<const RegularizationSample> regularization = {});

}  // namespace uvr
