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
#include "uvr/personalize.hpp"

namespace uvr {

void SubjectSet::validate() const {
  if (images.size() < 2) throw InputError("a subject set needs at least two images");
}

std::pair<int, int> sample_pair(int n, Rng& rng) {
  if (n < 2) throw InputError("sample_pair needs at least two images");
  const int i = std::uniform_int_distribution<int>(0, n - 1)(rng);
  int j = std::uniform_int_distribution<int>(0, n - 2)(rng);
  if (j >= i) ++j;
  return {i, j};
}

EncodedCondition<float> PreparedSubject::pair_condition(int i, int j) const {
  EncodedCondition<float> c = own.at(static_cast<size_t>(i));
  const EncodedCondition<float>& target = own.at(static_cast<size_t>(j));
  c.spatial.topRows(3) = target.spatial.topRows(3);
  c.presence[0] = target.presence[0];
  return c;
}

Eigen::VectorXf expand_mask(const Mask& m, int channels) {
  const Eigen::Index p = m.size();
  Eigen::VectorXf out(p * channels);
  const Eigen::VectorXf one = Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>>(m.data(), p).cast<float>();
  for (int c = 0; c < channels; ++c) out.segment(c * p, p) = one;
  return out;
}

PreparedSubject prepare_subject(const SubjectSet& s, int resolution, const RasterConfig& raster) {
  s.validate();
  PreparedSubject out;
  out.resolution = resolution;
  for (const SubjectImage& im : s.images) {
    const Mesh posed = pose_body(s.rest, im.pose);
    ConditionSet c;
    c.texture = rasterize_uv(posed, im.camera, im.image, raster);
    c.pose_render = render_pose_image(posed, im.camera);
    c.face_crop = crop_face(im.image, face_box(posed, im.camera), resolution);
    out.own.push_back(encode_condition(c, resolution));
    out.targets.push_back(flatten(resize_area(im.image, resolution, resolution)));
    out.face_masks.push_back(expand_mask(face_region_mask(posed, im.camera, resolution), 3));
  }
  return out;
}

void FinetuneConfig::validate() const {
  if (iters < 0) throw ConfigError("finetune iterations must be non-negative");
  if (batch < 1) throw ConfigError("finetune batch must be positive");
  optimizer.validate();
  adapter.validate();
}

FinetuneResult finetune(const ConvVelocityNet<float>& net, const PreparedSubject& subject, const FinetuneConfig& config,
                        Rng& rng, std::span<const RegularizationSample> regularization) {
  config.validate();
  if (subject.resolution != net.config().resolution) throw ConfigError("subject resolution differs from the network");
  if (subject.size() < 2) throw InputError("finetune needs at least two subject images");
  if (!regularization.empty() && config.batch < 2) throw ConfigError("regularisation needs a batch of at least 2");

  FinetuneResult res;
  res.adapter = net.make_adapter(config.adapter, &rng);
  AdamW<float> opt(config.optimizer, res.adapter.values.size());
  const Eigen::Index d = net.config().data_size();
  const int subject_slots = regularization.empty() ? config.batch : config.batch - 1;
  std::uniform_int_distribution<size_t> pick_reg(0, regularization.empty() ? 0 : regularization.size() - 1);

  for (int it = 0; it < config.iters; ++it) {
    Eigen::MatrixXf x0(d, config.batch);
    Eigen::MatrixXf masks(d, config.batch);
    std::vector<EncodedCondition<float>> conds;
    for (int b = 0; b < config.batch; ++b) {
      if (b < subject_slots) {
        const auto [i, j] = sample_pair(subject.size(), rng);
        conds.push_back(subject.pair_condition(i, j));
        x0.col(b) = subject.targets[static_cast<size_t>(j)];
        masks.col(b) = subject.face_masks[static_cast<size_t>(j)];
      } else {
        const RegularizationSample& r = regularization[pick_reg(rng)];
        conds.push_back(r.condition);
        x0.col(b) = r.target;
        masks.col(b).setOnes();
      }
    }
    const FlowBatch<float> batch = FlowBatch<float>::sample(std::move(x0), rng);
    LossGrad<float> lg = flow_objective<float>(apply_adapter(net, res.adapter), batch, conds, &masks,
                                               GradTarget::kAdapter);
    opt.update(res.adapter.values, lg.grad);
    res.losses.push_back(lg.loss);
  }
  return res;
}

}  // namespace uvr
