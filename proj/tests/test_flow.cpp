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

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "uvr/condition.hpp"
#include "uvr/flow.hpp"

using namespace uvr;

namespace {

ConvNetConfig small_net(int resolution = 16, int width = 4) {
  ConvNetConfig c;
  c.resolution = resolution;
  c.width = width;
  return c;
}

template <typename S>
std::vector<EncodedCondition<S>> random_conditions(const ConvNetConfig& c, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution flag(0.7);
  std::vector<EncodedCondition<S>> out;
  for (int i = 0; i < n; ++i) {
    EncodedCondition<S> e;
    e.spatial.resize(c.cond_channels, c.pixels());
    for (Eigen::Index k = 0; k < e.spatial.size(); ++k) e.spatial.data()[k] = static_cast<S>(u(rng));
    e.presence.resize(c.presence_channels);
    for (Eigen::Index k = 0; k < e.presence.size(); ++k) e.presence[k] = flag(rng) ? S(1) : S(0);
    out.push_back(std::move(e));
  }
  return out;
}

template <typename S>
MatX<S> random_batch(const ConvNetConfig& c, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatX<S> x(c.data_size(), n);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = static_cast<S>(u(rng));
  return x;
}

Image random_image(int size, Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(size, size, 3);
  for (Eigen::Index k = 0; k < img.data().size(); ++k) img.data()[k] = u(rng);
  return img;
}

}  // namespace

TEST_CASE("interpolate") {
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(4, 3), x1 = Eigen::MatrixXd::Random(4, 3);
  CHECK((interpolate(x0, x1, 0.0).array() == x0.array()).all());
  CHECK((interpolate(x0, x1, 1.0).array() == x1.array()).all());
  const Eigen::MatrixXd mid = interpolate(Eigen::MatrixXd::Zero(4, 3), Eigen::MatrixXd::Constant(4, 3, 2.0), 0.5);
  CHECK((mid.array() == 1.0).all());
  CHECK_THROWS_AS(interpolate(x0, Eigen::MatrixXd::Zero(3, 3), 0.5), InputError);
  CHECK_THROWS_AS(interpolate(x0, x1, 1.5), InputError);
}

TEST_CASE("flow batch construction") {
  Rng rng(1);
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(5, 6);
  const FlowBatch<double> b = FlowBatch<double>::sample(x0, rng);
  CHECK(b.t.minCoeff() >= 0.0);
  CHECK(b.t.maxCoeff() <= 1.0);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const Eigen::VectorXd expect = b.t[i] * b.x1.col(i) + (1.0 - b.t[i]) * b.x0.col(i);
    CHECK((b.xt.col(i).array() == expect.array()).all());
  }
  // The regression target does not depend on t.
  FlowBatch<double> other = FlowBatch<double>::make(b.x0, b.x1, Eigen::VectorXd::Constant(6, 0.9));
  CHECK((other.target().array() == b.target().array()).all());
  CHECK((b.target().array() == (b.x1 - b.x0).array()).all());
  CHECK_THROWS_AS(FlowBatch<double>::make(b.x0, b.x1, Eigen::VectorXd::Zero(2)), InputError);
}

TEST_CASE("fm_loss on forced outputs and permutations") {
  const ConvNetConfig c = small_net();
  Rng rng(2);
  ConvVelocityNet<double> zero(c);  // every parameter zero: v == 0
  const auto conds = random_conditions<double>(c, 3, rng);
  const Eigen::MatrixXd x0 = random_batch<double>(c, 3, rng);
  const FlowBatch<double> b = FlowBatch<double>::sample(x0, rng);
  CHECK(fm_loss<double>(zero, b, conds) == doctest::Approx(b.target().squaredNorm() / b.target().size()).epsilon(1e-14));

  // x1 == x0 makes the target zero, which the zero network predicts exactly.
  const FlowBatch<double> still = FlowBatch<double>::make(x0, x0, b.t);
  CHECK(fm_loss<double>(zero, still, conds) == 0.0);
  const LossGrad<double> lg = flow_objective<double>(zero, still, conds, nullptr, GradTarget::kBase);
  CHECK(lg.grad.norm() < 1e-10);

  ConvVelocityNet<double> net(c, rng);
  std::vector<int> perm = {2, 0, 1};
  Eigen::MatrixXd px0(x0.rows(), 3), px1(x0.rows(), 3);
  Eigen::VectorXd pt(3);
  std::vector<EncodedCondition<double>> pc;
  for (int i = 0; i < 3; ++i) {
    px0.col(i) = b.x0.col(perm[i]);
    px1.col(i) = b.x1.col(perm[i]);
    pt[i] = b.t[perm[i]];
    pc.push_back(conds[static_cast<size_t>(perm[i])]);
  }
  const FlowBatch<double> permuted = FlowBatch<double>::make(px0, px1, pt);
  CHECK(fm_loss<double>(net, permuted, pc) == doctest::Approx(fm_loss<double>(net, b, conds)).epsilon(1e-13));
}

TEST_CASE("network output has the data shape and is deterministic") {
  const ConvNetConfig c = small_net();
  Rng rng(3);
  ConvVelocityNet<float> net(c, rng);
  const auto conds = random_conditions<float>(c, 2, rng);
  const Eigen::MatrixXf x = random_batch<float>(c, 2, rng);
  for (float t : {0.0f, 0.3f, 1.0f}) {
    const Eigen::MatrixXf v = velocity<float>(net, x, Eigen::VectorXf::Constant(2, t), conds);
    CHECK(v.rows() == x.rows());
    CHECK(v.cols() == x.cols());
    CHECK((v.array() == velocity<float>(net, x, Eigen::VectorXf::Constant(2, t), conds).array()).all());
  }
  CHECK(ConvVelocityNet<float>(ConvNetConfig{}, rng).param_count() <= 2000000);
}

TEST_CASE("absent conditions do not reach the network") {
  const int r = 16;
  Rng rng(4);
  ConditionSet a, b;
  a.pose_render = random_image(32, rng);
  b.pose_render = a.pose_render;
  a.texture = TextureMap{random_image(64, rng), Mask::Ones(64, 64)};
  b.texture = TextureMap{random_image(64, rng), Mask::Ones(64, 64)};
  a.face_crop = random_image(16, rng);
  b.face_crop = random_image(16, rng);

  // Dropping everything erases every difference between the two sets.
  const auto ea = encode_condition(apply_dropout(a, DropoutDecision::kDropAll), r);
  const auto eb = encode_condition(apply_dropout(b, DropoutDecision::kDropAll), r);
  CHECK((ea.spatial.array() == eb.spatial.array()).all());
  CHECK((ea.presence.array() == 0.0f).all());

  // Texture and face dropped: the remaining pose is shared, so inputs agree.
  ConditionSet ta = apply_dropout(a, DropoutDecision::kDropTexture), tb = apply_dropout(b, DropoutDecision::kDropTexture);
  ta.face_crop.reset();
  tb.face_crop.reset();
  CHECK((encode_condition(ta, r).spatial.array() == encode_condition(tb, r).spatial.array()).all());

  // Identical loss for a drop-all step whatever the original contents.
  const ConvNetConfig c = small_net(r);
  ConvVelocityNet<float> net(c, rng);
  const FlowBatch<float> batch = FlowBatch<float>::sample(random_batch<float>(c, 1, rng), rng);
  const std::vector<EncodedCondition<float>> ca = {ea}, cb = {eb};
  CHECK(fm_loss<float>(net, batch, ca) == fm_loss<float>(net, batch, cb));

  // The per-branch flags follow the decision.
  CHECK_FALSE(apply_dropout(a, DropoutDecision::kDropPose).has_pose());
  CHECK_FALSE(apply_dropout(a, DropoutDecision::kDropFace).has_face());
  CHECK_FALSE(apply_dropout(a, DropoutDecision::kDropTexture).has_texture());
  const ConditionSet kept = apply_dropout(a, DropoutDecision::kKeepAll);
  CHECK((kept.has_pose() && kept.has_texture() && kept.has_face()));
}

TEST_CASE("learning rate zero leaves parameters unchanged") {
  const ConvNetConfig c = small_net();
  Rng rng(5);
  ConvVelocityNet<float> net(c, rng);
  const Eigen::VectorXf before = net.params();
  AdamWConfig oc;
  oc.lr = 0.0;
  AdamW<float> opt(oc, net.param_count());
  const auto conds = random_conditions<float>(c, 2, rng);
  const FlowBatch<float> b = FlowBatch<float>::sample(random_batch<float>(c, 2, rng), rng);
  for (int i = 0; i < 3; ++i) train_step<float>(net, opt, b, conds);
  CHECK((net.params().array() == before.array()).all());
}

TEST_CASE("overfits a fixed batch of eight") {
  ConvNetConfig c;  // full toy size
  Rng rng(7);
  ConvVelocityNet<float> net(c, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXf x0(c.data_size(), 8);
  std::vector<EncodedCondition<float>> conds;
  for (int i = 0; i < 8; ++i) {
    // Smooth images: one Gaussian blob per channel.
    for (int ch = 0; ch < 3; ++ch) {
      const double cx = u(rng) * 64, cy = u(rng) * 64, a = u(rng);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
          x0(ch * 4096 + y * 64 + x, i) = static_cast<float>(a * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 300.0));
    }
    EncodedCondition<float> e;
    e.spatial = Eigen::MatrixXf::Zero(9, 4096);
    for (int ch = 0; ch < 3; ++ch) e.spatial.row(3 + ch) = x0.col(i).segment(ch * 4096, 4096).transpose();
    e.presence = Eigen::VectorXf::Ones(3);
    conds.push_back(e);
  }
  const FlowBatch<float> b = FlowBatch<float>::sample(x0, rng);
  AdamWConfig oc;
  oc.lr = 3e-3;
  AdamW<float> opt(oc, net.param_count());
  const float first = train_step<float>(net, opt, b, conds);
  float last = first;
  for (int s = 1; s < 200; ++s) last = train_step<float>(net, opt, b, conds);
  MESSAGE("overfit loss " << first << " -> " << last);
  CHECK(last < 0.1f * first);
}

TEST_CASE("integration of stub fields") {
  Rng rng(8);
  const Eigen::MatrixXd x1 = Eigen::MatrixXd::Random(6, 3), target = Eigen::MatrixXd::Random(6, 3);
  auto constant = [&](const Eigen::MatrixXd&, double) -> Eigen::MatrixXd { return x1 - target; };
  for (int steps : {1, 2, 7, 50}) {
    CHECK((integrate<double>(constant, x1, steps) - target).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((integrate<double>(constant, x1, steps, Scheme::kHeun) - target).cwiseAbs().maxCoeff() < 1e-14);
  }
  const Eigen::MatrixXd e2 = integrate<double>(constant, x1, 2, Scheme::kEuler);
  const Eigen::MatrixXd h2 = integrate<double>(constant, x1, 2, Scheme::kHeun);
  CHECK((e2.array() == h2.array()).all());
  CHECK_THROWS_AS(integrate<double>(constant, x1, 0), InputError);

  // dx/dt = a x integrated from t = 1 down to 0 has x(0) = x(1) exp(-a).
  const double a = 1.3;
  auto linear = [&](const Eigen::MatrixXd& x, double) -> Eigen::MatrixXd { return a * x; };
  const Eigen::MatrixXd reference = integrate<double>(linear, x1, 1024, Scheme::kHeun);
  CHECK((reference - x1 * std::exp(-a)).cwiseAbs().maxCoeff() < 1e-6);
  double prev = 1e9;
  for (int steps : {8, 16, 32, 64}) {
    const double err = (integrate<double>(linear, x1, steps) - reference).cwiseAbs().maxCoeff();
    const double err2 = (integrate<double>(linear, x1, 2 * steps) - reference).cwiseAbs().maxCoeff();
    // Local truncation bound of one Euler step: (a^2 / 2) dt^2 max|x|.
    const double dt = 1.0 / steps;
    const double bound = 0.5 * a * a * dt * dt * x1.cwiseAbs().maxCoeff() * std::exp(a);
    CHECK(std::abs(err - err2) < bound * steps);
    CHECK(err < prev);
    CHECK(err2 / err == doctest::Approx(0.5).epsilon(0.1));
    prev = err;
  }
  auto blowup = [&](const Eigen::MatrixXd& x, double) -> Eigen::MatrixXd { return x * 1e300; };
  CHECK_THROWS_AS(integrate<double>(blowup, Eigen::MatrixXd::Constant(1, 1, 1e10), 4), NumericError);
}

TEST_CASE("gradient checks") {
  Rng rng(9);
  SUBCASE("single linear layer") {
    MlpConfig mc;
    mc.depth = 0;
    MlpVelocityNet<double> net(mc, rng);
    const FlowBatch<double> b = FlowBatch<double>::sample(Eigen::MatrixXd::Random(2, 16), rng);
    auto loss = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
      MlpVelocityNet<double> probe = net;
      probe.params() = p;
      const LossGrad<double> lg = vector_objective(probe, b, g != nullptr);
      if (g) *g = lg.grad;
      return lg.loss;
    };
    CHECK(grad_check<double>(loss, net.params(), rng).max_rel_error < 1e-8);
  }
  SUBCASE("mlp") {
    MlpVelocityNet<double> net(MlpConfig{}, rng);
    const FlowBatch<double> b = FlowBatch<double>::sample(Eigen::MatrixXd::Random(2, 16), rng);
    auto loss = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
      MlpVelocityNet<double> probe = net;
      probe.params() = p;
      const LossGrad<double> lg = vector_objective(probe, b, g != nullptr);
      if (g) *g = lg.grad;
      return lg.loss;
    };
    CHECK(grad_check<double>(loss, net.params(), rng).max_rel_error < 1e-6);
  }
  SUBCASE("small convolutional network") {
    const ConvNetConfig c = small_net();
    ConvVelocityNet<double> net(c, rng);
    const auto conds = random_conditions<double>(c, 2, rng);
    const FlowBatch<double> b = FlowBatch<double>::sample(random_batch<double>(c, 2, rng), rng);
    const GradCheckResult r = grad_check<double>(net, b, conds, rng, 1e-4, 128);
    CHECK(r.indices.size() == 128);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("adamw matches the update rule written out") {
  AdamWConfig oc;
  oc.lr = 0.01;
  oc.weight_decay = 0.1;
  AdamW<double> opt(oc, 2);
  Eigen::VectorXd p(2), m = Eigen::VectorXd::Zero(2), v = Eigen::VectorXd::Zero(2);
  p << 1.0, -2.0;
  Eigen::VectorXd q = p;
  for (int k = 1; k <= 3; ++k) {
    const Eigen::VectorXd g = Eigen::Vector2d(0.5 * k, -0.25);
    opt.update(p, g);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseAbs2();
    const Eigen::VectorXd mh = m / (1.0 - std::pow(0.9, k)), vh = v / (1.0 - std::pow(0.999, k));
    q = q - 0.01 * 0.1 * q;
    q = q - (0.01 * mh.array() / (vh.array().sqrt() + 1e-8)).matrix();
  }
  CHECK((p - q).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(2, std::nan(""));
  CHECK_THROWS_AS(opt.update(p, bad), NumericError);
}

TEST_CASE("energy distance") {
  Rng rng(10);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 30), y = Eigen::MatrixXd::Random(2, 20).array() + 1.0;
  double xy = 0, xx = 0, yy = 0;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 20; ++j) xy += (x.col(i) - y.col(j)).norm();
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) xx += (x.col(i) - x.col(j)).norm();
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) yy += (y.col(i) - y.col(j)).norm();
  const double expect = 2.0 * xy / 600.0 - xx / 900.0 - yy / 400.0;
  CHECK(energy_distance(x, y) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(energy_distance(x, x) == doctest::Approx(0.0).epsilon(1e-12));

  const Eigen::MatrixXd ring = gaussian_ring(4000, rng, 8, 2.0, 0.1);
  const Eigen::VectorXd radius = ring.colwise().norm();
  CHECK(radius.mean() == doctest::Approx(2.0).epsilon(0.01));
}
