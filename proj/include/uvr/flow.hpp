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

// Conditional flow matching on flattened samples. A batch is a D x B matrix
// with one sample per column; image samples are flattened channel-major.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "uvr/velocity.hpp"

namespace uvr {

/// x_t = t x1 + (1 - t) x0.
template <typename DerivedA, typename DerivedB>
MatX<typename DerivedA::Scalar> interpolate(const Eigen::MatrixBase<DerivedA>& x0,
                                            const Eigen::MatrixBase<DerivedB>& x1, typename DerivedA::Scalar t) {
  using S = typename DerivedA::Scalar;
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols()) throw InputError("interpolate: shape mismatch");
  if (!(t >= S(0) && t <= S(1))) throw InputError("interpolate: t must lie in [0, 1]");
  return t * x1 + (S(1) - t) * x0;
}

template <typename Scalar>
struct FlowBatch {
  MatX<Scalar> x0;  // data
  MatX<Scalar> x1;  // noise
  VecX<Scalar> t;
  MatX<Scalar> xt;

  Eigen::Index size() const { return x0.cols(); }
  /// Regression target of every column; independent of t.
  MatX<Scalar> target() const { return x1 - x0; }

  static FlowBatch make(MatX<Scalar> x0, MatX<Scalar> x1, VecX<Scalar> t) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols()) throw InputError("flow batch: x0 and x1 differ in shape");
    if (t.size() != x0.cols()) throw InputError("flow batch: need one t per sample");
    FlowBatch b{std::move(x0), std::move(x1), std::move(t), {}};
    b.xt.resize(b.x0.rows(), b.x0.cols());
    for (Eigen::Index i = 0; i < b.size(); ++i) b.xt.col(i) = interpolate(b.x0.col(i), b.x1.col(i), b.t[i]);
    return b;
  }

  /// Draws x1 ~ N(0, I) and t ~ U[0, 1].
  static FlowBatch sample(MatX<Scalar> x0, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatX<Scalar> x1(x0.rows(), x0.cols());
    for (Eigen::Index i = 0; i < x1.size(); ++i) x1.data()[i] = static_cast<Scalar>(n(rng));
    VecX<Scalar> t(x0.cols());
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(u(rng));
    return make(std::move(x0), std::move(x1), std::move(t));
  }
};

/// Encoded conditions for one sample at working resolution.
template <typename Scalar>
struct EncodedCondition {
  MatX<Scalar> spatial;   // cond_channels x P: pose render, texture, face crop
  VecX<Scalar> presence;  // 1 where the condition is supplied

  template <typename Other>
  EncodedCondition<Other> cast() const {
    return {spatial.template cast<Other>(), presence.template cast<Other>()};
  }
};

template <typename Scalar>
typename ConvVelocityNet<Scalar>::Input net_input(const ConvNetConfig& cfg, const Eigen::Ref<const VecX<Scalar>>& xt,
                                                  Scalar t, const EncodedCondition<Scalar>& c) {
  if (xt.size() != cfg.data_size()) throw InputError("sample size does not match the network resolution");
  if (c.spatial.rows() != cfg.cond_channels || c.spatial.cols() != cfg.pixels() ||
      c.presence.size() != cfg.presence_channels) {
    throw InputError("condition tensor does not match the network layout");
  }
  typename ConvVelocityNet<Scalar>::Input in;
  in.spatial.resize(cfg.spatial_in(), cfg.pixels());
  in.spatial.topRows(cfg.data_channels) =
      Eigen::Map<const MatX<Scalar>>(xt.data(), cfg.pixels(), cfg.data_channels).transpose();
  in.spatial.bottomRows(cfg.cond_channels) = c.spatial;
  in.constant.resize(cfg.const_in());
  in.constant << c.presence, nn::time_embedding<Scalar>(t, cfg.time_frequencies);
  return in;
}

/// v_theta(x_t, t, c) for every column.
template <typename Scalar>
MatX<Scalar> velocity(NetView<Scalar> view, const MatX<Scalar>& xt, const VecX<Scalar>& t,
                      std::span<const EncodedCondition<Scalar>> conds) {
  const ConvNetConfig& cfg = view.net->config();
  if (static_cast<Eigen::Index>(conds.size()) != xt.cols() || t.size() != xt.cols()) {
    throw InputError("velocity: need one condition and one t per sample");
  }
  const auto w = view.net->prepare(view.adapter);
  MatX<Scalar> out(xt.rows(), xt.cols());
  for (Eigen::Index b = 0; b < xt.cols(); ++b) {
    const MatX<Scalar> v = view.net->forward(w, net_input<Scalar>(cfg, xt.col(b), t[b], conds[b]));
    Eigen::Map<MatX<Scalar>>(out.col(b).data(), cfg.pixels(), cfg.data_channels) = v.transpose();
  }
  return out;
}

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  VecX<Scalar> grad;  // base parameters or adapter factors, depending on the request
};

enum class GradTarget { kNone, kBase, kAdapter };

/// sum over selected elements of (v - (x1 - x0))^2 divided by the number of
/// selected elements. `weights` (D x B, values 0/1) selects elements; null
/// selects everything. Both paths share one summation so an all-ones mask
/// reproduces the unmasked value exactly.
template <typename Scalar>
LossGrad<Scalar> flow_objective(NetView<Scalar> view, const FlowBatch<Scalar>& batch,
                                std::span<const EncodedCondition<Scalar>> conds, const MatX<Scalar>* weights,
                                GradTarget target) {
  const ConvVelocityNet<Scalar>& net = *view.net;
  const ConvNetConfig& cfg = net.config();
  const Eigen::Index n = batch.size();
  if (static_cast<Eigen::Index>(conds.size()) != n) throw InputError("flow objective: need one condition per sample");
  if (batch.x0.rows() != cfg.data_size()) throw InputError("flow objective: sample size does not match network");
  if (weights && (weights->rows() != batch.x0.rows() || weights->cols() != n)) {
    throw InputError("flow objective: mask shape does not match batch");
  }
  if (target == GradTarget::kAdapter && !view.adapter) throw InputError("flow objective: no adapter to differentiate");

  const Scalar count = weights ? weights->sum() : static_cast<Scalar>(batch.x0.size());
  LossGrad<Scalar> out;
  if (target == GradTarget::kBase) out.grad = VecX<Scalar>::Zero(net.param_count());
  if (target == GradTarget::kAdapter) out.grad = VecX<Scalar>::Zero(view.adapter->values.size());
  if (count == Scalar(0)) {
    warn("flow objective: mask selects no elements; loss defined as 0");
    return out;
  }

  const auto w = net.prepare(view.adapter);
  VecX<Scalar> eff_grad;
  if (target != GradTarget::kNone) eff_grad = VecX<Scalar>::Zero(net.param_count());
  typename ConvVelocityNet<Scalar>::Cache cache;
  Scalar total = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto in = net_input<Scalar>(cfg, batch.xt.col(b), batch.t[b], conds[static_cast<size_t>(b)]);
    const MatX<Scalar> v = net.forward(w, in, target != GradTarget::kNone ? &cache : nullptr);
    // Residual in network layout (channels x pixels).
    MatX<Scalar> r = v - Eigen::Map<const MatX<Scalar>>(batch.x1.col(b).data(), cfg.pixels(), cfg.data_channels)
                             .transpose() +
                     Eigen::Map<const MatX<Scalar>>(batch.x0.col(b).data(), cfg.pixels(), cfg.data_channels)
                         .transpose();
    if (weights) {
      r = r.cwiseProduct(
          Eigen::Map<const MatX<Scalar>>(weights->col(b).data(), cfg.pixels(), cfg.data_channels).transpose());
    }
    total += r.squaredNorm();
    if (target != GradTarget::kNone) net.backward(w, cache, (Scalar(2) / count) * r, eff_grad);
  }
  out.loss = total / count;
  if (!std::isfinite(static_cast<double>(out.loss))) {
    throw NumericError("flow objective is not finite (loss " + std::to_string(static_cast<double>(out.loss)) + ")");
  }
  if (target == GradTarget::kBase) out.grad = std::move(eff_grad);
  if (target == GradTarget::kAdapter) net.adapter_gradient(*view.adapter, eff_grad, out.grad);
  if (target != GradTarget::kNone && !out.grad.allFinite()) throw NumericError("flow objective gradient is not finite");
  return out;
}

/// Mean over batch and elements of |v_theta(x_t, t, c) - (x1 - x0)|^2.
template <typename Scalar>
Scalar fm_loss(NetView<Scalar> view, const FlowBatch<Scalar>& batch, std::span<const EncodedCondition<Scalar>> conds) {
  return flow_objective<Scalar>(view, batch, conds, nullptr, GradTarget::kNone).loss;
}

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const {
    if (!(lr >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0) ||
        !(weight_decay >= 0.0)) {
      throw ConfigError("invalid AdamW hyperparameters");
    }
  }
};

/// Adaptive moments with decoupled weight decay over one flat parameter vector.
template <typename Scalar>
class AdamW {
 public:
  AdamW() = default;
  AdamW(const AdamWConfig& config, Eigen::Index size)
      : config_(config), m_(VecX<Scalar>::Zero(size)), v_(VecX<Scalar>::Zero(size)) {
    config_.validate();
  }

  void update(VecX<Scalar>& params, const VecX<Scalar>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw InputError("AdamW: size mismatch");
    if (!grad.allFinite()) throw NumericError("AdamW: non-finite gradient at step " + std::to_string(step_ + 1));
    ++step_;
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar lr = static_cast<Scalar>(config_.lr);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta1, static_cast<double>(step_)));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta2, static_cast<double>(step_)));
    const Scalar eps = static_cast<Scalar>(config_.eps);
    params -= (lr * static_cast<Scalar>(config_.weight_decay)) * params;
    params -= lr * ((m_ / c1).array() / ((v_ / c2).array().sqrt() + eps)).matrix();
  }

  const AdamWConfig& config() const { return config_; }
  AdamWConfig& config() { return config_; }
  long step() const { return step_; }
  const VecX<Scalar>& first_moment() const { return m_; }
  const VecX<Scalar>& second_moment() const { return v_; }
  void restore(long step, VecX<Scalar> m, VecX<Scalar> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw InputError("AdamW: restored state has the wrong size");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  AdamWConfig config_;
  VecX<Scalar> m_;
  VecX<Scalar> v_;
  long step_ = 0;
};

/// One optimizer step on the base parameters. Conditions arrive with dropout
/// already applied.
template <typename Scalar>
Scalar train_step(ConvVelocityNet<Scalar>& net, AdamW<Scalar>& opt, const FlowBatch<Scalar>& batch,
                  std::span<const EncodedCondition<Scalar>> conds) {
  LossGrad<Scalar> lg = flow_objective<Scalar>(net, batch, conds, nullptr, GradTarget::kBase);
  opt.update(net.params(), lg.grad);
  return lg.loss;
}

enum class Scheme { kEuler, kHeun };

Scheme scheme_from_name(std::string_view name);
std::string_view scheme_name(Scheme s);

/// Integrates dx/dt = field(x, t) from t = 1 down to t = 0 on a uniform grid.
template <typename Scalar, typename Field>
MatX<Scalar> integrate(Field&& field, MatX<Scalar> x, int steps, Scheme scheme = Scheme::kEuler) {
  if (steps < 1) throw InputError("integrate: steps must be at least 1");
  const Scalar dt = Scalar(1) / static_cast<Scalar>(steps);
  for (int k = 0; k < steps; ++k) {
    const Scalar t = Scalar(1) - static_cast<Scalar>(k) * dt;
    const Scalar t_next = Scalar(1) - static_cast<Scalar>(k + 1) * dt;
    const MatX<Scalar> v1 = field(x, t);
    if (scheme == Scheme::kEuler) {
      x -= dt * v1;
    } else {
      const MatX<Scalar> pred = x - dt * v1;
      const MatX<Scalar> v2 = field(pred, t_next);
      x -= (dt / Scalar(2)) * (v1 + v2);
    }
    if (!x.allFinite()) throw NumericError("integrate: state became non-finite at step " + std::to_string(k + 1));
  }
  return x;
}

/// Samples x0 from noise x1 through the conditional velocity field.
template <typename Scalar>
MatX<Scalar> sample(NetView<Scalar> view, const MatX<Scalar>& x1, std::span<const EncodedCondition<Scalar>> conds,
                    int steps, Scheme scheme) {
  auto field = [&](const MatX<Scalar>& x, Scalar t) {
    return velocity<Scalar>(view, x, VecX<Scalar>::Constant(x.cols(), t), conds);
  };
  return integrate<Scalar>(field, x1, steps, scheme);
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double analytic_norm = 0.0;
  std::vector<Eigen::Index> indices;
};

/// Central differences of `loss` on a random subset of parameters against
/// the analytic gradient. LossFn: Scalar(const VecX<Scalar>& params,
/// VecX<Scalar>* grad). Relative error is |a - n| / max(|a|, |n|, floor).
template <typename Scalar, typename LossFn>
GradCheckResult grad_check(LossFn&& loss, const VecX<Scalar>& params, Rng& rng, int subset = 64, double eps = 1e-4,
                           double floor = 1e-8) {
  VecX<Scalar> grad;
  loss(params, &grad);
  GradCheckResult res;
  res.analytic_norm = static_cast<double>(grad.norm());
  const Eigen::Index n = params.size();
  std::vector<Eigen::Index> all(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min<size_t>(all.size(), static_cast<size_t>(subset)));
  std::sort(all.begin(), all.end());
  res.indices = all;
  VecX<Scalar> p = params;
  for (Eigen::Index i : all) {
    const Scalar keep = p[i];
    p[i] = keep + static_cast<Scalar>(eps);
    const double up = static_cast<double>(loss(p, nullptr));
    p[i] = keep - static_cast<Scalar>(eps);
    const double down = static_cast<double>(loss(p, nullptr));
    p[i] = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = static_cast<double>(grad[i]);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic - numeric) / denom);
  }
  return res;
}

/// grad_check of fm_loss with respect to the network's own parameters.
template <typename Scalar>
GradCheckResult grad_check(const ConvVelocityNet<Scalar>& net, const FlowBatch<Scalar>& batch,
                           std::span<const EncodedCondition<Scalar>> conds, Rng& rng, double eps = 1e-4,
                           int subset = 64) {
  ConvVelocityNet<Scalar> probe = net;
  auto loss = [&](const VecX<Scalar>& p, VecX<Scalar>* g) {
    probe.params() = p;
    LossGrad<Scalar> lg =
        flow_objective<Scalar>(probe, batch, conds, nullptr, g ? GradTarget::kBase : GradTarget::kNone);
    if (g) *g = std::move(lg.grad);
    return lg.loss;
  };
  return grad_check<Scalar>(loss, net.params(), rng, subset, eps);
}

// ---- vector variant --------------------------------------------------------

/// Mean squared velocity error of the MLP field on a vector batch.
template <typename Scalar>
LossGrad<Scalar> vector_objective(const MlpVelocityNet<Scalar>& net, const FlowBatch<Scalar>& batch, bool with_grad) {
  typename MlpVelocityNet<Scalar>::Cache cache;
  const MatX<Scalar> v = net.forward(batch.xt, batch.t, with_grad ? &cache : nullptr);
  const MatX<Scalar> r = v - batch.target();
  const Scalar count = static_cast<Scalar>(r.size());
  LossGrad<Scalar> out;
  out.loss = r.squaredNorm() / count;
  if (!std::isfinite(static_cast<double>(out.loss))) throw NumericError("vector flow loss is not finite");
  if (with_grad) {
    out.grad = VecX<Scalar>::Zero(net.params().size());
    net.backward(cache, (Scalar(2) / count) * r, out.grad);
  }
  return out;
}

/// One optimizer step of the vector trainer.
template <typename Scalar>
Scalar train_step(MlpVelocityNet<Scalar>& net, AdamW<Scalar>& opt, const FlowBatch<Scalar>& batch) {
  LossGrad<Scalar> lg = vector_objective(net, batch, true);
  opt.update(net.params(), lg.grad);
  return lg.loss;
}

template <typename Scalar>
MatX<Scalar> sample(const MlpVelocityNet<Scalar>& net, const MatX<Scalar>& x1, int steps, Scheme scheme) {
  auto field = [&](const MatX<Scalar>& x, Scalar t) { return net.forward(x, VecX<Scalar>::Constant(x.cols(), t)); };
  return integrate<Scalar>(field, x1, steps, scheme);
}

/// 2 E|X - Y| - E|X - X'| - E|Y - Y'| over the columns of two sample sets
/// (V-statistic).
double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Points from an equal-weight mixture of `modes` isotropic Gaussians whose
/// means sit on a circle.
Eigen::MatrixXd gaussian_ring(int n, Rng& rng, int modes = 8, double radius = 2.0, double stddev = 0.1);

}  // namespace uvr
