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

#include "uvr/nn.hpp"

namespace uvr {

struct ConvNetConfig {
  int resolution = 64;
  int width = 16;
  int data_channels = 3;
  int cond_channels = 9;      // pose render, texture, face crop
  int presence_channels = 3;  // one flag per optional condition
  int time_frequencies = 16;

  int spatial_in() const { return data_channels + cond_channels; }
  int const_in() const { return presence_channels + 2 * time_frequencies; }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(resolution) * resolution; }
  Eigen::Index data_size() const { return pixels() * data_channels; }
  bool operator==(const ConvNetConfig&) const = default;
  void validate() const;
};

inline void ConvNetConfig::validate() const {
  if (resolution < 8 || resolution % 4 != 0) throw ConfigError("resolution must be a multiple of 4 and at least 8");
  if (width < 1) throw ConfigError("network width must be positive");
  if (data_channels < 1 || cond_channels < 0 || presence_channels < 0 || time_frequencies < 1) {
    throw ConfigError("invalid network channel layout");
  }
}

struct AdapterConfig {
  int rank = 4;
  double alpha = 4.0;

  void validate() const {
    if (rank < 1) throw ConfigError("adapter rank must be at least 1");
  }
};

/// Low-rank factors for every convolution: W_eff = W + (alpha / rank) up down.
template <typename Scalar>
struct AdapterParams {
  AdapterConfig config;
  nn::TensorTable table;  // "<layer>.down" (r x n), "<layer>.up" (m x r), per layer
  VecX<Scalar> values;

  Scalar scale() const { return static_cast<Scalar>(config.alpha / config.rank); }
};

/// Small U-Net velocity field: two stride-2 encoder stages, a bottleneck with a
/// global-context branch, nearest upsampling with skip concatenation, SiLU
/// activations throughout. The time embedding and presence flags are
/// spatially constant input channels.
template <typename Scalar>
class ConvVelocityNet {
 public:
  using Mat = MatX<Scalar>;
  using Vec = VecX<Scalar>;

  enum Layer { kE1, kE2, kE3, kMid, kUp1, kUp2, kOut, kConvCount };

  struct Conv {
    std::string name;
    int cin = 0;      // spatial input channels
    int n_const = 0;  // constant input channels (first layer only)
    int cout = 0;
    nn::ConvShape shape;
    Eigen::Index weight = 0;
    Eigen::Index bias = 0;
  };

  struct Input {
    Mat spatial;   // spatial_in x P
    Vec constant;  // const_in
  };

  struct Cache {
    Input in;
    Mat z1, a1, z2, a2, z3, a3, zm, am, u1, z4, a4, u2, z5, a5;
    Vec g;
  };

  /// Effective convolution weights (base plus adapter update).
  using Prepared = std::array<Mat, kConvCount>;

  ConvVelocityNet() = default;
  explicit ConvVelocityNet(const ConvNetConfig& config) : config_(config) {
    config_.validate();
    const int w = config_.width;
    const int r = config_.resolution;
    add_conv(kE1, "e1", config_.spatial_in(), config_.const_in(), w, r, 1);
    add_conv(kE2, "e2", w, 0, 2 * w, r, 2);
    add_conv(kE3, "e3", 2 * w, 0, 2 * w, r / 2, 2);
    add_conv(kMid, "mid", 2 * w, 0, 2 * w, r / 4, 1);
    ctx_weight_ = table_.add("ctx.weight", 2 * w, 2 * w);
    ctx_bias_ = table_.add("ctx.bias", 2 * w, 1, {static_cast<std::uint32_t>(2 * w)});
    add_conv(kUp1, "up1", 4 * w, 0, 2 * w, r / 2, 1);
    add_conv(kUp2, "up2", 3 * w, 0, w, r, 1);
    add_conv(kOut, "out", w, 0, config_.data_channels, r, 1);
    params_ = Vec::Zero(table_.total());
    indicator_ = nn::tap_indicator<Scalar>(convs_[kE1].shape);
  }

  /// He-normal weights, zero biases.
  ConvVelocityNet(const ConvNetConfig& config, Rng& rng) : ConvVelocityNet(config) {
    for (const Conv& c : convs_) {
      const auto& s = table_[c.weight];
      const double fan_in = 9.0 * (c.cin + c.n_const);
      const double gain = c.name == "out" ? 1.0 : 2.0;
      nn::fill_normal<Scalar>(params_.segment(s.offset, s.size()), rng, std::sqrt(gain / fan_in));
    }
    const auto& s = table_[ctx_weight_];
    nn::fill_normal<Scalar>(params_.segment(s.offset, s.size()), rng, std::sqrt(1.0 / (2 * config_.width)));
  }

  template <typename Other>
  ConvVelocityNet<Other> cast() const {
    ConvVelocityNet<Other> out(config_);
    out.params() = params_.template cast<Other>();
    return out;
  }

  const ConvNetConfig& config() const { return config_; }
  const nn::TensorTable& table() const { return table_; }
  const std::array<Conv, kConvCount>& convs() const { return convs_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  AdapterParams<Scalar> make_adapter(const AdapterConfig& ac, Rng* rng = nullptr) const {
    ac.validate();
    AdapterParams<Scalar> ad;
    ad.config = ac;
    for (const Conv& c : convs_) {
      const auto& s = table_[c.weight];
      ad.table.add(c.name + ".down", ac.rank, s.cols);
      ad.table.add(c.name + ".up", s.rows, ac.rank);
    }
    ad.values = Vec::Zero(ad.table.total());
    if (rng) {
      for (int l = 0; l < kConvCount; ++l) {
        const auto& d = ad.table[2 * l];
        nn::fill_normal<Scalar>(ad.values.segment(d.offset, d.size()), *rng, 1.0 / std::sqrt(static_cast<double>(d.cols)));
      }
    }
    return ad;
  }

  /// Throws ConfigError unless `ad` has one factor pair per convolution with
  /// matching shapes.
  void check_adapter(const AdapterParams<Scalar>& ad) const {
    if (ad.table.specs().size() != 2 * static_cast<size_t>(kConvCount) || ad.values.size() != ad.table.total()) {
      throw ConfigError("adapter does not match the network layout");
    }
    for (int l = 0; l < kConvCount; ++l) {
      const auto& s = table_[convs_[l].weight];
      const auto& d = ad.table[2 * l];
      const auto& u = ad.table[2 * l + 1];
      if (d.cols != s.cols || u.rows != s.rows || d.rows != ad.config.rank || u.cols != ad.config.rank) {
        throw ConfigError("adapter factor shapes do not match layer " + convs_[l].name);
      }
    }
  }

  Prepared prepare(const AdapterParams<Scalar>* ad = nullptr) const {
    if (ad) check_adapter(*ad);
    Prepared w;
    for (int l = 0; l < kConvCount; ++l) {
      w[l] = table_.map(params_, convs_[l].weight);
      if (ad) {
        w[l] += ad->scale() * (ad->table.map(ad->values, 2 * l + 1) * ad->table.map(ad->values, 2 * l));
      }
    }
    return w;
  }

  Mat forward(const Prepared& w, const Input& in, Cache* cache = nullptr) const {
    const int r = config_.resolution;
    if (in.spatial.rows() != config_.spatial_in() || in.spatial.cols() != config_.pixels() ||
        in.constant.size() != config_.const_in()) {
      throw InputError("velocity network input has the wrong shape");
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.in = in;
    c.z1 = conv_forward(w, kE1, in.spatial, &in.constant);
    c.a1 = nn::silu(c.z1);
    c.z2 = conv_forward(w, kE2, c.a1);
    c.a2 = nn::silu(c.z2);
    c.z3 = conv_forward(w, kE3, c.a2);
    c.a3 = nn::silu(c.z3);
    c.g = c.a3.rowwise().mean();
    const Vec ctx = table_.map(params_, ctx_weight_) * c.g + table_.map(params_, ctx_bias_);
    c.zm = conv_forward(w, kMid, c.a3);
    c.zm.colwise() += ctx;
    c.am = nn::silu(c.zm);
    c.u1.resize(4 * config_.width, static_cast<Eigen::Index>(r / 2) * (r / 2));
    c.u1 << nn::upsample2(c.am, r / 4, r / 4), c.a2;
    c.z4 = conv_forward(w, kUp1, c.u1);
    c.a4 = nn::silu(c.z4);
    c.u2.resize(3 * config_.width, config_.pixels());
    c.u2 << nn::upsample2(c.a4, r / 2, r / 2), c.a1;
    c.z5 = conv_forward(w, kUp2, c.u2);
    c.a5 = nn::silu(c.z5);
    return conv_forward(w, kOut, c.a5);
  }

  /// Accumulates d(loss)/d(effective parameters) into `grad` (param_count
  /// entries; convolution slots hold gradients of the effective weights).
  void backward(const Prepared& w, const Cache& c, const Mat& dout, Vec& grad) const {
    const int r = config_.resolution;
    const int wd = config_.width;
    Mat da5 = Mat::Zero(wd, config_.pixels());
    conv_backward(w, kOut, c.a5, dout, grad, &da5);

    const Mat dz5 = nn::silu_backward(c.z5, da5);
    Mat du2 = Mat::Zero(3 * wd, config_.pixels());
    conv_backward(w, kUp2, c.u2, dz5, grad, &du2);
    Mat da4 = nn::upsample2_backward<Scalar>(du2.topRows(2 * wd), r / 2, r / 2);
    Mat da1 = du2.bottomRows(wd);

    const Mat dz4 = nn::silu_backward(c.z4, da4);
    Mat du1 = Mat::Zero(4 * wd, c.u1.cols());
    conv_backward(w, kUp1, c.u1, dz4, grad, &du1);
    const Mat dam = nn::upsample2_backward<Scalar>(du1.topRows(2 * wd), r / 4, r / 4);
    Mat da2 = du1.bottomRows(2 * wd);

    const Mat dzm = nn::silu_backward(c.zm, dam);
    Mat da3 = Mat::Zero(2 * wd, c.a3.cols());
    conv_backward(w, kMid, c.a3, dzm, grad, &da3);
    const Vec dctx = dzm.rowwise().sum();
    table_.map(grad, ctx_weight_) += dctx * c.g.transpose();
    table_.map(grad, ctx_bias_) += dctx;
    const Vec dg = table_.map(params_, ctx_weight_).transpose() * dctx;
    da3.colwise() += dg / static_cast<Scalar>(c.a3.cols());

    const Mat dz3 = nn::silu_backward(c.z3, da3);
    conv_backward(w, kE3, c.a2, dz3, grad, &da2);
    const Mat dz2 = nn::silu_backward(c.z2, da2);
    conv_backward(w, kE2, c.a1, dz2, grad, &da1);
    const Mat dz1 = nn::silu_backward(c.z1, da1);
    conv_backward(w, kE1, c.in.spatial, dz1, grad, nullptr, &c.in.constant);
  }

  /// Chain rule from effective-weight gradients to adapter factors:
  /// d up = s dW down^T, d down = s up^T dW.
  void adapter_gradient(const AdapterParams<Scalar>& ad, const Vec& grad, Vec& ad_grad) const {
    for (int l = 0; l < kConvCount; ++l) {
      const auto dw = table_.map(grad, convs_[l].weight);
      const auto down = ad.table.map(ad.values, 2 * l);
      const auto up = ad.table.map(ad.values, 2 * l + 1);
      ad.table.map(ad_grad, 2 * l) += ad.scale() * (up.transpose() * dw);
      ad.table.map(ad_grad, 2 * l + 1) += ad.scale() * (dw * down.transpose());
    }
  }

 private:
  void add_conv(Layer l, std::string name, int cin, int n_const, int cout, int res, int stride) {
    Conv c;
    c.name = name;
    c.cin = cin;
    c.n_const = n_const;
    c.cout = cout;
    c.shape = {res, res, stride};
    // Weight columns: tap * cin + channel for spatial inputs, then
    // 9 * cin + tap * n_const + channel for constant inputs.
    c.weight = table_.add(name + ".weight", cout, 9 * (cin + n_const));
    c.bias = table_.add(name + ".bias", cout, 1, {static_cast<std::uint32_t>(cout)});
    convs_[l] = std::move(c);
  }

  Mat conv_forward(const Prepared& w, Layer l, const Mat& in, const Vec* constant = nullptr) const {
    const Conv& c = convs_[l];
    const Eigen::Index ns = 9 * c.cin;
    Mat z = w[l].leftCols(ns) * nn::im2col(in, c.shape);
    if (c.n_const > 0) {
      Mat a(c.cout, 9);
      for (int tap = 0; tap < 9; ++tap) a.col(tap) = w[l].middleCols(ns + tap * c.n_const, c.n_const) * (*constant);
      z.noalias() += a * indicator_;
    }
    z.colwise() += table_.map(params_, c.bias).col(0);
    return z;
  }

  void conv_backward(const Prepared& w, Layer l, const Mat& in, const Mat& dz, Vec& grad, Mat* din,
                     const Vec* constant = nullptr) const {
    const Conv& c = convs_[l];
    const Eigen::Index ns = 9 * c.cin;
    const Mat cols = nn::im2col(in, c.shape);
    auto dw = table_.map(grad, c.weight);
    dw.leftCols(ns).noalias() += dz * cols.transpose();
    if (c.n_const > 0) {
      const Mat da = dz * indicator_.transpose();
      for (int tap = 0; tap < 9; ++tap)
        dw.middleCols(ns + tap * c.n_const, c.n_const).noalias() += da.col(tap) * constant->transpose();
    }
    table_.map(grad, c.bias) += dz.rowwise().sum();
    if (din) {
      const Mat dcols = w[l].leftCols(ns).transpose() * dz;
      nn::col2im(dcols, c.shape, *din);
    }
  }

  ConvNetConfig config_;
  nn::TensorTable table_;
  std::array<Conv, kConvCount> convs_;
  Eigen::Index ctx_weight_ = 0;
  Eigen::Index ctx_bias_ = 0;
  Vec params_;
  Mat indicator_;
};

/// Network plus an optional adapter; base parameters are only read.
template <typename Scalar>
struct NetView {
  const ConvVelocityNet<Scalar>* net = nullptr;
  const AdapterParams<Scalar>* adapter = nullptr;

  NetView(const ConvVelocityNet<Scalar>& n) : net(&n) {}  // NOLINT: implicit by design
  NetView(const ConvVelocityNet<Scalar>& n, const AdapterParams<Scalar>* a) : net(&n), adapter(a) {}
};

template <typename Scalar>
NetView<Scalar> apply_adapter(const ConvVelocityNet<Scalar>& net, const AdapterParams<Scalar>& adapter) {
  net.check_adapter(adapter);
  return NetView<Scalar>(net, &adapter);
}

struct MlpConfig {
  int dim = 2;
  int hidden = 128;
  int depth = 3;  // hidden layers; 0 gives a single linear map
  int time_frequencies = 16;

  void validate() const {
    if (dim < 1 || hidden < 1 || depth < 0 || time_frequencies < 1) throw ConfigError("invalid MLP configuration");
  }
};

/// Velocity field for vector data: [x; embed(t)] -> SiLU MLP -> velocity.
template <typename Scalar>
class MlpVelocityNet {
 public:
  using Mat = MatX<Scalar>;
  using Vec = VecX<Scalar>;

  struct Cache {
    std::vector<Mat> inputs;  // input of every linear layer
    std::vector<Mat> pre;     // pre-activation of every hidden layer
  };

  explicit MlpVelocityNet(const MlpConfig& config) : config_(config) {
    config_.validate();
    int in = config_.dim + 2 * config_.time_frequencies;
    for (int l = 0; l <= config_.depth; ++l) {
      const int out = l == config_.depth ? config_.dim : config_.hidden;
      layers_.push_back({table_.add("fc" + std::to_string(l) + ".weight", out, in),
                         table_.add("fc" + std::to_string(l) + ".bias", out, 1, {static_cast<std::uint32_t>(out)})});
      in = out;
    }
    params_ = Vec::Zero(table_.total());
  }

  MlpVelocityNet(const MlpConfig& config, Rng& rng) : MlpVelocityNet(config) {
    for (size_t l = 0; l < layers_.size(); ++l) {
      const auto& s = table_[layers_[l].first];
      const double gain = l + 1 == layers_.size() ? 1.0 : 2.0;
      nn::fill_normal<Scalar>(params_.segment(s.offset, s.size()), rng, std::sqrt(gain / static_cast<double>(s.cols)));
    }
  }

  const MlpConfig& config() const { return config_; }
  const nn::TensorTable& table() const { return table_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  /// x: dim x B, t: B.
  Mat forward(const Mat& x, const Vec& t, Cache* cache = nullptr) const {
    if (x.rows() != config_.dim || x.cols() != t.size()) throw InputError("MLP input has the wrong shape");
    Mat h(config_.dim + 2 * config_.time_frequencies, x.cols());
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
      h.col(b) << x.col(b), nn::time_embedding<Scalar>(t[b], config_.time_frequencies);
    }
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    for (size_t l = 0; l < layers_.size(); ++l) {
      if (cache) cache->inputs.push_back(h);
      Mat z = table_.map(params_, layers_[l].first) * h;
      z.colwise() += table_.map(params_, layers_[l].second).col(0);
      if (l + 1 == layers_.size()) return z;
      if (cache) cache->pre.push_back(z);
      h = nn::silu(z);
    }
    return h;
  }

  void backward(const Cache& c, const Mat& dout, Vec& grad) const {
    Mat d = dout;
    for (size_t i = layers_.size(); i-- > 0;) {
      table_.map(grad, layers_[i].first).noalias() += d * c.inputs[i].transpose();
      table_.map(grad, layers_[i].second) += d.rowwise().sum();
      if (i == 0) break;
      const Mat dh = table_.map(params_, layers_[i].first).transpose() * d;
      d = nn::silu_backward(c.pre[i - 1], dh);
    }
  }

 private:
  MlpConfig config_;
  nn::TensorTable table_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> layers_;
  Vec params_;
};

}  // namespace uvr
