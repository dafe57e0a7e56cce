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

// Dense building blocks with hand-written gradients. Feature maps are stored
// as C x (H*W) column-major matrices: one column per pixel, so the channels of
// a pixel are contiguous and im2col copies whole columns.

#include <cmath>
#include <string>
#include <vector>

#include "uvr/common.hpp"

namespace uvr::nn {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Derived>
MatX<typename Derived::Scalar> silu(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return z.unaryExpr([](S v) { return v * sigmoid(v); });
}

/// d silu / dz evaluated at z, multiplied into `upstream`.
template <typename DerivedZ, typename DerivedG>
MatX<typename DerivedZ::Scalar> silu_backward(const Eigen::MatrixBase<DerivedZ>& z,
                                              const Eigen::MatrixBase<DerivedG>& upstream) {
  using S = typename DerivedZ::Scalar;
  return z.binaryExpr(upstream, [](S v, S g) {
    const S s = sigmoid(v);
    return g * s * (S(1) + v * (S(1) - s));
  });
}

/// 3x3 convolution geometry with zero padding 1.
struct ConvShape {
  int height = 0;
  int width = 0;
  int stride = 1;

  int out_height() const { return (height - 1) / stride + 1; }
  int out_width() const { return (width - 1) / stride + 1; }
  Eigen::Index in_size() const { return static_cast<Eigen::Index>(height) * width; }
  Eigen::Index out_size() const { return static_cast<Eigen::Index>(out_height()) * out_width(); }
};

// Row tap*C + c of the column matrix holds channel c at tap (ky, kx) = (tap/3, tap%3).
template <typename Scalar>
MatX<Scalar> im2col(const MatX<Scalar>& in, const ConvShape& g) {
  const Eigen::Index c = in.rows();
  MatX<Scalar> cols = MatX<Scalar>::Zero(9 * c, g.out_size());
  const int ow = g.out_width();
  for (int yo = 0; yo < g.out_height(); ++yo) {
    for (int xo = 0; xo < ow; ++xo) {
      const Eigen::Index p = static_cast<Eigen::Index>(yo) * ow + xo;
      for (int ky = 0; ky < 3; ++ky) {
        const int y = yo * g.stride + ky - 1;
        if (y < 0 || y >= g.height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int x = xo * g.stride + kx - 1;
          if (x < 0 || x >= g.width) continue;
          cols.col(p).segment((ky * 3 + kx) * c, c) = in.col(static_cast<Eigen::Index>(y) * g.width + x);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col, accumulated into `din`.
template <typename Scalar>
void col2im(const MatX<Scalar>& cols, const ConvShape& g, MatX<Scalar>& din) {
  const Eigen::Index c = din.rows();
  const int ow = g.out_width();
  for (int yo = 0; yo < g.out_height(); ++yo) {
    for (int xo = 0; xo < ow; ++xo) {
      const Eigen::Index p = static_cast<Eigen::Index>(yo) * ow + xo;
      for (int ky = 0; ky < 3; ++ky) {
        const int y = yo * g.stride + ky - 1;
        if (y < 0 || y >= g.height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int x = xo * g.stride + kx - 1;
          if (x < 0 || x >= g.width) continue;
          din.col(static_cast<Eigen::Index>(y) * g.width + x) += cols.col(p).segment((ky * 3 + kx) * c, c);
        }
      }
    }
  }
}

/// 9 x P indicator of which taps fall inside the image; a spatially constant
/// input channel convolves to (weights summed over in-bounds taps) x value.
template <typename Scalar>
MatX<Scalar> tap_indicator(const ConvShape& g) {
  MatX<Scalar> ind = MatX<Scalar>::Zero(9, g.out_size());
  const int ow = g.out_width();
  for (int yo = 0; yo < g.out_height(); ++yo)
    for (int xo = 0; xo < ow; ++xo)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const int y = yo * g.stride + ky - 1;
          const int x = xo * g.stride + kx - 1;
          if (y >= 0 && y < g.height && x >= 0 && x < g.width) ind(ky * 3 + kx, static_cast<Eigen::Index>(yo) * ow + xo) = 1;
        }
  return ind;
}

/// Nearest-neighbour 2x upsampling of a C x (h*w) map.
template <typename Scalar>
MatX<Scalar> upsample2(const MatX<Scalar>& in, int h, int w) {
  MatX<Scalar> out(in.rows(), static_cast<Eigen::Index>(4) * h * w);
  for (int y = 0; y < 2 * h; ++y)
    for (int x = 0; x < 2 * w; ++x)
      out.col(static_cast<Eigen::Index>(y) * 2 * w + x) = in.col(static_cast<Eigen::Index>(y / 2) * w + x / 2);
  return out;
}

template <typename Scalar>
MatX<Scalar> upsample2_backward(const MatX<Scalar>& dout, int h, int w) {
  MatX<Scalar> din = MatX<Scalar>::Zero(dout.rows(), static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < 2 * h; ++y)
    for (int x = 0; x < 2 * w; ++x)
      din.col(static_cast<Eigen::Index>(y / 2) * w + x / 2) += dout.col(static_cast<Eigen::Index>(y) * 2 * w + x);
  return din;
}

/// Named slice of a flat parameter vector, viewed as a column-major
/// rows x cols matrix. `dims` is the logical shape written to checkpoints.
struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;
  std::vector<std::uint32_t> dims;

  Eigen::Index size() const { return rows * cols; }
};

class TensorTable {
 public:
  Eigen::Index add(std::string name, Eigen::Index rows, Eigen::Index cols, std::vector<std::uint32_t> dims = {}) {
    if (dims.empty()) dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
    specs_.push_back({std::move(name), rows, cols, total_, std::move(dims)});
    total_ += rows * cols;
    return static_cast<Eigen::Index>(specs_.size()) - 1;
  }
  const TensorSpec& operator[](Eigen::Index i) const { return specs_[static_cast<size_t>(i)]; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  Eigen::Index total() const { return total_; }

  template <typename Vec>
  auto map(Vec& flat, Eigen::Index i) const {
    const TensorSpec& s = specs_[static_cast<size_t>(i)];
    using S = typename std::remove_const_t<Vec>::Scalar;
    using M = std::conditional_t<std::is_const_v<Vec>, const MatX<S>, MatX<S>>;
    return Eigen::Map<M>(flat.data() + s.offset, s.rows, s.cols);
  }

 private:
  std::vector<TensorSpec> specs_;
  Eigen::Index total_ = 0;
};

/// Sinusoidal embedding [sin(w_k t), cos(w_k t)], w_k = 100^(k/(F-1)).
template <typename Scalar>
VecX<Scalar> time_embedding(Scalar t, int frequencies) {
  VecX<Scalar> e(2 * frequencies);
  for (int k = 0; k < frequencies; ++k) {
    const Scalar w = frequencies > 1 ? std::pow(Scalar(100), Scalar(k) / Scalar(frequencies - 1)) : Scalar(1);
    e[k] = std::sin(w * t);
    e[frequencies + k] = std::cos(w * t);
  }
  return e;
}

template <typename Scalar>
void fill_normal(Eigen::Ref<VecX<Scalar>> v, Rng& rng, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<Scalar>(n(rng));
}

}  // namespace uvr::nn
