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
#include <span>

#include "uvr/common.hpp"

namespace uvr {

/// Planar float image, channel-major (C x H x W) in one contiguous buffer so a
/// whole image can be viewed as a flat vector without copying.
class Image {
 public:
  using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.size() == 0; }
  bool same_shape(const Image& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  float& at(int c, int y, int x) { return data_[(static_cast<Eigen::Index>(c) * height_ + y) * width_ + x]; }
  float at(int c, int y, int x) const { return data_[(static_cast<Eigen::Index>(c) * height_ + y) * width_ + x]; }

  Eigen::Map<Plane> plane(int c) {
    return {data_.data() + static_cast<Eigen::Index>(c) * width_ * height_, height_, width_};
  }
  Eigen::Map<const Plane> plane(int c) const {
    return {data_.data() + static_cast<Eigen::Index>(c) * width_ * height_, height_, width_};
  }

  Eigen::ArrayXf& data() noexcept { return data_; }
  const Eigen::ArrayXf& data() const noexcept { return data_; }

  bool operator==(const Image& o) const {
    return same_shape(o) && (data_ == o.data_).all();
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  Eigen::ArrayXf data_;
};

/// Bilinear lookup at continuous pixel coordinates (pixel (x, y) covers
/// [x, x+1) x [y, y+1)). Coordinates are clamped half a pixel inside the
/// border so the four taps always exist.
void bilinear_sample(const Image& img, double x, double y, std::span<float> out);
/// Bilinear lookup over the taps where `valid` is set, weights renormalised.
/// Returns false, leaving `out` untouched, when no tap is valid.
bool bilinear_sample_masked(const Image& img, const Mask& valid, double x, double y, std::span<float> out);

/// Box-filter resample of the rectangle [x0, x0+w) x [y0, y0+h) to an
/// out_w x out_h image. Source area outside the image reads as zero.
Image resample_area(const Image& img, double x0, double y0, double w, double h, int out_w, int out_h);

inline Image resize_area(const Image& img, int out_w, int out_h) {
  return resample_area(img, 0.0, 0.0, img.width(), img.height(), out_w, out_h);
}

/// Mask as a single-channel image with values {0, 1}.
Image mask_to_image(const Mask& m);
/// Thresholds channel 0 at 0.5.
Mask image_to_mask(const Image& img);

/// Sets every pixel whose Chebyshev distance to a set pixel is <= radius.
Mask dilate(const Mask& m, int radius);

void write_png(const std::filesystem::path& path, const Image& img);
void write_png(const std::filesystem::path& path, const Mask& mask);
Image read_png(const std::filesystem::path& path);
Mask read_mask_png(const std::filesystem::path& path);

}  // namespace uvr
