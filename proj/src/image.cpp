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
#include "uvr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace uvr {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) throw InputError("negative image dimension");
  data_ = Eigen::ArrayXf::Constant(static_cast<Eigen::Index>(width) * height * channels, fill);
}

void bilinear_sample(const Image& img, double x, double y, std::span<float> out) {
  const int w = img.width();
  const int h = img.height();
  const double px = std::clamp(x - 0.5, 0.0, static_cast<double>(w - 1));
  const double py = std::clamp(y - 0.5, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(px));
  const int y0 = static_cast<int>(std::floor(py));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = px - x0;
  const double fy = py - y0;
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
    const double bot = (1.0 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bot);
  }
}

bool bilinear_sample_masked(const Image& img, const Mask& valid, double x, double y, std::span<float> out) {
  const int w = img.width();
  const int h = img.height();
  const double px = std::clamp(x - 0.5, 0.0, static_cast<double>(w - 1));
  const double py = std::clamp(y - 0.5, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(px));
  const int y0 = static_cast<int>(std::floor(py));
  const int xs[4] = {x0, std::min(x0 + 1, w - 1), x0, std::min(x0 + 1, w - 1)};
  const int ys[4] = {y0, y0, std::min(y0 + 1, h - 1), std::min(y0 + 1, h - 1)};
  const double fx = px - x0;
  const double fy = py - y0;
  double wt[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!valid(ys[k], xs[k])) wt[k] = 0.0;
    total += wt[k];
  }
  if (total <= 0.0) return false;
  for (int c = 0; c < img.channels(); ++c) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += wt[k] * img.at(c, ys[k], xs[k]);
    out[c] = static_cast<float>(acc / total);
  }
  return true;
}

namespace {

struct Tap {
  int index;
  double weight;
};

// Overlap of [lo, lo+step) with each unit cell in [0, n).
std::vector<std::vector<Tap>> box_taps(double origin, double extent, int n_in, int n_out) {
  std::vector<std::vector<Tap>> taps(n_out);
  const double step = extent / n_out;
  for (int o = 0; o < n_out; ++o) {
    const double lo = origin + o * step;
    const double hi = lo + step;
    const int first = std::max(0, static_cast<int>(std::floor(lo)));
    const int last = std::min(n_in - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int i = first; i <= last; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) taps[o].push_back({i, overlap / step});
    }
  }
  return taps;
}

}  // namespace

Image resample_area(const Image& img, double x0, double y0, double w, double h, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0 || w <= 0.0 || h <= 0.0) throw InputError("resample_area: empty extent");
  const auto tx = box_taps(x0, w, img.width(), out_w);
  const auto ty = box_taps(y0, h, img.height(), out_h);
  Image out(out_w, out_h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (const Tap& a : ty[oy])
          for (const Tap& b : tx[ox]) acc += a.weight * b.weight * img.at(c, a.index, b.index);
        out.at(c, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image mask_to_image(const Mask& m) {
  Image out(static_cast<int>(m.cols()), static_cast<int>(m.rows()), 1);
  out.plane(0) = m.cast<float>();
  return out;
}

Mask image_to_mask(const Image& img) {
  return (img.plane(0) > 0.5f).cast<std::uint8_t>();
}

Mask dilate(const Mask& m, int radius) {
  Mask out = Mask::Zero(m.rows(), m.cols());
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - radius);
      const Eigen::Index y1 = std::min<Eigen::Index>(m.rows() - 1, y + radius);
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - radius);
      const Eigen::Index x1 = std::min<Eigen::Index>(m.cols() - 1, x + radius);
      out.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).setOnes();
    }
  }
  return out;
}

namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_raw(const std::filesystem::path& path, int w, int h, png_uint_32 format,
               const std::vector<std::uint8_t>& bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = format;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.message);
  }
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  const int c = img.channels();
  if (c != 1 && c != 3 && c != 4) throw InputError("write_png: unsupported channel count");
  std::vector<std::uint8_t> bytes(static_cast<size_t>(img.width()) * img.height() * c);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int k = 0; k < c; ++k)
        bytes[(static_cast<size_t>(y) * img.width() + x) * c + k] = quantize(img.at(k, y, x));
  const png_uint_32 format = c == 1 ? PNG_FORMAT_GRAY : (c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
  write_raw(path, img.width(), img.height(), format, bytes);
}

void write_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(static_cast<size_t>(mask.size()));
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      bytes[static_cast<size_t>(y * mask.cols() + x)] = mask(y, x) ? 255 : 0;
  write_raw(path, static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), PNG_FORMAT_GRAY, bytes);
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw IoError("cannot read " + path.string() + ": " + png.message);
  }
  const int c = (png.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : ((png.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1);
  png.format = c == 1 ? PNG_FORMAT_GRAY : (c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    throw IoError("cannot decode " + path.string() + ": " + png.message);
  }
  Image img(static_cast<int>(png.width), static_cast<int>(png.height), c);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int k = 0; k < c; ++k)
        img.at(k, y, x) = bytes[(static_cast<size_t>(y) * img.width() + x) * c + k] / 255.0f;
  return img;
}

Mask read_mask_png(const std::filesystem::path& path) {
  return image_to_mask(read_png(path));
}

}  // namespace uvr
