// Copyright 2026 The distort-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distort_forge/error.hpp"

namespace distort_forge {

/// Smallest raster side the pipeline accepts (one compression block).
inline constexpr int kMinImageSide = 8;

/// Interleaved 8-bit RGB raster, the on-disk pixel format.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size = width * height * 3

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const Image8&) const = default;
};

/// Single-channel real raster. Backs scalar masks (values in [0,1]),
/// luma fields, farness values and compositing weights.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0)
      : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw DimensionError("negative plane size");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Edge-replicated read.
  double clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_size(const Plane& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

  bool operator==(const Plane&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// A Plane whose values are finite and within [0,1]. Rain sub-masks and fog
/// masks use this alias; `check_scalar_mask` enforces the range.
using ScalarMask = Plane;

inline void check_scalar_mask(const ScalarMask& m, const char* what) {
  for (double v : m.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ParameterError(std::string(what) + ": mask value outside [0,1]");
    }
  }
}

/// Normalized RGB raster: H x W x 3 reals in [0,1], interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0) : width_(width), height_(height) {
    if (width < kMinImageSide || height < kMinImageSide) {
      throw DimensionError("image " + std::to_string(width) + "x" + std::to_string(height) +
                           " is below the " + std::to_string(kMinImageSide) + "x" +
                           std::to_string(kMinImageSide) + " minimum");
    }
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
  double at(int x, int y, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

  double clamped(int x, int y, int c) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_size(const Image& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  bool same_size(const Plane& p) const noexcept { return width_ == p.width() && height_ == p.height(); }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

}  // namespace distort_forge
