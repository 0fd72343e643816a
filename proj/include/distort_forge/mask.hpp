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
#include <cstdint>
#include <span>
#include <vector>

#include "distort_forge/error.hpp"

namespace distort_forge {

/// Axis-aligned pixel rectangle [x, x+width) x [y, y+height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  int right() const noexcept { return x + width; }
  int bottom() const noexcept { return y + height; }
  bool contains(int px, int py) const noexcept {
    return px >= x && px < right() && py >= y && py < bottom();
  }

  Rect expanded(int r) const noexcept { return {x - r, y - r, width + 2 * r, height + 2 * r}; }

  Rect intersect(const Rect& o) const noexcept {
    const int x0 = std::max(x, o.x), y0 = std::max(y, o.y);
    const int x1 = std::min(right(), o.right()), y1 = std::min(bottom(), o.bottom());
    if (x1 <= x0 || y1 <= y0) return {};
    return {x0, y0, x1 - x0, y1 - y0};
  }

  bool operator==(const Rect&) const = default;
};

/// Binary mask over a width x height raster. Only the tight bounding box of
/// the set bits is stored, so object masks of large images stay small.
class BitMask {
 public:
  BitMask() = default;

  /// All-clear mask.
  BitMask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative mask size");
  }

  /// Mask from bits covering `window` (row-major, window.width * window.height
  /// bytes, nonzero = set). `window` must lie inside the raster.
  BitMask(int width, int height, Rect window, std::span<const std::uint8_t> bits)
      : BitMask(width, height) {
    if (window.empty()) return;
    if (window.x < 0 || window.y < 0 || window.right() > width || window.bottom() > height ||
        bits.size() != static_cast<std::size_t>(window.width) * window.height) {
      throw DimensionError("mask window outside raster");
    }
    int x0 = window.right(), y0 = window.bottom(), x1 = window.x - 1, y1 = window.y - 1;
    for (int y = 0; y < window.height; ++y) {
      for (int x = 0; x < window.width; ++x) {
        if (bits[static_cast<std::size_t>(y) * window.width + x]) {
          x0 = std::min(x0, window.x + x);
          x1 = std::max(x1, window.x + x);
          y0 = std::min(y0, window.y + y);
          y1 = std::max(y1, window.y + y);
        }
      }
    }
    if (x1 < x0) return;
    roi_ = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    bits_.resize(static_cast<std::size_t>(roi_.width) * roi_.height);
    for (int y = 0; y < roi_.height; ++y) {
      for (int x = 0; x < roi_.width; ++x) {
        const auto src = static_cast<std::size_t>(y + roi_.y - window.y) * window.width + (x + roi_.x - window.x);
        bits_[static_cast<std::size_t>(y) * roi_.width + x] = bits[src] ? 1 : 0;
      }
    }
  }

  /// Mask from a full-raster row-major buffer.
  static BitMask from_dense(int width, int height, std::span<const std::uint8_t> bits) {
    return BitMask(width, height, Rect{0, 0, width, height}, bits);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  /// Tight bounding box of the set bits; empty when no bit is set.
  const Rect& bounds() const noexcept { return roi_; }

  bool empty() const noexcept { return roi_.empty(); }

  bool test(int x, int y) const noexcept {
    if (!roi_.contains(x, y)) return false;
    return bits_[static_cast<std::size_t>(y - roi_.y) * roi_.width + (x - roi_.x)] != 0;
  }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  /// Calls f(x, y) for every set bit in row-major order.
  template <class F>
  void for_each(F&& f) const {
    for (int y = 0; y < roi_.height; ++y) {
      for (int x = 0; x < roi_.width; ++x) {
        if (bits_[static_cast<std::size_t>(y) * roi_.width + x]) f(roi_.x + x, roi_.y + y);
      }
    }
  }

  std::vector<std::uint8_t> dense() const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_, 0);
    for_each([&](int x, int y) { out[static_cast<std::size_t>(y) * width_ + x] = 1; });
    return out;
  }

  bool operator==(const BitMask& o) const {
    return width_ == o.width_ && height_ == o.height_ && roi_ == o.roi_ && bits_ == o.bits_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  Rect roi_;
  std::vector<std::uint8_t> bits_;
};

/// OR of two masks over the same raster.
inline BitMask mask_union(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw DimensionError("mask_union: size mismatch");
  if (a.empty()) return b;
  if (b.empty()) return a;
  const Rect& ra = a.bounds();
  const Rect& rb = b.bounds();
  const int x0 = std::min(ra.x, rb.x), y0 = std::min(ra.y, rb.y);
  const Rect w{x0, y0, std::max(ra.right(), rb.right()) - x0, std::max(ra.bottom(), rb.bottom()) - y0};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w.width) * w.height, 0);
  auto mark = [&](int x, int y) { bits[static_cast<std::size_t>(y - w.y) * w.width + (x - w.x)] = 1; };
  a.for_each(mark);
  b.for_each(mark);
  return BitMask(a.width(), a.height(), w, bits);
}

/// Square (Chebyshev) dilation by `radius` pixels, clipped to the raster.
inline BitMask dilate(const BitMask& m, int radius) {
  if (m.empty() || radius <= 0) return m;
  const Rect raster{0, 0, m.width(), m.height()};
  const Rect w = m.bounds().expanded(radius).intersect(raster);
  const auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * w.width + x; };

  // Separable max as windowed prefix sums: rows first, then columns.
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(w.width) * w.height, 0);
  std::vector<int> prefix(static_cast<std::size_t>(std::max(w.width, w.height)) + 1);
  for (int y = 0; y < w.height; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w.width; ++x) prefix[x + 1] = prefix[x] + (m.test(w.x + x, w.y + y) ? 1 : 0);
    for (int x = 0; x < w.width; ++x) {
      const int lo = std::max(0, x - radius), hi = std::min(w.width, x + radius + 1);
      rows[idx(x, y)] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
    }
  }
  std::vector<std::uint8_t> out(rows.size(), 0);
  for (int x = 0; x < w.width; ++x) {
    prefix[0] = 0;
    for (int y = 0; y < w.height; ++y) prefix[y + 1] = prefix[y] + rows[idx(x, y)];
    for (int y = 0; y < w.height; ++y) {
      const int lo = std::max(0, y - radius), hi = std::min(w.height, y + radius + 1);
      out[idx(x, y)] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
    }
  }
  return BitMask(m.width(), m.height(), w, out);
}

}  // namespace distort_forge
