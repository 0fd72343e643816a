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

// Fixtures and independent reference implementations shared by the tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "distort_forge/coco.hpp"
#include "distort_forge/image.hpp"
#include "distort_forge/mask.hpp"
#include "distort_forge/random.hpp"

namespace df_test {

using namespace distort_forge;

inline Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

inline Plane random_plane(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  Plane p(w, h);
  for (double& v : p.values()) v = rng.uniform(lo, hi);
  return p;
}

inline BitMask rect_mask(int w, int h, Rect r) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(r.width) * r.height, 1);
  return BitMask(w, h, r, bits);
}

inline BitMask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry) {
  std::vector<std::uint8_t> dense(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) dense[static_cast<std::size_t>(y) * w + x] = 1;
    }
  return BitMask::from_dense(w, h, dense);
}

inline BitMask random_mask(Rng& rng, int w, int h, double density) {
  std::vector<std::uint8_t> dense(static_cast<std::size_t>(w) * h, 0);
  for (auto& b : dense) b = rng.uniform() < density ? 1 : 0;
  return BitMask::from_dense(w, h, dense);
}

/// Column-major runs, background first.
inline std::vector<std::int64_t> encode_rle(const BitMask& m) {
  std::vector<std::int64_t> counts;
  std::uint8_t current = 0;
  std::int64_t run = 0;
  for (int x = 0; x < m.width(); ++x)
    for (int y = 0; y < m.height(); ++y) {
      const std::uint8_t b = m.test(x, y) ? 1 : 0;
      if (b != current) {
        counts.push_back(run);
        run = 0;
        current = b;
      }
      ++run;
    }
  counts.push_back(run);
  return counts;
}

/// COCO compressed-string form of `counts`.
inline std::string encode_rle_string(const std::vector<std::int64_t>& counts) {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = counts[i];
    if (i > 2) x -= counts[i - 2];
    bool more = true;
    while (more) {
      std::int64_t c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

inline coco::ObjectAnnotation make_object(std::int64_t id, const std::string& category, const std::string& super,
                                          BitMask mask, bool crowd = false) {
  coco::ObjectAnnotation o;
  o.object_id = id;
  o.category = category;
  o.supercategory = super;
  const Rect b = mask.bounds();
  o.bbox = {static_cast<double>(b.x), static_cast<double>(b.y), static_cast<double>(b.width),
            static_cast<double>(b.height)};
  o.mask = std::move(mask);
  o.crowd = crowd;
  return o;
}

/// Direct evaluation of the orthonormal 2-D DCT-II, one coefficient at a time.
inline std::vector<double> dense_dct(const std::vector<double>& block, int n = 8) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  const auto alpha = [n](int k) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); };
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      double s = 0.0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          s += block[static_cast<std::size_t>(y) * n + x] *
               std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * n)) *
               std::cos((2 * y + 1) * v * std::numbers::pi / (2.0 * n));
        }
      out[static_cast<std::size_t>(v) * n + u] = alpha(u) * alpha(v) * s;
    }
  return out;
}

/// Direct evaluation of the inverse of dense_dct.
inline std::vector<double> dense_idct(const std::vector<double>& coef, int n = 8) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  const auto alpha = [n](int k) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); };
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u) {
          s += alpha(u) * alpha(v) * coef[static_cast<std::size_t>(v) * n + u] *
               std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * n)) *
               std::cos((2 * y + 1) * v * std::numbers::pi / (2.0 * n));
        }
      out[static_cast<std::size_t>(y) * n + x] = s;
    }
  return out;
}

/// Naive correlation with edge replication; no clamping.
inline double naive_filter_at(const Image& img, const std::vector<double>& taps, int kw, int kh, int x, int y, int c) {
  double s = 0.0;
  for (int j = 0; j < kh; ++j)
    for (int i = 0; i < kw; ++i) {
      const int sx = std::clamp(x + i - kw / 2, 0, img.width() - 1);
      const int sy = std::clamp(y + j - kh / 2, 0, img.height() - 1);
      s += taps[static_cast<std::size_t>(j) * kw + i] * img.at(sx, sy, c);
    }
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("distort_forge_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace df_test
