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

// Global distortions (noise, contrast, compression, motion and defocus
// blur) and the masked three-interval tone mapping used for local
// backlight.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "distort_forge/coco.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/imgcore.hpp"
#include "distort_forge/random.hpp"

namespace distort_forge {

/// Distortion strength, 1 (mild) to 5 (severe).
class IntensityLevel {
 public:
  explicit IntensityLevel(int level) : level_(level) {
    if (level < 1 || level > 5) throw ParameterError("intensity level must be in 1..5, got " + std::to_string(level));
  }
  int value() const noexcept { return level_; }
  std::size_t index() const noexcept { return static_cast<std::size_t>(level_ - 1); }

 private:
  int level_;
};

inline constexpr std::array<double, 5> kNoiseStd = {0.02, 0.04, 0.06, 0.09, 0.13};
inline constexpr std::array<double, 5> kContrastFactor = {1.25, 1.5, 1.8, 2.2, 2.7};
inline constexpr std::array<int, 5> kCompressionQuality = {50, 35, 25, 15, 8};
inline constexpr std::array<int, 5> kMotionLength = {5, 9, 13, 19, 27};
inline constexpr std::array<double, 5> kDefocusStd = {1.0, 2.0, 3.5, 5.0, 7.0};

// ---------------------------------------------------------------------------
// Noise and contrast

inline Image gaussian_noise(const Image& img, IntensityLevel level, Rng& rng) {
  const double sigma = kNoiseStd[level.index()];
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return out;
}

enum class ContrastDirection { increase, decrease };

inline double contrast_factor(IntensityLevel level, ContrastDirection dir) {
  const double c = kContrastFactor[level.index()];
  return dir == ContrastDirection::increase ? c : 1.0 / c;
}

/// v -> 0.5 + c (v - 0.5), clamped.
inline Image stretch_contrast(const Image& img, double c) {
  Image out = img;
  for (double& v : out.data()) v = std::clamp(0.5 + c * (v - 0.5), 0.0, 1.0);
  return out;
}

inline Image adjust_contrast(const Image& img, IntensityLevel level, ContrastDirection dir) {
  return stretch_contrast(img, contrast_factor(level, dir));
}

// ---------------------------------------------------------------------------
// Compression artifacts (8x8 block DCT quantization)

using Block = std::array<double, 64>;  // row-major, [v * 8 + u] for coefficients

inline constexpr std::array<int, 64> kLuminanceQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  //
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,  //
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,  //
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

/// Luminance table scaled for `quality` (1..100) with the usual 5000/q and
/// 200 - 2q rules.
inline std::array<int, 64> quant_table(int quality) {
  if (quality < 1 || quality > 100) throw ParameterError("quality must be in 1..100");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> t{};
  for (int i = 0; i < 64; ++i) t[i] = std::clamp((kLuminanceQuant[i] * scale + 50) / 100, 1, 255);
  return t;
}

namespace detail {
inline const std::array<double, 64>& dct_matrix() {
  // m[u * 8 + x] = C(u) cos((2x + 1) u pi / 16)
  static const std::array<double, 64> m = [] {
    std::array<double, 64> r{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) r[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return r;
  }();
  return m;
}
}  // namespace detail

/// Orthonormal 2-D DCT-II, computed row-column.
inline Block dct8x8(const Block& f) {
  const auto& m = detail::dct_matrix();
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += m[u * 8 + x] * f[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += m[v * 8 + y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
  return out;
}

inline Block idct8x8(const Block& coef) {
  const auto& m = detail::dct_matrix();
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += m[u * 8 + x] * coef[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += m[v * 8 + y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
  return out;
}

/// Quantize-dequantize of AC coefficients. The DC term passes unchanged so
/// flat regions keep their exact color.
inline Block quantize_coefficients(const Block& coef, const std::array<int, 64>& table) {
  Block out = coef;
  for (int i = 1; i < 64; ++i) out[i] = std::round(coef[i] / table[i]) * table[i];
  return out;
}

/// One block through DCT, quantization and inverse DCT. Samples are level
/// shifted, on a 0..255 scale minus 128.
inline Block compress_block(const Block& samples, const std::array<int, 64>& table) {
  return idct8x8(quantize_coefficients(dct8x8(samples), table));
}

namespace detail {
// JFIF RGB -> YCbCr (offsets handled by the caller) and its exact inverse.
inline constexpr double kYcc[9] = {0.299,     0.587,     0.114,      //
                                   -0.168736, -0.331264, 0.5,        //
                                   0.5,       -0.418688, -0.081312};

inline const std::array<double, 9>& ycc_inverse() {
  static const std::array<double, 9> inv = [] {
    const double* a = kYcc;
    const double det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
                       a[2] * (a[3] * a[7] - a[4] * a[6]);
    return std::array<double, 9>{(a[4] * a[8] - a[5] * a[7]) / det, (a[2] * a[7] - a[1] * a[8]) / det,
                                 (a[1] * a[5] - a[2] * a[4]) / det, (a[5] * a[6] - a[3] * a[8]) / det,
                                 (a[0] * a[8] - a[2] * a[6]) / det, (a[2] * a[3] - a[0] * a[5]) / det,
                                 (a[3] * a[7] - a[4] * a[6]) / det, (a[1] * a[6] - a[0] * a[7]) / det,
                                 (a[0] * a[4] - a[1] * a[3]) / det};
  }();
  return inv;
}
}  // namespace detail

inline Image compression_artifact(const Image& img, IntensityLevel level) {
  const auto table = quant_table(kCompressionQuality[level.index()]);
  const int w = img.width(), h = img.height();
  const int pw = (w + 7) / 8 * 8, ph = (h + 7) / 8 * 8;
  // Planes in YCbCr on the 0..255 scale, centered at 0, padded by edge replication.
  std::array<std::vector<double>, 3> planes;
  for (auto& p : planes) p.assign(static_cast<std::size_t>(pw) * ph, 0.0);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1), sy = std::min(y, h - 1);
      const double r = img.at(sx, sy, 0) * 255.0, g = img.at(sx, sy, 1) * 255.0, b = img.at(sx, sy, 2) * 255.0;
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      planes[0][i] = detail::kYcc[0] * r + detail::kYcc[1] * g + detail::kYcc[2] * b - 128.0;
      planes[1][i] = detail::kYcc[3] * r + detail::kYcc[4] * g + detail::kYcc[5] * b;
      planes[2][i] = detail::kYcc[6] * r + detail::kYcc[7] * g + detail::kYcc[8] * b;
    }
  }
  for (auto& p : planes) {
    for (int by = 0; by < ph; by += 8) {
      for (int bx = 0; bx < pw; bx += 8) {
        Block blk{};
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) blk[y * 8 + x] = p[static_cast<std::size_t>(by + y) * pw + bx + x];
        blk = compress_block(blk, table);
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) p[static_cast<std::size_t>(by + y) * pw + bx + x] = blk[y * 8 + x];
      }
    }
  }
  const auto& inv = detail::ycc_inverse();
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      const double yy = planes[0][i] + 128.0, cb = planes[1][i], cr = planes[2][i];
      for (int c = 0; c < 3; ++c) {
        const double v = inv[c * 3 + 0] * yy + inv[c * 3 + 1] * cb + inv[c * 3 + 2] * cr;
        out.at(x, y, c) = std::clamp(v / 255.0, 0.0, 1.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global blurs

inline Image global_motion_blur(const Image& img, IntensityLevel level, double angle_deg) {
  const int length = std::min({kMotionLength[level.index()], img.width(), img.height()});
  return convolve(img, line_kernel(length, angle_deg));
}

inline double global_defocus_std(IntensityLevel level, int width, int height) {
  return std::min(kDefocusStd[level.index()] * resolution_scale(width, height), max_gaussian_std(width, height));
}

inline Image global_defocus_blur(const Image& img, IntensityLevel level) {
  return gaussian_blur(img, global_defocus_std(level, img.width(), img.height()));
}

// ---------------------------------------------------------------------------
// Local backlight

struct BacklightSpec {
  double b1 = 1.0 / 3.0;
  double b2 = 2.0 / 3.0;
  std::array<double, 3> gains{1.0, 1.0, 1.0};
  std::int64_t target_id = 0;
  BitMask target;
};

inline constexpr std::array<std::pair<double, double>, 3> kBacklightCuts = {{{0.25, 0.6}, {0.33, 0.66}, {0.3, 0.75}}};
inline constexpr double kBacklightGainMin = 0.5;
inline constexpr double kBacklightGainMax = 2.5;
inline constexpr double kBacklightVisibleGain = 1.6;

inline void check_backlight_spec(const BacklightSpec& s) {
  if (!(s.b1 > 0.0 && s.b1 < s.b2 && s.b2 < 1.0)) throw ParameterError("backlight cutpoints need 0 < b1 < b2 < 1");
  for (double g : s.gains) {
    if (!(g >= kBacklightGainMin && g <= kBacklightGainMax)) throw ParameterError("backlight gains must be in [0.5, 2.5]");
  }
}

/// Continuous piecewise-linear curve with slopes g1, g2, g3 on [0,b1),
/// [b1,b2), [b2,1], rescaled so that 0 -> 0 and 1 -> 1.
inline double backlight_curve(double luma, double b1, double b2, const std::array<double, 3>& g) {
  const auto raw = [&](double l) {
    if (l < b1) return g[0] * l;
    if (l < b2) return g[0] * b1 + g[1] * (l - b1);
    return g[0] * b1 + g[1] * (b2 - b1) + g[2] * (l - b2);
  };
  return std::clamp(raw(std::clamp(luma, 0.0, 1.0)) / raw(1.0), 0.0, 1.0);
}

inline Image apply_backlight(const Image& img, const BacklightSpec& spec) {
  check_backlight_spec(spec);
  require_same_size(img, spec.target, "apply_backlight");
  if (spec.target.empty()) throw GeometryError("apply_backlight: empty target mask");
  const Plane alpha = feather(spec.target);
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double a = alpha.at(x, y);
      if (a == 0.0) continue;
      double px[3] = {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
      set_pixel_luma(px, backlight_curve(luma_of(px[0], px[1], px[2]), spec.b1, spec.b2, spec.gains));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = a == 1.0 ? px[c] : a * px[c] + (1.0 - a) * img.at(x, y, c);
    }
  }
  return out;
}

/// Largest non-crowd object (ties: lowest id), or nullptr.
inline const coco::ObjectAnnotation* backlight_target(const coco::AnnotationSet& ann) {
  const coco::ObjectAnnotation* best = nullptr;
  std::size_t best_area = 0;
  for (const auto& o : ann.objects) {
    if (o.crowd || o.mask.empty()) continue;
    const std::size_t a = o.mask.count();
    if (!best || a > best_area || (a == best_area && o.object_id < best->object_id)) {
      best = &o;
      best_area = a;
    }
  }
  return best;
}

/// Draws cutpoints and gains (at least one gain >= 1.6) for the largest
/// eligible object.
inline BacklightSpec sample_backlight_spec(const coco::AnnotationSet& ann, Rng& rng) {
  const auto* target = backlight_target(ann);
  if (!target) throw InapplicableDistortion("backlight needs at least one non-crowd object");
  BacklightSpec s;
  const auto cut = kBacklightCuts[static_cast<std::size_t>(rng.uniform_int(0, 2))];
  s.b1 = cut.first;
  s.b2 = cut.second;
  do {
    for (double& g : s.gains) g = rng.uniform(kBacklightGainMin, kBacklightGainMax);
  } while (*std::max_element(s.gains.begin(), s.gains.end()) < kBacklightVisibleGain);
  s.target_id = target->object_id;
  s.target = target->mask;
  return s;
}

}  // namespace distort_forge
