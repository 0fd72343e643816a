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

// Pixel-level primitives shared by every distortion: 8-bit <-> normalized
// conversion, edge-replicating convolution, blur kernels, screen blending,
// luma handling, and the 2-pixel feathered compositing used by all local
// distortions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distort_forge/error.hpp"
#include "distort_forge/image.hpp"
#include "distort_forge/mask.hpp"

namespace distort_forge {

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline Image normalize(const Image8& src) {
  if (src.width < kMinImageSide || src.height < kMinImageSide) {
    throw DimensionError("normalize: image " + std::to_string(src.width) + "x" + std::to_string(src.height) +
                         " below minimum size");
  }
  if (src.data.size() != static_cast<std::size_t>(src.width) * src.height * 3) {
    throw DimensionError("normalize: buffer size does not match dimensions");
  }
  Image out(src.width, src.height);
  auto dst = out.data();
  for (std::size_t i = 0; i < src.data.size(); ++i) dst[i] = src.data[i] / 255.0;
  return out;
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline Image8 denormalize(const Image& img) {
  Image8 out(img.width(), img.height());
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) out.data[i] = to_byte(src[i]);
  return out;
}

/// Normalized, non-negative convolution kernel with odd dimensions.
class Kernel2D {
 public:
  struct Tap {
    int dx;
    int dy;
    double weight;
  };

  Kernel2D(int width, int height, std::vector<double> weights)
      : width_(width), height_(height), weights_(std::move(weights)) {
    if (width < 1 || height < 1 || width % 2 == 0 || height % 2 == 0) {
      throw ParameterError("kernel dimensions must be odd and positive");
    }
    if (weights_.size() != static_cast<std::size_t>(width) * height) {
      throw ParameterError("kernel weight count does not match dimensions");
    }
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("kernel weights must be finite and >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("kernel weights must sum to 1");
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const double w = at(x, y);
        if (w != 0.0) taps_.push_back({x - width_ / 2, y - height_ / 2, w});
      }
    }
  }

  static Kernel2D identity() { return Kernel2D(1, 1, {1.0}); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int x, int y) const { return weights_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> weights() const noexcept { return weights_; }
  /// Nonzero weights with offsets relative to the kernel center.
  std::span<const Tap> taps() const noexcept { return taps_; }

  bool operator==(const Kernel2D& o) const {
    return width_ == o.width_ && height_ == o.height_ && weights_ == o.weights_;
  }

 private:
  int width_;
  int height_;
  std::vector<double> weights_;
  std::vector<Tap> taps_;
};

/// Writes the kernel response for every pixel of `area` into `dst`, reading
/// `src` with edge replication. Results are clamped to [0,1].
inline void convolve_into(const Image& src, const Kernel2D& k, const Rect& area, Image& dst) {
  const Rect a = area.intersect({0, 0, src.width(), src.height()});
  for (int y = a.y; y < a.bottom(); ++y) {
    for (int x = a.x; x < a.right(); ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (const auto& t : k.taps()) {
        const int sx = std::clamp(x + t.dx, 0, src.width() - 1);
        const int sy = std::clamp(y + t.dy, 0, src.height() - 1);
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * src.at(sx, sy, c);
      }
      for (int c = 0; c < 3; ++c) dst.at(x, y, c) = std::clamp(acc[c], 0.0, 1.0);
    }
  }
}

inline Image convolve(const Image& img, const Kernel2D& k) {
  if (k.width() > img.width() || k.height() > img.height()) {
    throw DimensionError("convolve: kernel " + std::to_string(k.width()) + "x" + std::to_string(k.height()) +
                         " larger than image");
  }
  Image out(img.width(), img.height());
  convolve_into(img, k, {0, 0, img.width(), img.height()}, out);
  return out;
}

/// Truncation radius of the Gaussian of the given std.
inline int gaussian_radius(double std) { return static_cast<int>(std::ceil(3.0 * std)); }

/// Normalized 1-D Gaussian taps over [-radius, radius].
inline std::vector<double> gaussian_kernel_1d(double std) {
  if (!(std > 0.0) || !std::isfinite(std)) throw ParameterError("gaussian std must be positive");
  const int r = gaussian_radius(std);
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-(i * i) / (2.0 * std * std));
    sum += w[i + r];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Dense isotropic Gaussian truncated at ceil(3 std), normalized.
inline Kernel2D gaussian_kernel(double std) {
  if (!(std > 0.0) || !std::isfinite(std)) throw ParameterError("gaussian std must be positive");
  const int r = gaussian_radius(std);
  const int n = 2 * r + 1;
  std::vector<double> w(static_cast<std::size_t>(n) * n);
  double sum = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * std * std));
      w[static_cast<std::size_t>(y + r) * n + (x + r)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return Kernel2D(n, n, std::move(w));
}

/// Largest std whose truncated kernel still fits inside a width x height image.
inline double max_gaussian_std(int width, int height) {
  const int radius = (std::min(width, height) - 1) / 2;
  return radius / 3.0;
}

/// Separable Gaussian blur with edge replication; equals convolve() with
/// gaussian_kernel(std) up to rounding.
inline Image gaussian_blur(const Image& img, double std) {
  const auto k = gaussian_kernel_1d(std);
  const int r = static_cast<int>(k.size() / 2);
  if (2 * r + 1 > std::min(img.width(), img.height())) {
    throw DimensionError("gaussian_blur: kernel larger than image");
  }
  const int w = img.width(), h = img.height();
  std::vector<double> tmp(img.data().size());
  auto tmp_at = [&](int x, int y, int c) -> double& { return tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp_at(x, y, c) = acc;
      }
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp_at(x, std::clamp(y + i, 0, h - 1), c);
        out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

/// Uniform line-segment PSF of `length` taps through the kernel center.
/// Angles are measured from the +x axis in image coordinates (y down) and
/// taken modulo 180, so the segment is undirected.
inline Kernel2D line_kernel(int length, double angle_deg) {
  if (length < 1) throw ParameterError("line_kernel: length must be >= 1");
  if (!std::isfinite(angle_deg)) throw ParameterError("line_kernel: angle must be finite");
  if (length == 1) return Kernel2D::identity();
  double a = std::fmod(angle_deg, 180.0);
  if (a < 0.0) a += 180.0;
  const double rad = a * std::numbers::pi / 180.0;
  const double dx = std::cos(rad), dy = std::sin(rad);
  const double half = (length - 1) / 2.0;
  const int samples = 8 * length + 1;

  std::vector<std::pair<int, int>> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  int rx = 0, ry = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = -half + (2.0 * half) * i / (samples - 1);
    // Round half away from zero keeps the point set symmetric about 0.
    const int px = static_cast<int>(std::lround(t * dx));
    const int py = static_cast<int>(std::lround(t * dy));
    pts.emplace_back(px, py);
    rx = std::max(rx, std::abs(px));
    ry = std::max(ry, std::abs(py));
  }
  const int kw = 2 * rx + 1, kh = 2 * ry + 1;
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(kw) * kh, 0);
  for (auto [px, py] : pts) hit[static_cast<std::size_t>(py + ry) * kw + (px + rx)] = 1;
  const auto n = static_cast<double>(std::count(hit.begin(), hit.end(), std::uint8_t{1}));
  std::vector<double> w(hit.size());
  for (std::size_t i = 0; i < hit.size(); ++i) w[i] = hit[i] ? 1.0 / n : 0.0;
  return Kernel2D(kw, kh, std::move(w));
}

/// out = 1 - (1 - in) * (1 - alpha * overlay), applied to all three channels.
inline Image screen_blend(const Image& base, const ScalarMask& overlay, double alpha) {
  require_same_size(base, overlay, "screen_blend");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("screen_blend: alpha outside [0,1]");
  Image out = base;
  for (int y = 0; y < base.height(); ++y) {
    for (int x = 0; x < base.width(); ++x) {
      const double m = alpha * overlay.at(x, y);
      if (m == 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = std::clamp(1.0 - (1.0 - base.at(x, y, c)) * (1.0 - m), 0.0, 1.0);
      }
    }
  }
  return out;
}

inline double luma_of(double r, double g, double b) { return kLumaR * r + kLumaG * g + kLumaB * b; }

inline Plane rgb_to_luma(const Image& img) {
  Plane out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = luma_of(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
  }
  return out;
}

/// Recolors one pixel to luma `target` keeping the channel ratios. When the
/// ratio scaling would leave [0,1], the color is pushed toward white just
/// enough to hit the target exactly.
inline void set_pixel_luma(double rgb[3], double target) {
  target = std::clamp(target, 0.0, 1.0);
  const double current = luma_of(rgb[0], rgb[1], rgb[2]);
  if (target == current) return;
  if (target <= 0.0) {
    rgb[0] = rgb[1] = rgb[2] = 0.0;
    return;
  }
  if (target >= 1.0) {
    rgb[0] = rgb[1] = rgb[2] = 1.0;
    return;
  }
  if (current <= 0.0) {
    rgb[0] = rgb[1] = rgb[2] = target;
    return;
  }
  const double ratio = target / current;
  const double peak = std::max({rgb[0], rgb[1], rgb[2]});
  if (peak * ratio <= 1.0) {
    for (int c = 0; c < 3; ++c) rgb[c] *= ratio;
    return;
  }
  double unit[3];
  for (int c = 0; c < 3; ++c) unit[c] = rgb[c] / peak;
  const double base = luma_of(unit[0], unit[1], unit[2]);
  const double t = (target - base) / (1.0 - base);
  for (int c = 0; c < 3; ++c) rgb[c] = std::clamp(unit[c] + t * (1.0 - unit[c]), 0.0, 1.0);
}

inline Image luma_replace(const Image& img, const Plane& luma) {
  require_same_size(img, luma, "luma_replace");
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double px[3] = {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
      set_pixel_luma(px, luma.at(x, y));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = px[c];
    }
  }
  return out;
}

/// 3x3 box mean of a 0/1 indicator with edge replication. Pixels whose
/// Chebyshev distance to the other side of the boundary is >= 2 come out
/// exactly 0 or 1; the band straddling the boundary (2 px) fades linearly.
inline Plane box3_mean(const Plane& indicator) {
  Plane out(indicator.width(), indicator.height());
  for (int y = 0; y < indicator.height(); ++y) {
    for (int x = 0; x < indicator.width(); ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) s += indicator.clamped(x + dx, y + dy);
      out.at(x, y) = s / 9.0;
    }
  }
  return out;
}

/// Feathered compositing weight for a mask: 1 deep inside, 0 from one pixel
/// outside the mask on, linear across the 2-pixel boundary band.
inline Plane feather(const BitMask& mask) {
  Plane out(mask.width(), mask.height());
  if (mask.empty()) return out;
  const Rect band = mask.bounds().expanded(1).intersect({0, 0, mask.width(), mask.height()});
  for (int y = band.y; y < band.bottom(); ++y) {
    for (int x = band.x; x < band.right(); ++x) {
      int s = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          s += mask.test(std::clamp(x + dx, 0, mask.width() - 1), std::clamp(y + dy, 0, mask.height() - 1)) ? 1 : 0;
        }
      }
      out.at(x, y) = s / 9.0;
    }
  }
  return out;
}

/// Per-pixel alpha * top + (1 - alpha) * base. Pixels with alpha == 0 keep
/// base bit for bit.
inline Image composite(const Image& base, const Image& top, const Plane& alpha) {
  require_same_size(base, top, "composite");
  require_same_size(base, alpha, "composite");
  Image out = base;
  for (int y = 0; y < base.height(); ++y) {
    for (int x = 0; x < base.width(); ++x) {
      const double a = alpha.at(x, y);
      if (a == 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = a == 1.0 ? top.at(x, y, c) : a * top.at(x, y, c) + (1.0 - a) * base.at(x, y, c);
      }
    }
  }
  return out;
}

/// 3x3 max filter (grey dilation), edge replicated.
inline Plane max3(const Plane& p) {
  Plane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      double m = p.at(x, y);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) m = std::max(m, p.clamped(x + dx, y + dy));
      out.at(x, y) = m;
    }
  }
  return out;
}

/// 3x3 min filter (grey erosion), edge replicated.
inline Plane min3(const Plane& p) {
  Plane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      double m = p.at(x, y);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) m = std::min(m, p.clamped(x + dx, y + dy));
      out.at(x, y) = m;
    }
  }
  return out;
}

/// Bilinear resample with pixel-center alignment.
inline Plane resize_bilinear(const Plane& src, int width, int height) {
  if (src.width() < 1 || src.height() < 1) throw DimensionError("resize_bilinear: empty source");
  if (src.width() == width && src.height() == height) return src;
  Plane out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      const double top = src.at(x0, y0) * (1 - tx) + src.at(x1, y0) * tx;
      const double bot = src.at(x0, y1) * (1 - tx) + src.at(x1, y1) * tx;
      out.at(x, y) = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

/// Resolution scale applied to pixel-sized blur parameters.
inline double resolution_scale(int width, int height) {
  return std::max(1.0, std::min(width, height) / 512.0);
}

}  // namespace distort_forge
