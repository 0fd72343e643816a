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

// Depth-aware atmospheric distortions. Rain: one streak mask is split into
// three densities by morphology and screen-blended stratum by stratum from
// the foreground back. Fog: a smooth mask is screen-blended with a weight
// proportional to farness.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "distort_forge/depth.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/imgcore.hpp"
#include "distort_forge/io.hpp"
#include "distort_forge/random.hpp"

namespace distort_forge {

inline constexpr double kFogAlpha = 0.95;
inline constexpr double kRainAlphaMin = 0.6;
inline constexpr double kRainAlphaMax = 1.0;

// ---------------------------------------------------------------------------
// Rain

namespace detail {

struct Pt {
  double x, y;
};

/// Area of a convex polygon clipped to the unit pixel [px, px+1] x [py, py+1].
inline double clipped_area(const std::array<Pt, 4>& quad, int px, int py) {
  std::vector<Pt> poly(quad.begin(), quad.end()), next;
  auto clip = [&](auto inside, auto cross) {
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Pt& a = poly[i];
      const Pt& b = poly[(i + 1) % poly.size()];
      const bool ia = inside(a), ib = inside(b);
      if (ia) next.push_back(a);
      if (ia != ib) next.push_back(cross(a, b));
    }
    poly.swap(next);
  };
  const double x0 = px, x1 = px + 1.0, y0 = py, y1 = py + 1.0;
  auto at_x = [](double xc) {
    return [xc](const Pt& a, const Pt& b) { return Pt{xc, a.y + (xc - a.x) * (b.y - a.y) / (b.x - a.x)}; };
  };
  auto at_y = [](double yc) {
    return [yc](const Pt& a, const Pt& b) { return Pt{a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y), yc}; };
  };
  clip([&](const Pt& p) { return p.x >= x0; }, at_x(x0));
  if (poly.empty()) return 0.0;
  clip([&](const Pt& p) { return p.x <= x1; }, at_x(x1));
  if (poly.empty()) return 0.0;
  clip([&](const Pt& p) { return p.y >= y0; }, at_y(y0));
  if (poly.empty()) return 0.0;
  clip([&](const Pt& p) { return p.y <= y1; }, at_y(y1));
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::clamp(std::abs(a) * 0.5, 0.0, 1.0);
}

}  // namespace detail

/// Procedural rain mask: `streak_count` anti-aliased streaks, 20-60 px long,
/// 1-2 px wide, intensity 0.4-1, each within 4 degrees of `angle_deg`.
/// Pixel values are intensity times exact pixel coverage, max-combined.
inline ScalarMask synthesize_rain_base(Rng& rng, int width, int height, int streak_count, double angle_deg) {
  if (streak_count < 1) throw ParameterError("synthesize_rain_base: streak_count must be >= 1");
  if (width < 1 || height < 1) throw DimensionError("synthesize_rain_base: empty raster");
  ScalarMask mask(width, height);
  for (int s = 0; s < streak_count; ++s) {
    const double cx = rng.uniform(0.0, width), cy = rng.uniform(0.0, height);
    const double length = rng.uniform(20.0, 60.0);
    const double thickness = rng.uniform(1.0, 2.0);
    const double intensity = rng.uniform(0.4, 1.0);
    const double a = (angle_deg + rng.uniform(-4.0, 4.0)) * std::numbers::pi / 180.0;
    const double ux = std::cos(a) * length / 2, uy = std::sin(a) * length / 2;
    const double nx = -std::sin(a) * thickness / 2, ny = std::cos(a) * thickness / 2;
    const std::array<detail::Pt, 4> quad{{{cx - ux - nx, cy - uy - ny},
                                          {cx + ux - nx, cy + uy - ny},
                                          {cx + ux + nx, cy + uy + ny},
                                          {cx - ux + nx, cy - uy + ny}}};
    double xmin = quad[0].x, xmax = xmin, ymin = quad[0].y, ymax = ymin;
    for (const auto& p : quad) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(xmin)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(xmax)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(ymax)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double cover = detail::clipped_area(quad, x, y);
        if (cover > 0.0) mask.at(x, y) = std::max(mask.at(x, y), intensity * cover);
      }
    }
  }
  return mask;
}

/// Three rain densities, one per depth stratum. Near rain is coarse
/// (dilated), far rain fine (eroded, half intensity).
struct RainSubmasks {
  ScalarMask foreground;
  ScalarMask middleground;
  ScalarMask background;
};

inline RainSubmasks derive_rain_submasks(const ScalarMask& base) {
  check_scalar_mask(base, "derive_rain_submasks");
  RainSubmasks s;
  s.foreground = max3(base);
  s.middleground = base;
  s.background = min3(base);
  for (double& v : s.background.values()) v *= 0.5;
  return s;
}

/// Copy of `m` with every pixel outside stratum `keep` zeroed.
inline ScalarMask gate_to_stratum(const ScalarMask& m, const StrataMap& strata, Stratum keep) {
  ScalarMask out = m;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (strata.labels[i] != keep) v[i] = 0.0;
  return out;
}

inline Image apply_rain(const Image& img, const StrataMap& strata, const RainSubmasks& subs, double alpha) {
  if (img.width() != strata.width || img.height() != strata.height) {
    throw DimensionError("apply_rain: strata size does not match image");
  }
  require_same_size(img, subs.foreground, "apply_rain");
  require_same_size(img, subs.middleground, "apply_rain");
  require_same_size(img, subs.background, "apply_rain");
  const Image fore = screen_blend(img, gate_to_stratum(subs.foreground, strata, Stratum::fore), alpha);
  const Image middle = screen_blend(fore, gate_to_stratum(subs.middleground, strata, Stratum::middle), alpha);
  return screen_blend(middle, gate_to_stratum(subs.background, strata, Stratum::back), alpha);
}

// ---------------------------------------------------------------------------
// Fog

inline constexpr int kFogOctaves = 4;
inline constexpr double kFogBaseCell = 64.0;
inline constexpr double kFogPersistence = 0.5;
inline constexpr double kFogFloor = 0.3;

/// Fractal value noise (4 octaves, 64 px base cell, persistence 0.5)
/// rescaled to [0.3, 1].
inline ScalarMask synthesize_fog_mask(Rng& rng, int width, int height) {
  if (width < 1 || height < 1) throw DimensionError("synthesize_fog_mask: empty raster");
  const std::uint64_t lattice_seed = rng.next();
  ScalarMask mask(width, height);
  double amplitude = 1.0, cell = kFogBaseCell;
  for (int o = 0; o < kFogOctaves; ++o) {
    const std::uint64_t octave_seed = stable_hash(lattice_seed, static_cast<std::uint64_t>(o));
    auto lattice = [&](std::int64_t ix, std::int64_t iy) {
      const auto key = (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint64_t>(iy);
      return static_cast<double>(stable_hash(octave_seed, key) >> 11) * 0x1.0p-53;
    };
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    for (int y = 0; y < height; ++y) {
      const double fy = (y + 0.5) / cell;
      const auto iy = static_cast<std::int64_t>(std::floor(fy));
      const double ty = smooth(fy - iy);
      for (int x = 0; x < width; ++x) {
        const double fx = (x + 0.5) / cell;
        const auto ix = static_cast<std::int64_t>(std::floor(fx));
        const double tx = smooth(fx - ix);
        const double top = lattice(ix, iy) * (1 - tx) + lattice(ix + 1, iy) * tx;
        const double bot = lattice(ix, iy + 1) * (1 - tx) + lattice(ix + 1, iy + 1) * tx;
        mask.at(x, y) += amplitude * (top * (1 - ty) + bot * ty);
      }
    }
    amplitude *= kFogPersistence;
    cell /= 2.0;
  }
  auto v = mask.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  for (double& x : v) x = hi > lo ? kFogFloor + (1.0 - kFogFloor) * (x - lo) / (hi - lo) : (1.0 + kFogFloor) / 2;
  return mask;
}

/// out = 1 - (1 - in) * (1 - 0.95 * farness * H), per channel.
inline Image apply_fog(const Image& img, const FarnessMap& depth, const ScalarMask& h) {
  require_same_size(img, depth, "apply_fog");
  require_same_size(img, h, "apply_fog");
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double kappa = kFogAlpha * depth.at(x, y);
      const double m = kappa * h.at(x, y);
      if (m == 0.0) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = std::clamp(1.0 - (1.0 - img.at(x, y, c)) * (1.0 - m), 0.0, 1.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// External masks

/// PNG files of `dir`, sorted by name.
inline std::vector<std::filesystem::path> list_mask_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw IoError("mask directory not found: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && (e.path().extension() == ".png" || e.path().extension() == ".PNG")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("mask directory holds no PNG files: " + dir.string());
  return files;
}

/// Loads the seed-selected grayscale mask of `dir`, scaled to [0,1] and
/// resampled to width x height.
inline ScalarMask load_external_mask(const std::filesystem::path& dir, std::uint64_t seed, int width, int height) {
  const auto files = list_mask_files(dir);
  const auto& pick = files[seed % files.size()];
  int bits = 8;
  Plane raw = io::read_png_gray(pick, &bits);
  const double scale = bits == 16 ? 65535.0 : 255.0;
  for (double& v : raw.values()) v /= scale;
  Plane out = resize_bilinear(raw, width, height);
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace distort_forge
