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

// Depth handling: raw depth rasters become farness maps (0 ~ camera plane,
// 1 = farthest), and farness is split into foreground / middleground /
// background by smooth thresholding around the nearest object's depth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "distort_forge/coco.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/image.hpp"

namespace distort_forge {

/// Floor of the farness range; keeps every value strictly positive.
inline constexpr double kFarnessFloor = 1.0 / 1024.0;

enum class DepthConvention { nearness, farness };

/// Per-pixel relative depth in (0, 1], larger = farther.
class FarnessMap {
 public:
  FarnessMap() = default;
  explicit FarnessMap(Plane values) : values_(std::move(values)) {
    for (double v : values_.values()) {
      if (!std::isfinite(v) || !(v > 0.0) || v > 1.0) throw ParameterError("farness values must lie in (0,1]");
    }
  }

  /// Uniform map, e.g. for scenes without depth.
  static FarnessMap uniform(int width, int height, double value) { return FarnessMap(Plane(width, height, value)); }

  int width() const noexcept { return values_.width(); }
  int height() const noexcept { return values_.height(); }
  double at(int x, int y) const { return values_.at(x, y); }
  const Plane& plane() const noexcept { return values_; }

 private:
  Plane values_;
};

/// Normalizes a raw depth raster. Farness input is divided by its maximum;
/// nearness input (what monocular estimators emit, affine-ambiguous) is
/// min-max normalized and flipped. Both land in [1/1024, 1].
inline FarnessMap to_farness(const Plane& raw, DepthConvention convention) {
  if (raw.size() == 0) throw DegenerateDepthError("depth raster is empty");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : raw.values()) {
    if (!std::isfinite(v)) throw DegenerateDepthError("depth raster holds a non-finite value");
    if (v < 0.0) throw DegenerateDepthError("depth raster holds a negative value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == 0.0) throw DegenerateDepthError("depth raster is constant zero");
  Plane out(raw.width(), raw.height());
  auto dst = out.values();
  auto src = raw.values();
  if (convention == DepthConvention::farness) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::max(src[i] / hi, kFarnessFloor);
  } else if (hi == lo) {
    std::fill(dst.begin(), dst.end(), 1.0);
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double near = kFarnessFloor + (1.0 - kFarnessFloor) * (src[i] - lo) / (hi - lo);
      dst[i] = std::clamp(1.0 + kFarnessFloor - near, kFarnessFloor, 1.0);
    }
  }
  return FarnessMap(std::move(out));
}

/// Smooth decreasing step: 1 - 1 / (1 + exp(-15 (x - 0.5))).
inline double omega(double x) { return 1.0 - 1.0 / (1.0 + std::exp(-15.0 * (x - 0.5))); }

/// Upper cut of the smooth threshold, reached at x = 0.4 (published as 0.8176).
inline double high_threshold() { return omega(0.4); }
/// Lower cut, reached at x = 0.6 (published as 0.182).
inline double low_threshold() { return omega(0.6); }

/// Mean farness of the nearest annotated object: the plane taken as in focus.
struct FocusThreshold {
  double value = 1.0;
};

inline FocusThreshold focus_threshold(const coco::AnnotationSet& ann, const FarnessMap& depth) {
  if (ann.objects.empty()) throw InapplicableDistortion("focus threshold needs at least one annotated object");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : ann.objects) best = std::min(best, coco::mask_mean_over(o.mask, depth.plane()));
  return {best};
}

enum class Stratum : std::uint8_t { fore = 0, middle = 1, back = 2 };

struct StrataMap {
  int width = 0;
  int height = 0;
  std::vector<Stratum> labels;  // row-major
  double delta_f = 0.0;
  double delta_m = 0.0;
  double delta_b = 0.0;
  FocusThreshold threshold;
  std::array<std::size_t, 3> counts{};

  Stratum at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }

  /// 0/1 indicator plane of one stratum.
  Plane indicator(Stratum s) const {
    Plane p(width, height);
    auto v = p.values();
    for (std::size_t i = 0; i < labels.size(); ++i) v[i] = labels[i] == s ? 1.0 : 0.0;
    return p;
  }
};

/// Labels one farness value against focus threshold t.
inline Stratum classify_farness(double p, double t) {
  if (t > p) return Stratum::fore;
  const double w = omega((p - t) / t);
  if (w >= high_threshold()) return Stratum::fore;
  if (w >= low_threshold()) return Stratum::middle;
  return Stratum::back;
}

inline StrataMap classify_strata(const FarnessMap& depth, FocusThreshold t) {
  if (!(t.value > 0.0) || !std::isfinite(t.value)) throw ParameterError("focus threshold must be positive");
  StrataMap s;
  s.width = depth.width();
  s.height = depth.height();
  s.threshold = t;
  s.labels.resize(static_cast<std::size_t>(s.width) * s.height);
  std::array<double, 3> sums{};
  auto vals = depth.plane().values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const Stratum label = classify_farness(vals[i], t.value);
    s.labels[i] = label;
    sums[static_cast<int>(label)] += vals[i];
    ++s.counts[static_cast<int>(label)];
  }
  const auto mean = [&](int k) { return s.counts[k] ? sums[k] / static_cast<double>(s.counts[k]) : t.value; };
  s.delta_f = mean(0);
  s.delta_m = mean(1);
  s.delta_b = mean(2);
  return s;
}

}  // namespace distort_forge
