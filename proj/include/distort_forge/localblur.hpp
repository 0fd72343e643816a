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

// Scene-context local blurs: layered defocus over depth strata, and
// per-object motion blur with interaction resolution between overlapping,
// depth-proximate objects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "distort_forge/coco.hpp"
#include "distort_forge/depth.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/imgcore.hpp"
#include "distort_forge/random.hpp"
#include "distort_forge/scene.hpp"

namespace distort_forge {

// ---------------------------------------------------------------------------
// Local defocus

struct DefocusMagnitudes {
  double lambda_f = 0.0;
  double lambda_m = 0.0;
  double lambda_b = 0.0;
};

/// Cumulative blur magnitudes from the stratum mean depths. Each increment
/// is clamped at zero, so 0 <= lambda_f <= lambda_m <= lambda_b always.
inline DefocusMagnitudes defocus_magnitudes(const StrataMap& strata) {
  const double t = strata.threshold.value;
  if (!(t > 0.0)) throw ParameterError("defocus_magnitudes: threshold must be positive");
  DefocusMagnitudes m;
  m.lambda_f = std::max(0.0, 0.5 + (strata.delta_f - t) / t * 1.5);
  m.lambda_m = m.lambda_f + std::max(0.0, (strata.delta_m - t) / t * 1.2);
  m.lambda_b = m.lambda_m + std::max(0.0, (strata.delta_b - t) / t * 1.2);
  return m;
}

/// Below this std (pixels) a stratum keeps the original pixels.
inline constexpr double kMinBlurStd = 0.05;

/// Blurs each stratum with its own Gaussian (std = lambda * resolution
/// scale) and fuses the copies with 2-pixel feathered transitions.
inline Image apply_local_defocus(const Image& img, const StrataMap& strata, const DefocusMagnitudes& mags) {
  if (img.width() != strata.width || img.height() != strata.height) {
    throw DimensionError("apply_local_defocus: strata size does not match image");
  }
  const double s = resolution_scale(img.width(), img.height());
  const double cap = max_gaussian_std(img.width(), img.height());
  const double lambdas[3] = {mags.lambda_f, mags.lambda_m, mags.lambda_b};

  std::vector<Image> copies;
  std::vector<double> stds;
  int source[3] = {-1, -1, -1};  // stratum -> index into copies
  for (int k = 0; k < 3; ++k) {
    if (strata.counts[k] == 0) continue;
    double std = lambdas[k] * s;
    std = std < kMinBlurStd ? 0.0 : std::min(std, cap);
    auto it = std::find(stds.begin(), stds.end(), std);
    if (it != stds.end()) {
      source[k] = static_cast<int>(it - stds.begin());
      continue;
    }
    stds.push_back(std);
    copies.push_back(std == 0.0 ? img : gaussian_blur(img, std));
    source[k] = static_cast<int>(copies.size()) - 1;
  }

  Plane weights[3];
  for (int k = 0; k < 3; ++k) {
    if (source[k] >= 0) weights[k] = box3_mean(strata.indicator(static_cast<Stratum>(k)));
  }
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
          if (source[k] < 0) continue;
          const double w = weights[k].at(x, y);
          if (w == 0.0) continue;
          acc += w == 1.0 ? copies[source[k]].at(x, y, c) : w * copies[source[k]].at(x, y, c);
        }
        out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Superclass profiles

enum class AnglePolicy { free, snap_horizontal, snap_to_ellipse };

inline std::string_view to_string(AnglePolicy p) {
  switch (p) {
    case AnglePolicy::free: return "free";
    case AnglePolicy::snap_horizontal: return "snap-horizontal";
    case AnglePolicy::snap_to_ellipse: return "snap-to-ellipse";
  }
  return "?";
}

inline std::optional<AnglePolicy> parse_angle_policy(std::string_view s) {
  if (s == "free") return AnglePolicy::free;
  if (s == "snap-horizontal") return AnglePolicy::snap_horizontal;
  if (s == "snap-to-ellipse") return AnglePolicy::snap_to_ellipse;
  return std::nullopt;
}

struct SuperclassProfile {
  std::string name;
  double lo = 0.0;  // magnitude interval, pixels
  double hi = 0.0;
  AnglePolicy policy = AnglePolicy::free;
  int rank = 0;  // higher dominates in interactions

  bool is_static() const noexcept { return hi <= 0.0; }
  bool operator==(const SuperclassProfile&) const = default;
};

/// Supercategory -> motion profile. Unknown names resolve to the static
/// profile.
class ProfileTable {
 public:
  ProfileTable() = default;
  explicit ProfileTable(std::map<std::string, SuperclassProfile> entries) : entries_(std::move(entries)) {}

  const SuperclassProfile& lookup(std::string_view supercategory) const {
    auto it = entries_.find(std::string(supercategory));
    return it == entries_.end() ? static_profile() : it->second;
  }

  const std::map<std::string, SuperclassProfile>& entries() const noexcept { return entries_; }

  void set(SuperclassProfile p) { entries_[p.name] = std::move(p); }

  static const SuperclassProfile& static_profile() {
    static const SuperclassProfile p{"static", 0.0, 0.0, AnglePolicy::free, 0};
    return p;
  }

 private:
  std::map<std::string, SuperclassProfile> entries_;
};

/// Built-in table over the twelve COCO supercategories.
inline ProfileTable superclass_profiles() {
  std::map<std::string, SuperclassProfile> t;
  auto add = [&](const char* name, double lo, double hi, int rank, AnglePolicy policy) {
    t[name] = SuperclassProfile{name, lo, hi, policy, rank};
  };
  add("vehicle", 7, 15, 5, AnglePolicy::snap_horizontal);
  add("animal", 4, 10, 4, AnglePolicy::snap_to_ellipse);
  add("person", 3, 8, 3, AnglePolicy::snap_to_ellipse);
  add("sports", 3, 10, 2, AnglePolicy::free);
  add("accessory", 0, 5, 1, AnglePolicy::snap_to_ellipse);
  for (const char* s : {"food", "furniture", "appliance", "electronic", "indoor", "outdoor", "kitchen"}) {
    add(s, 0, 0, 0, AnglePolicy::free);
  }
  return ProfileTable(std::move(t));
}

/// Loads overrides from JSON: {"vehicle": {"lo": 7, "hi": 15, "rank": 5,
/// "angle": "snap-horizontal"}, ...}. Entries replace the built-in ones.
inline ProfileTable load_profiles(std::string_view json_text, ProfileTable base = superclass_profiles()) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("profile table: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {  // e.g. numbers out of range
    throw SchemaError(std::string("profile table: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("profile table must be a JSON object");
  for (const auto& [name, v] : doc.items()) {
    if (!v.is_object() || !v.contains("lo") || !v.contains("hi") || !v.contains("rank") ||
        !v["lo"].is_number() || !v["hi"].is_number() || !v["rank"].is_number_integer()) {
      throw SchemaError("profile \"" + name + "\" needs numeric lo, hi and integer rank");
    }
    SuperclassProfile p{name, v["lo"].get<double>(), v["hi"].get<double>(), AnglePolicy::free, v["rank"].get<int>()};
    if (!(p.lo >= 0.0) || !(p.hi >= p.lo)) throw SchemaError("profile \"" + name + "\": need 0 <= lo <= hi");
    if (auto it = v.find("angle"); it != v.end()) {
      if (!it->is_string()) throw SchemaError("profile \"" + name + "\": angle must be a string");
      auto policy = parse_angle_policy(it->get<std::string>());
      if (!policy) throw SchemaError("profile \"" + name + "\": unknown angle policy");
      p.policy = *policy;
    }
    base.set(std::move(p));
  }
  return base;
}

// ---------------------------------------------------------------------------
// Local motion blur

inline constexpr int kMaxMotionMagnitude = 41;
inline constexpr int kMinMotionMagnitude = 2;
inline constexpr double kFastActionBoost = 1.5;
inline constexpr double kInteractionIou = 0.05;
inline constexpr double kInteractionDepthGap = 0.1;

struct MotionParams {
  std::int64_t object_id = 0;
  int magnitude = 0;   // pixels
  double angle = 0.0;  // degrees in [0, 180)
  double mean_farness = 1.0;
  std::optional<std::int64_t> inherited_from;  // parent object id, if any

  bool operator==(const MotionParams&) const = default;
};

/// Rounded, capped magnitude for a base draw from the profile interval.
inline int motion_magnitude(double base, const SuperclassProfile& profile, const SceneContext& scene,
                            double mean_farness) {
  if (profile.is_static()) return 0;
  double m = base;
  if (scene.is_fast_action() && (profile.name == "person" || profile.name == "sports")) m *= kFastActionBoost;
  m *= 2.0 - mean_farness;
  return std::clamp(static_cast<int>(std::lround(m)), 0, kMaxMotionMagnitude);
}

/// Draws magnitude and angle for one object. Consumes exactly two values of
/// `rng` regardless of profile.
inline MotionParams object_motion_params(const coco::ObjectAnnotation& obj, const SceneContext& scene,
                                         const FarnessMap& depth, Rng& rng,
                                         const ProfileTable& table = superclass_profiles()) {
  if (obj.mask.empty()) throw GeometryError("object " + std::to_string(obj.object_id) + " has an empty mask");
  const auto& profile = table.lookup(obj.supercategory);
  const double base = rng.uniform(profile.lo, profile.hi);
  const double free_angle = rng.uniform(0.0, 180.0);
  MotionParams p;
  p.object_id = obj.object_id;
  p.mean_farness = coco::mask_mean_over(obj.mask, depth.plane());
  p.magnitude = motion_magnitude(base, profile, scene, p.mean_farness);
  switch (profile.policy) {
    case AnglePolicy::free: p.angle = free_angle; break;
    case AnglePolicy::snap_horizontal: p.angle = 0.0; break;
    case AnglePolicy::snap_to_ellipse: p.angle = coco::mask_orientation(obj.mask); break;
  }
  return p;
}

/// Objects interact when their boxes overlap (IoU > 0.05) and their mean
/// depths are close (< 0.1). Inside each connected group every member takes
/// the magnitude and angle of the highest-ranked member (ties: larger mask,
/// then lower object id).
inline std::vector<MotionParams> resolve_interactions(const std::vector<MotionParams>& params,
                                                      const coco::AnnotationSet& objects, const FarnessMap& depth,
                                                      const ProfileTable& table = superclass_profiles()) {
  const std::size_t n = params.size();
  std::vector<const coco::ObjectAnnotation*> obj(n);
  std::vector<double> farness(n);
  std::vector<std::size_t> area(n);
  for (std::size_t i = 0; i < n; ++i) {
    obj[i] = objects.find(params[i].object_id);
    if (!obj[i]) throw IntegrityError("motion params for unknown object " + std::to_string(params[i].object_id));
    farness[i] = coco::mask_mean_over(obj[i]->mask, depth.plane());
    area[i] = obj[i]->mask.count();
  }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coco::bbox_iou(obj[i]->bbox, obj[j]->bbox) > kInteractionIou &&
          std::abs(farness[i] - farness[j]) < kInteractionDepthGap) {
        parent[find(i)] = find(j);
      }
    }
  }

  auto dominates = [&](std::size_t a, std::size_t b) {
    const int ra = table.lookup(obj[a]->supercategory).rank, rb = table.lookup(obj[b]->supercategory).rank;
    if (ra != rb) return ra > rb;
    if (area[a] != area[b]) return area[a] > area[b];
    return params[a].object_id < params[b].object_id;
  };
  std::vector<std::size_t> leader(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (leader[root] == n || dominates(i, leader[root])) leader[root] = i;
  }

  std::vector<MotionParams> out = params;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = leader[find(i)];
    if (l == i) continue;
    out[i].magnitude = params[l].magnitude;
    out[i].angle = params[l].angle;
    out[i].inherited_from = params[l].object_id;
  }
  return out;
}

/// Blurs each object's dilated mask region along its motion line,
/// farthest object first, compositing with a 2-pixel feathered edge.
inline Image apply_local_motion_blur(const Image& img, const coco::AnnotationSet& objects,
                                     const std::vector<MotionParams>& params) {
  if (objects.width != img.width() || objects.height != img.height()) {
    throw DimensionError("apply_local_motion_blur: annotation raster does not match image");
  }
  std::vector<const MotionParams*> order;
  for (const auto& p : params) {
    if (p.magnitude < 0) throw ParameterError("motion magnitude must be >= 0");
    if (p.magnitude >= kMinMotionMagnitude) order.push_back(&p);
  }
  std::stable_sort(order.begin(), order.end(), [](const MotionParams* a, const MotionParams* b) {
    if (a->mean_farness != b->mean_farness) return a->mean_farness > b->mean_farness;
    return a->object_id < b->object_id;
  });

  Image current = img;
  for (const MotionParams* p : order) {
    const auto* obj = objects.find(p->object_id);
    if (!obj) throw IntegrityError("motion params for unknown object " + std::to_string(p->object_id));
    if (obj->mask.width() != img.width() || obj->mask.height() != img.height()) {
      throw DimensionError("apply_local_motion_blur: mask size does not match image");
    }
    const int length = std::min({p->magnitude, kMaxMotionMagnitude, img.width(), img.height()});
    const Kernel2D kernel = line_kernel(length, p->angle);
    const BitMask region = dilate(obj->mask, (length + 1) / 2);
    const Plane alpha = feather(region);
    const Rect band = region.bounds().expanded(1).intersect({0, 0, img.width(), img.height()});
    Image blurred = current;
    convolve_into(current, kernel, band, blurred);
    for (int y = band.y; y < band.bottom(); ++y) {
      for (int x = band.x; x < band.right(); ++x) {
        const double a = alpha.at(x, y);
        if (a == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          current.at(x, y, c) = a == 1.0 ? blurred.at(x, y, c) : a * blurred.at(x, y, c) + (1.0 - a) * current.at(x, y, c);
        }
      }
    }
  }
  return current;
}

}  // namespace distort_forge
