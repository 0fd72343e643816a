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

// Applies one manifest entry to one image: resolves depth, strata, masks and
// per-object parameters, then dispatches to the distortion operators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "distort_forge/assign.hpp"
#include "distort_forge/atmos.hpp"
#include "distort_forge/coco.hpp"
#include "distort_forge/depth.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/image.hpp"
#include "distort_forge/imgcore.hpp"
#include "distort_forge/localblur.hpp"
#include "distort_forge/photometric.hpp"
#include "distort_forge/random.hpp"

namespace distort_forge {

struct PipelineInputs {
  Image image;
  std::optional<Plane> raw_depth;
  DepthConvention convention = DepthConvention::nearness;
  const coco::AnnotationSet* annotations = nullptr;  // may be null
  Locale locale = Locale::outdoor;
  std::optional<std::filesystem::path> rain_masks;
  std::optional<std::filesystem::path> fog_masks;
  const ProfileTable* profiles = nullptr;  // null: built-in table
  ActivityRules activity_rules;
};

struct PipelineResult {
  Image image;
  std::optional<ScalarMask> mask;       // affected region or overlay, for previews
  std::optional<FarnessMap> farness;
};

// Apply-time draws use their own stream so they never alias the plan draws.
inline constexpr std::uint64_t kApplyStream = 0x61707079;  // "appy"

/// Farness at image resolution; depth rasters of another size are resampled.
inline FarnessMap resolve_farness(const Plane& raw, DepthConvention convention, int width, int height) {
  const FarnessMap f = to_farness(raw, convention);
  if (f.width() == width && f.height() == height) return f;
  Plane p = resize_bilinear(f.plane(), width, height);
  for (double& v : p.values()) v = std::clamp(v, kFarnessFloor, 1.0);
  return FarnessMap(std::move(p));
}

/// Farness below which the nearest tenth of the scene lies; stands in for
/// the focus plane when an image carries no objects.
inline FocusThreshold fallback_threshold(const FarnessMap& depth) {
  std::vector<double> v(depth.plane().values().begin(), depth.plane().values().end());
  const auto k = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return {v[k]};
}

inline StrataMap scene_strata(const FarnessMap& depth, const coco::AnnotationSet* ann) {
  const bool has_objects = ann && !ann->objects.empty();
  return classify_strata(depth, has_objects ? focus_threshold(*ann, depth) : fallback_threshold(depth));
}

namespace detail {
inline Plane mask_plane(const BitMask& m) {
  Plane p(m.width(), m.height());
  m.for_each([&](int x, int y) { p.at(x, y) = 1.0; });
  return p;
}

inline const coco::AnnotationSet& require_annotations(const PipelineInputs& in, DistortionKind kind) {
  if (!in.annotations) throw InapplicableDistortion(std::string(to_string(kind)) + " needs object annotations");
  if (in.annotations->width != in.image.width() || in.annotations->height != in.image.height()) {
    throw DimensionError("annotation size " + std::to_string(in.annotations->width) + "x" +
                         std::to_string(in.annotations->height) + " does not match the image");
  }
  return *in.annotations;
}

inline FarnessMap require_depth(const PipelineInputs& in, DistortionKind kind) {
  if (!in.raw_depth) throw InapplicableDistortion(std::string(to_string(kind)) + " needs a depth map");
  return resolve_farness(*in.raw_depth, in.convention, in.image.width(), in.image.height());
}

inline int require_level(const DistortionSpec& spec) {
  if (!spec.level) throw ParameterError(std::string(to_string(spec.kind)) + " needs an intensity level");
  return *spec.level;
}

inline double number_param(const DistortionSpec& spec, const char* key) {
  auto it = spec.params.find(key);
  if (it == spec.params.end() || !it->is_number()) {
    throw ParameterError(std::string(to_string(spec.kind)) + " needs numeric parameter \"" + key + "\"");
  }
  return it->get<double>();
}
}  // namespace detail

/// Per-object motion parameters after interaction resolution. Crowd regions
/// and static superclasses never move; objects draw from their own streams.
inline std::vector<MotionParams> plan_object_motion(const coco::AnnotationSet& ann, const SceneContext& scene,
                                                    const FarnessMap& depth, std::uint64_t seed,
                                                    const ProfileTable& table) {
  std::vector<MotionParams> params;
  coco::AnnotationSet movers;
  movers.width = ann.width;
  movers.height = ann.height;
  for (const auto& o : ann.objects) {
    if (o.crowd || o.mask.empty()) continue;
    Rng rng(stable_hash(seed, static_cast<std::uint64_t>(o.object_id)));
    params.push_back(object_motion_params(o, scene, depth, rng, table));
    movers.objects.push_back(o);
  }
  return resolve_interactions(params, movers, depth, table);
}

inline PipelineResult apply_distortion(const DistortionSpec& spec, const PipelineInputs& in) {
  const Image& img = in.image;
  const int w = img.width(), h = img.height();
  const ProfileTable fallback_table = in.profiles ? ProfileTable{} : superclass_profiles();
  const ProfileTable& table = in.profiles ? *in.profiles : fallback_table;
  Rng rng(stable_hash(spec.seed, kApplyStream));
  PipelineResult r;

  switch (spec.kind) {
    case DistortionKind::compression:
      r.image = compression_artifact(img, IntensityLevel(detail::require_level(spec)));
      break;
    case DistortionKind::contrast: {
      auto it = spec.params.find("direction");
      if (it == spec.params.end() || !it->is_string()) throw ParameterError("contrast needs a direction");
      const std::string d = it->get<std::string>();
      if (d != "increase" && d != "decrease") throw ParameterError("contrast direction must be increase|decrease");
      r.image = adjust_contrast(img, IntensityLevel(detail::require_level(spec)),
                                d == "increase" ? ContrastDirection::increase : ContrastDirection::decrease);
      break;
    }
    case DistortionKind::gaussian_noise:
      r.image = gaussian_noise(img, IntensityLevel(detail::require_level(spec)), rng);
      break;
    case DistortionKind::global_motion_blur:
      r.image = global_motion_blur(img, IntensityLevel(detail::require_level(spec)),
                                   detail::number_param(spec, "angle"));
      break;
    case DistortionKind::global_defocus_blur:
      r.image = global_defocus_blur(img, IntensityLevel(detail::require_level(spec)));
      break;
    case DistortionKind::fog: {
      FarnessMap depth = detail::require_depth(in, spec.kind);
      ScalarMask fog = in.fog_masks ? load_external_mask(*in.fog_masks, spec.seed, w, h) : synthesize_fog_mask(rng, w, h);
      r.image = apply_fog(img, depth, fog);
      r.mask = std::move(fog);
      r.farness = std::move(depth);
      break;
    }
    case DistortionKind::rain: {
      FarnessMap depth = detail::require_depth(in, spec.kind);
      const double alpha = detail::number_param(spec, "alpha");
      if (!(alpha >= kRainAlphaMin && alpha <= kRainAlphaMax)) throw ParameterError("rain alpha must be in [0.6, 1]");
      ScalarMask base;
      if (in.rain_masks) {
        base = load_external_mask(*in.rain_masks, spec.seed, w, h);
      } else {
        const double density = detail::number_param(spec, "streak_density");
        if (!(density > 0.0 && density <= 1.0)) throw ParameterError("rain streak_density must be in (0, 1]");
        const int count = std::max(1, static_cast<int>(std::lround(density * w * h)));
        base = synthesize_rain_base(rng, w, h, count, detail::number_param(spec, "angle"));
      }
      const StrataMap strata = scene_strata(depth, in.annotations && in.annotations->width == w &&
                                                           in.annotations->height == h
                                                       ? in.annotations
                                                       : nullptr);
      r.image = apply_rain(img, strata, derive_rain_submasks(base), alpha);
      r.mask = std::move(base);
      r.farness = std::move(depth);
      break;
    }
    case DistortionKind::backlight: {
      const auto& ann = detail::require_annotations(in, spec.kind);
      BacklightSpec b;
      b.b1 = detail::number_param(spec, "b1");
      b.b2 = detail::number_param(spec, "b2");
      const auto& g = spec.params.at("gains");
      if (!g.is_array() || g.size() != 3) throw ParameterError("backlight needs three gains");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!g[i].is_number()) throw ParameterError("backlight gains must be numbers");
        b.gains[i] = g[i].get<double>();
      }
      b.target_id = spec.params.at("target_id").get<std::int64_t>();
      const auto* target = ann.find(b.target_id);
      if (!target) throw IntegrityError("backlight target " + std::to_string(b.target_id) + " is not annotated");
      b.target = target->mask;
      r.image = apply_backlight(img, b);
      r.mask = detail::mask_plane(b.target);
      break;
    }
    case DistortionKind::local_defocus: {
      const auto& ann = detail::require_annotations(in, spec.kind);
      FarnessMap depth = detail::require_depth(in, spec.kind);
      const StrataMap strata = classify_strata(depth, focus_threshold(ann, depth));
      r.image = apply_local_defocus(img, strata, defocus_magnitudes(strata));
      Plane blurred_region = strata.indicator(Stratum::middle);
      auto dst = blurred_region.values();
      const auto back = strata.indicator(Stratum::back);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i] * 0.5, back.values()[i]);
      r.mask = std::move(blurred_region);
      r.farness = std::move(depth);
      break;
    }
    case DistortionKind::local_motion_blur: {
      const auto& ann = detail::require_annotations(in, spec.kind);
      FarnessMap depth = in.raw_depth ? resolve_farness(*in.raw_depth, in.convention, w, h)
                                      : FarnessMap::uniform(w, h, 1.0);
      const SceneContext scene = scene_context(in.locale, ann, in.activity_rules);
      const auto params = plan_object_motion(ann, scene, depth, spec.seed, table);
      r.image = apply_local_motion_blur(img, ann, params);
      BitMask moving(w, h);
      for (const auto& p : params) {
        if (p.magnitude >= kMinMotionMagnitude) moving = mask_union(moving, ann.find(p.object_id)->mask);
      }
      r.mask = detail::mask_plane(moving);
      r.farness = std::move(depth);
      break;
    }
  }
  return r;
}

}  // namespace distort_forge
