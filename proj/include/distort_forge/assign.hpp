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

// Corpus planner: scene context per image, applicability rules, the
// deterministic quota-deficit assignment of one distortion per image, and
// manifest validation.

#include <algorithm>
#include <array>
#include <bitset>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "distort_forge/atmos.hpp"
#include "distort_forge/coco.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/localblur.hpp"
#include "distort_forge/photometric.hpp"
#include "distort_forge/random.hpp"
#include "distort_forge/scene.hpp"

namespace distort_forge {

// Table order; ties in the planner resolve toward the lower index.
enum class DistortionKind : int {
  compression = 0,
  contrast,
  gaussian_noise,
  global_motion_blur,
  global_defocus_blur,
  fog,
  rain,
  backlight,
  local_defocus,
  local_motion_blur,
};

inline constexpr int kKindCount = 10;

inline constexpr std::array<DistortionKind, kKindCount> kAllKinds = {
    DistortionKind::compression,         DistortionKind::contrast, DistortionKind::gaussian_noise,
    DistortionKind::global_motion_blur,  DistortionKind::global_defocus_blur,
    DistortionKind::fog,                 DistortionKind::rain,     DistortionKind::backlight,
    DistortionKind::local_defocus,       DistortionKind::local_motion_blur};

inline constexpr std::array<std::string_view, kKindCount> kKindNames = {
    "compression", "contrast",  "gaussian_noise", "global_motion_blur", "global_defocus_blur",
    "fog",         "rain",      "backlight",      "local_defocus",      "local_motion_blur"};

inline std::string_view to_string(DistortionKind k) { return kKindNames[static_cast<int>(k)]; }

inline std::optional<DistortionKind> parse_kind(std::string_view s) {
  for (int i = 0; i < kKindCount; ++i)
    if (kKindNames[i] == s) return static_cast<DistortionKind>(i);
  if (s == "compression_artifact") return DistortionKind::compression;
  if (s == "contrast_change") return DistortionKind::contrast;
  if (s == "local_backlight") return DistortionKind::backlight;
  if (s == "local_defocus_blur") return DistortionKind::local_defocus;
  return std::nullopt;
}

inline bool is_global(DistortionKind k) { return static_cast<int>(k) <= static_cast<int>(DistortionKind::global_defocus_blur); }

/// Kinds that read the depth map.
inline bool needs_depth(DistortionKind k) {
  return k == DistortionKind::fog || k == DistortionKind::rain || k == DistortionKind::local_defocus;
}

/// Kinds that read object annotations.
inline bool needs_annotations(DistortionKind k) {
  return k == DistortionKind::backlight || k == DistortionKind::local_defocus || k == DistortionKind::local_motion_blur;
}

using KindSet = std::bitset<kKindCount>;
using Ratios = std::array<double, kKindCount>;

/// Image counts of the reference distribution, in table order.
inline constexpr std::array<int, kKindCount> kReferenceCounts = {17989, 18038, 18055, 18018, 17792,
                                                                 787,   845,   296,   7061,  18625};

/// Reference fractions (counts over their total, so they sum to exactly 1).
inline Ratios default_ratios() {
  double total = 0.0;
  for (int c : kReferenceCounts) total += c;
  Ratios r{};
  for (int i = 0; i < kKindCount; ++i) r[i] = kReferenceCounts[i] / total;
  return r;
}

inline void check_ratios(const Ratios& r) {
  double sum = 0.0;
  for (double v : r) {
    if (!std::isfinite(v) || v < 0.0) throw ParameterError("ratios must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ParameterError("ratios must sum to 1 (got " + std::to_string(sum) + ")");
}

/// Ratio override file: JSON map kind -> fraction. Kinds left out get 0.
inline Ratios load_ratios(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("ratio file: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {  // e.g. numbers out of range
    throw SchemaError(std::string("ratio file: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("ratio file must be a JSON object");
  Ratios r{};
  for (const auto& [key, v] : doc.items()) {
    auto k = parse_kind(key);
    if (!k) throw SchemaError("ratio file: unknown distortion kind \"" + key + "\"");
    if (!v.is_number()) throw SchemaError("ratio file: \"" + key + "\" must be a number");
    r[static_cast<int>(*k)] = v.get<double>();
  }
  check_ratios(r);
  return r;
}

// ---------------------------------------------------------------------------
// Scene index and activity tags

using SceneIndex = std::map<std::int64_t, Locale>;

/// CSV `image_id,locale`, one record per line. Blank lines and an optional
/// header line are skipped.
inline SceneIndex load_scene_index(std::string_view text) {
  SceneIndex index;
  std::size_t line_no = 0, pos = 0;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw SchemaError("scene index line " + std::to_string(line_no) + ": expected image_id,locale");
    }
    const std::string_view id_text = trim(line.substr(0, comma));
    const std::string_view locale_text = trim(line.substr(comma + 1));
    std::int64_t id = 0;
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
      if (index.empty() && id_text == "image_id") continue;  // header
      throw SchemaError("scene index line " + std::to_string(line_no) + ": bad image id \"" + std::string(id_text) + "\"");
    }
    const auto locale = parse_locale(locale_text);
    if (!locale) {
      throw SchemaError("scene index line " + std::to_string(line_no) + ": unknown locale \"" +
                        std::string(locale_text) + "\"");
    }
    if (!index.emplace(id, *locale).second) throw IntegrityError("scene index: duplicate image id " + std::to_string(id));
    if (end == text.size()) break;
  }
  return index;
}

/// Category names that trigger each activity tag.
struct ActivityRules {
  std::vector<std::string> ski{"skis", "snowboard"};
  std::vector<std::string> surf{"surfboard"};
  std::vector<std::string> skate{"skateboard"};
  std::vector<std::string> sport{"sports ball", "tennis racket", "baseball bat", "baseball glove", "frisbee", "kite"};
  std::vector<std::string> rider{"person"};
  std::vector<std::string> mount{"horse", "bicycle", "motorcycle"};
};

/// Overrides from JSON: {"ski": [...], "surf": [...], "skate": [...],
/// "sport": [...], "rider": [...], "mount": [...]}. Missing keys keep defaults.
inline ActivityRules load_activity_rules(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("activity rules: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {  // e.g. numbers out of range
    throw SchemaError(std::string("activity rules: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("activity rules must be a JSON object");
  ActivityRules r;
  const std::pair<const char*, std::vector<std::string>*> slots[] = {
      {"ski", &r.ski}, {"surf", &r.surf}, {"skate", &r.skate}, {"sport", &r.sport}, {"rider", &r.rider}, {"mount", &r.mount}};
  for (const auto& [key, v] : doc.items()) {
    auto it = std::find_if(std::begin(slots), std::end(slots), [&](const auto& s) { return key == s.first; });
    if (it == std::end(slots)) throw SchemaError("activity rules: unknown key \"" + key + "\"");
    if (!v.is_array()) throw SchemaError("activity rules: \"" + key + "\" must be an array of names");
    it->second->clear();
    for (const auto& n : v) {
      if (!n.is_string()) throw SchemaError("activity rules: \"" + key + "\" must be an array of names");
      it->second->push_back(n.get<std::string>());
    }
  }
  return r;
}

inline ActivitySet classify_activity(const coco::AnnotationSet& ann, const ActivityRules& rules = {}) {
  std::set<std::string_view> present;
  for (const auto& o : ann.objects) present.insert(o.category);
  auto any = [&](const std::vector<std::string>& names) {
    return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return present.count(n) > 0; });
  };
  ActivitySet s;
  if (any(rules.ski)) s.add(Activity::ski);
  if (any(rules.surf)) s.add(Activity::surf);
  if (any(rules.skate)) s.add(Activity::skate);
  if (any(rules.sport)) s.add(Activity::sport);
  if (any(rules.rider) && any(rules.mount)) s.add(Activity::riding);
  return s;
}

inline SceneContext scene_context(Locale locale, const coco::AnnotationSet& ann, const ActivityRules& rules = {}) {
  return {locale, classify_activity(ann, rules)};
}

inline KindSet applicable_kinds(const SceneContext& scene, const coco::AnnotationSet& ann, bool has_depth,
                                const ProfileTable& table = superclass_profiles()) {
  KindSet k;
  for (int i = 0; i <= static_cast<int>(DistortionKind::global_defocus_blur); ++i) k.set(i);
  const bool outdoor = scene.locale == Locale::outdoor;
  if (outdoor && has_depth) {
    k.set(static_cast<int>(DistortionKind::fog));
    k.set(static_cast<int>(DistortionKind::rain));
  }
  if (has_depth && !ann.objects.empty()) k.set(static_cast<int>(DistortionKind::local_defocus));
  const bool mover = std::any_of(ann.objects.begin(), ann.objects.end(), [&](const coco::ObjectAnnotation& o) {
    return !o.crowd && !table.lookup(o.supercategory).is_static();
  });
  if (mover) k.set(static_cast<int>(DistortionKind::local_motion_blur));
  const bool solid = std::any_of(ann.objects.begin(), ann.objects.end(),
                                 [](const coco::ObjectAnnotation& o) { return !o.crowd; });
  if (solid) k.set(static_cast<int>(DistortionKind::backlight));
  return k;
}

// ---------------------------------------------------------------------------
// Plan

struct CorpusImage {
  std::int64_t image_id = 0;
  std::string file_name;
  Locale locale = Locale::outdoor;
  bool has_depth = false;
  coco::AnnotationSet annotations;
};

struct DistortionSpec {
  std::int64_t image_id = 0;
  std::string file_name;
  DistortionKind kind = DistortionKind::compression;
  std::optional<int> level;  // global kinds only
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;

  bool operator==(const DistortionSpec&) const = default;
};

struct PlanSummary {
  std::size_t total = 0;
  std::array<std::size_t, kKindCount> counts{};
  std::array<double, kKindCount> achieved{};
  std::array<double, kKindCount> shortfall{};  // images below quota, >= 0
};

struct Manifest {
  std::uint64_t global_seed = 0;
  Ratios ratios{};
  std::vector<DistortionSpec> entries;  // sorted by image_id
  PlanSummary summary;
};

/// Highest level a scene may receive.
inline int level_cap(Locale locale) { return locale == Locale::indoor ? 3 : 5; }

inline constexpr double kRainStreakDensity = 1.0 / 600.0;  // streaks per pixel

/// Kind-specific parameters drawn from the image's own seed.
inline void draw_parameters(DistortionSpec& spec, const CorpusImage& img) {
  Rng rng(spec.seed);
  using nlohmann::json;
  if (is_global(spec.kind)) spec.level = static_cast<int>(rng.uniform_int(1, level_cap(img.locale)));
  switch (spec.kind) {
    case DistortionKind::contrast:
      spec.params["direction"] = rng.uniform() < 0.5 ? "increase" : "decrease";
      break;
    case DistortionKind::global_motion_blur:
      spec.params["angle"] = rng.uniform(0.0, 180.0);
      break;
    case DistortionKind::fog:
      spec.params["alpha"] = kFogAlpha;
      break;
    case DistortionKind::rain:
      spec.params["alpha"] = rng.uniform(kRainAlphaMin, kRainAlphaMax);
      spec.params["angle"] = 90.0 + rng.uniform(-20.0, 20.0);
      spec.params["streak_density"] = kRainStreakDensity;
      break;
    case DistortionKind::backlight: {
      const BacklightSpec b = sample_backlight_spec(img.annotations, rng);
      spec.params["target_id"] = b.target_id;
      spec.params["b1"] = b.b1;
      spec.params["b2"] = b.b2;
      spec.params["gains"] = json::array({b.gains[0], b.gains[1], b.gains[2]});
      break;
    }
    default:
      break;
  }
}

inline void fill_summary(Manifest& m) {
  PlanSummary s;
  s.total = m.entries.size();
  for (const auto& e : m.entries) ++s.counts[static_cast<int>(e.kind)];
  for (int k = 0; k < kKindCount; ++k) {
    s.achieved[k] = s.total ? static_cast<double>(s.counts[k]) / static_cast<double>(s.total) : 0.0;
    s.shortfall[k] = std::max(0.0, m.ratios[k] * static_cast<double>(s.total) - static_cast<double>(s.counts[k]));
  }
  m.summary = s;
}

/// Assigns one distortion per image. Images are visited in seed order; each
/// takes the applicable kind furthest below its quota (ratio * N).
inline Manifest build_plan(const std::vector<CorpusImage>& corpus, const Ratios& ratios, std::uint64_t global_seed,
                           const ProfileTable& table = superclass_profiles(), const ActivityRules& rules = {}) {
  check_ratios(ratios);
  if (corpus.empty()) throw ParameterError("build_plan: empty corpus");
  std::set<std::int64_t> ids;
  for (const auto& c : corpus)
    if (!ids.insert(c.image_id).second) throw IntegrityError("build_plan: duplicate image id " + std::to_string(c.image_id));

  struct Visit {
    std::uint64_t seed;
    std::int64_t image_id;
    std::size_t index;
  };
  std::vector<Visit> order;
  order.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto id = corpus[i].image_id;
    order.push_back({stable_hash(global_seed, static_cast<std::uint64_t>(id)), id, i});
  }
  std::sort(order.begin(), order.end(), [](const Visit& a, const Visit& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.image_id < b.image_id;
  });

  const double n = static_cast<double>(corpus.size());
  std::array<std::size_t, kKindCount> assigned{};
  Manifest m;
  m.global_seed = global_seed;
  m.ratios = ratios;
  m.entries.reserve(corpus.size());
  for (const auto& v : order) {
    const CorpusImage& img = corpus[v.index];
    const KindSet ok = applicable_kinds(scene_context(img.locale, img.annotations, rules), img.annotations,
                                        img.has_depth, table);
    int best = -1;
    double best_deficit = 0.0;
    for (int k = 0; k < kKindCount; ++k) {
      if (!ok.test(k)) continue;
      const double deficit = ratios[k] * n - static_cast<double>(assigned[k]);
      if (best < 0 || deficit > best_deficit) {
        best = k;
        best_deficit = deficit;
      }
    }
    ++assigned[best];
    DistortionSpec spec;
    spec.image_id = img.image_id;
    spec.file_name = img.file_name;
    spec.kind = static_cast<DistortionKind>(best);
    spec.seed = v.seed;
    draw_parameters(spec, img);
    m.entries.push_back(std::move(spec));
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const DistortionSpec& a, const DistortionSpec& b) { return a.image_id < b.image_id; });
  fill_summary(m);
  return m;
}

// ---------------------------------------------------------------------------
// Manifest JSON

inline nlohmann::json to_json(const Manifest& m) {
  using nlohmann::json;
  json ratios = json::object();
  for (int k = 0; k < kKindCount; ++k) ratios[std::string(kKindNames[k])] = m.ratios[k];
  json entries = json::array();
  for (const auto& e : m.entries) {
    json j = {{"image_id", e.image_id}, {"file_name", e.file_name}, {"kind", to_string(e.kind)},
              {"params", e.params},     {"seed", e.seed}};
    if (e.level) j["level"] = *e.level;
    entries.push_back(std::move(j));
  }
  json counts = json::object(), achieved = json::object(), shortfall = json::object();
  for (int k = 0; k < kKindCount; ++k) {
    const std::string name(kKindNames[k]);
    counts[name] = m.summary.counts[k];
    achieved[name] = m.summary.achieved[k];
    shortfall[name] = m.summary.shortfall[k];
  }
  return {{"global_seed", m.global_seed},
          {"ratios", ratios},
          {"entries", entries},
          {"summary", {{"total", m.summary.total}, {"counts", counts}, {"achieved", achieved}, {"shortfall", shortfall}}}};
}

inline Manifest manifest_from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), e.byte);
  } catch (const json::exception& e) {  // e.g. numbers out of range
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw SchemaError("manifest must be a JSON object");
    Manifest m;
    const auto& seed = coco::detail::member(doc, "global_seed", "manifest");
    if (!seed.is_number_unsigned()) throw SchemaError("manifest: global_seed must be an unsigned integer");
    m.global_seed = seed.get<std::uint64_t>();
    m.ratios = default_ratios();
    if (auto it = doc.find("ratios"); it != doc.end()) {
      if (!it->is_object()) throw SchemaError("manifest: ratios must be an object");
      m.ratios = {};
      for (const auto& [key, v] : it->items()) {
        auto k = parse_kind(key);
        if (!k || !v.is_number()) throw SchemaError("manifest: bad ratio entry \"" + key + "\"");
        m.ratios[static_cast<int>(*k)] = v.get<double>();
      }
    }
    const auto& entries = coco::detail::member(doc, "entries", "manifest");
    if (!entries.is_array()) throw SchemaError("manifest: entries must be an array");
    for (const auto& e : entries) {
      if (!e.is_object()) throw SchemaError("manifest: entry must be an object");
      DistortionSpec s;
      s.image_id = coco::detail::as_id(coco::detail::member(e, "image_id", "entry"), "entry image_id");
      s.file_name = coco::detail::as_string_or(e, "file_name", "");
      const auto& kind = coco::detail::member(e, "kind", "entry");
      if (!kind.is_string()) throw SchemaError("manifest: kind must be a string");
      auto k = parse_kind(kind.get<std::string>());
      if (!k) throw SchemaError("manifest: unknown kind \"" + kind.get<std::string>() + "\"");
      s.kind = *k;
      if (auto it = e.find("level"); it != e.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw SchemaError("manifest: level must be an integer");
        const auto lv = it->get<std::int64_t>();
        if (lv < -1000 || lv > 1000) throw SchemaError("manifest: level out of range");
        s.level = static_cast<int>(lv);
      }
      if (auto it = e.find("params"); it != e.end()) {
        if (!it->is_object()) throw SchemaError("manifest: params must be an object");
        s.params = *it;
      }
      const auto& sd = coco::detail::member(e, "seed", "entry");
      if (!sd.is_number_unsigned()) throw SchemaError("manifest: seed must be an unsigned integer");
      s.seed = sd.get<std::uint64_t>();
      m.entries.push_back(std::move(s));
    }
    fill_summary(m);
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation

struct Finding {
  std::string code;  // coverage | applicability | seed | level | params | empty
  std::int64_t image_id = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> violations;
  std::array<double, kKindCount> deviation{};  // achieved - target, fractions
  std::size_t entries = 0;

  bool ok() const noexcept { return violations.empty(); }

  nlohmann::json to_json() const {
    using nlohmann::json;
    json v = json::array();
    for (const auto& f : violations) v.push_back({{"code", f.code}, {"image_id", f.image_id}, {"message", f.message}});
    json d = json::object();
    for (int k = 0; k < kKindCount; ++k) d[std::string(kKindNames[k])] = deviation[k];
    return {{"ok", ok()}, {"entries", entries}, {"violations", v}, {"deviation", d}};
  }
};

namespace detail {
inline bool is_number_in(const nlohmann::json& p, const char* key, double lo, double hi) {
  auto it = p.find(key);
  return it != p.end() && it->is_number() && it->get<double>() >= lo && it->get<double>() <= hi;
}

/// Empty string when the parameters are complete for the kind.
inline std::string params_problem(const DistortionSpec& s) {
  const auto& p = s.params;
  if (!p.is_object()) return "params must be an object";
  switch (s.kind) {
    case DistortionKind::contrast: {
      auto it = p.find("direction");
      if (it == p.end() || !it->is_string() || (*it != "increase" && *it != "decrease")) {
        return "contrast needs direction increase|decrease";
      }
      return {};
    }
    case DistortionKind::global_motion_blur:
      return is_number_in(p, "angle", 0.0, 180.0) ? "" : "global_motion_blur needs angle in [0,180]";
    case DistortionKind::fog:
      return is_number_in(p, "alpha", kFogAlpha, kFogAlpha) ? "" : "fog needs alpha 0.95";
    case DistortionKind::rain:
      if (!is_number_in(p, "alpha", kRainAlphaMin, kRainAlphaMax)) return "rain needs alpha in [0.6,1]";
      if (!is_number_in(p, "angle", -360.0, 360.0)) return "rain needs a finite angle";
      if (!is_number_in(p, "streak_density", 1e-9, 1.0)) return "rain needs streak_density in (0,1]";
      return {};
    case DistortionKind::backlight: {
      if (!p.contains("target_id") || !p["target_id"].is_number_integer()) return "backlight needs target_id";
      if (!is_number_in(p, "b1", 0.0, 1.0) || !is_number_in(p, "b2", 0.0, 1.0)) return "backlight needs b1, b2";
      auto it = p.find("gains");
      if (it == p.end() || !it->is_array() || it->size() != 3) return "backlight needs three gains";
      for (const auto& g : *it)
        if (!g.is_number()) return "backlight gains must be numbers";
      return {};
    }
    default:
      return {};
  }
}
}  // namespace detail

/// Checks coverage, applicability, seed derivation, levels and parameter
/// completeness; records achieved-minus-target deviation per kind.
inline ValidationReport validate_manifest(const Manifest& m, const std::vector<CorpusImage>& corpus,
                                          const ProfileTable& table = superclass_profiles(),
                                          const ActivityRules& rules = {}) {
  ValidationReport r;
  r.entries = m.entries.size();
  if (m.entries.empty()) {
    r.violations.push_back({"empty", 0, "manifest is empty"});
    return r;
  }
  std::map<std::int64_t, const CorpusImage*> by_id;
  for (const auto& c : corpus) by_id[c.image_id] = &c;
  std::map<std::int64_t, int> seen;
  std::array<std::size_t, kKindCount> counts{};
  for (const auto& e : m.entries) {
    ++counts[static_cast<int>(e.kind)];
    if (++seen[e.image_id] == 2) {
      r.violations.push_back({"coverage", e.image_id, "image appears more than once"});
    }
    if (e.seed != stable_hash(m.global_seed, static_cast<std::uint64_t>(e.image_id))) {
      r.violations.push_back({"seed", e.image_id, "seed does not derive from (global_seed, image_id)"});
    }
    if (auto problem = detail::params_problem(e); !problem.empty()) {
      r.violations.push_back({"params", e.image_id, problem});
    }
    auto it = by_id.find(e.image_id);
    if (it == by_id.end()) {
      r.violations.push_back({"coverage", e.image_id, "image is not part of the corpus"});
      continue;
    }
    const CorpusImage& img = *it->second;
    const KindSet ok = applicable_kinds(scene_context(img.locale, img.annotations, rules), img.annotations,
                                        img.has_depth, table);
    if (!ok.test(static_cast<int>(e.kind))) {
      r.violations.push_back({"applicability", e.image_id, std::string(to_string(e.kind)) + " is not applicable"});
    }
    if (is_global(e.kind)) {
      if (!e.level || *e.level < 1 || *e.level > level_cap(img.locale)) {
        r.violations.push_back({"level", e.image_id, "level missing or above the scene cap"});
      }
    } else if (e.level) {
      r.violations.push_back({"level", e.image_id, "local and atmospheric kinds take no level"});
    }
  }
  for (const auto& c : corpus) {
    if (!seen.count(c.image_id)) r.violations.push_back({"coverage", c.image_id, "image has no manifest entry"});
  }
  for (int k = 0; k < kKindCount; ++k) {
    r.deviation[k] = static_cast<double>(counts[k]) / static_cast<double>(m.entries.size()) - m.ratios[k];
  }
  return r;
}

}  // namespace distort_forge
