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

// Batch front-end: `plan`, `apply`, `preview` and `validate`. Everything is
// reachable through run() so the commands can be driven in-process.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "distort_forge/assign.hpp"
#include "distort_forge/coco.hpp"
#include "distort_forge/error.hpp"
#include "distort_forge/imgcore.hpp"
#include "distort_forge/io.hpp"
#include "distort_forge/pipeline.hpp"
#include "distort_forge/random.hpp"

namespace distort_forge::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag combination or missing input; reported with exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string images;
  std::string depth;
  std::string annotations;
  std::string scene_index;
  std::string rain_masks;
  std::string fog_masks;
  std::string out;
  std::string ratios;
  std::string profiles;
  std::string activities;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string depth_convention = "nearness";
  bool overwrite = false;
};

inline std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("DISTORT_FORGE_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("DISTORT_FORGE_SEED is not an unsigned integer");
    return v;
  }
  return 0;
}

inline DepthConvention resolve_convention(const RunConfig& cfg) {
  if (cfg.depth_convention == "nearness") return DepthConvention::nearness;
  if (cfg.depth_convention == "farness") return DepthConvention::farness;
  throw UsageError("--depth-convention must be nearness or farness");
}

/// Depth raster for an image: <stem>.png, <stem>.raw or <stem>.depth.
inline std::optional<fs::path> find_depth_file(const std::string& depth_dir, const std::string& file_name) {
  if (depth_dir.empty()) return std::nullopt;
  const std::string stem = fs::path(file_name).stem().string();
  for (const char* ext : {".png", ".raw", ".depth"}) {
    fs::path p = fs::path(depth_dir) / (stem + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

inline std::string output_name(const std::string& file_name) {
  return fs::path(file_name).stem().string() + ".png";
}

struct Corpus {
  coco::Dataset dataset;
  std::map<std::int64_t, std::size_t> by_id;  // image id -> dataset index
  SceneIndex scenes;
  bool has_scene_index = false;
  std::vector<CorpusImage> images;
  ProfileTable profiles = superclass_profiles();
  ActivityRules activities;

  const coco::AnnotationSet* annotations(std::int64_t id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &dataset.images[it->second];
  }
  Locale locale(std::int64_t id) const {
    auto it = scenes.find(id);
    return it == scenes.end() ? Locale::outdoor : it->second;
  }
};

inline void load_config_tables(const RunConfig& cfg, Corpus& c) {
  if (!cfg.profiles.empty()) c.profiles = load_profiles(io::read_text_file(cfg.profiles));
  if (!cfg.activities.empty()) c.activities = load_activity_rules(io::read_text_file(cfg.activities));
}

/// Parses annotations and the scene index. With `require_images`, images
/// missing from --images are dropped with a warning.
inline Corpus load_corpus(const RunConfig& cfg, std::ostream& err, bool require_images) {
  Corpus c;
  load_config_tables(cfg, c);
  try {
    c.dataset = coco::parse_dataset(io::read_text_file(cfg.annotations));
  } catch (const Error& e) {
    throw IoError(cfg.annotations + ": " + e.what());
  }
  for (const auto& issue : c.dataset.issues) {
    err << "warning: " << cfg.annotations << ": annotation " << issue.annotation_id << " skipped: " << issue.reason
        << "\n";
  }
  if (!cfg.scene_index.empty()) {
    try {
      c.scenes = load_scene_index(io::read_text_file(cfg.scene_index));
    } catch (const Error& e) {
      throw IoError(cfg.scene_index + ": " + e.what());
    }
    c.has_scene_index = true;
    if (c.scenes.empty()) err << "warning: scene index is empty; every image is treated as outdoor\n";
  } else {
    err << "warning: no scene index given; every image is treated as outdoor\n";
  }
  std::size_t unindexed = 0, missing = 0;
  for (std::size_t i = 0; i < c.dataset.images.size(); ++i) {
    const auto& set = c.dataset.images[i];
    c.by_id[set.image_id] = i;
    if (require_images && !cfg.images.empty() && !fs::is_regular_file(fs::path(cfg.images) / set.file_name)) {
      ++missing;
      continue;
    }
    if (c.has_scene_index && !c.scenes.empty() && !c.scenes.count(set.image_id)) ++unindexed;
    CorpusImage img;
    img.image_id = set.image_id;
    img.file_name = set.file_name;
    img.locale = c.locale(set.image_id);
    img.has_depth = find_depth_file(cfg.depth, set.file_name).has_value();
    img.annotations = set;
    c.images.push_back(std::move(img));
  }
  if (missing) err << "warning: " << missing << " annotated image(s) not found under " << cfg.images << "; skipped\n";
  if (unindexed) err << "warning: " << unindexed << " image(s) missing from the scene index; treated as outdoor\n";
  return c;
}

/// Achieved-versus-target table in the layout of the reference distribution.
inline std::string summary_table(const Manifest& m) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "Distortion" << std::right << std::setw(10) << "Images" << std::setw(10)
     << "Ratio" << std::setw(10) << "Target" << "\n";
  for (int k = 0; k < kKindCount; ++k) {
    os << std::left << std::setw(22) << kKindNames[k] << std::right << std::setw(10) << m.summary.counts[k]
       << std::setw(9) << std::fixed << std::setprecision(1) << 100.0 * m.summary.achieved[k] << "%" << std::setw(9)
       << 100.0 * m.ratios[k] << "%\n";
  }
  os << std::left << std::setw(22) << "Total" << std::right << std::setw(10) << m.summary.total << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// plan

inline int cmd_plan(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.annotations.empty()) throw UsageError("plan needs --annotations");
  if (cfg.out.empty()) throw UsageError("plan needs --out (manifest path)");
  const Ratios ratios = cfg.ratios.empty() ? default_ratios() : load_ratios(io::read_text_file(cfg.ratios));
  const Corpus c = load_corpus(cfg, err, true);
  if (c.images.empty()) throw IoError("no images to plan");
  const Manifest m = build_plan(c.images, ratios, resolve_seed(cfg), c.profiles, c.activities);
  io::write_text_file(cfg.out, to_json(m).dump(2) + "\n");
  out << summary_table(m);
  for (int k = 0; k < kKindCount; ++k) {
    if (m.summary.shortfall[k] >= 1.0) {
      err << "warning: " << kKindNames[k] << " is " << std::fixed << std::setprecision(1) << m.summary.shortfall[k]
          << " image(s) short of its quota\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// apply

struct EntryOutcome {
  bool ok = false;
  std::string output;
  std::string error;
  double millis = 0.0;
};

/// Structural checks that make a manifest unusable as a whole.
inline std::vector<Finding> structural_findings(const Manifest& m) {
  std::vector<Finding> f;
  if (m.entries.empty()) f.push_back({"empty", 0, "manifest is empty"});
  std::map<std::int64_t, int> seen;
  for (const auto& e : m.entries) {
    if (++seen[e.image_id] == 2) f.push_back({"coverage", e.image_id, "image appears more than once"});
    if (e.seed != stable_hash(m.global_seed, static_cast<std::uint64_t>(e.image_id))) {
      f.push_back({"seed", e.image_id, "seed does not derive from (global_seed, image_id)"});
    }
    if (auto p = detail::params_problem(e); !p.empty()) f.push_back({"params", e.image_id, p});
  }
  return f;
}

inline EntryOutcome apply_entry(const DistortionSpec& spec, const RunConfig& cfg, const Corpus& c,
                                DepthConvention convention) {
  EntryOutcome r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (spec.file_name.empty()) throw SchemaError("entry has no file_name");
    const fs::path dst = fs::path(cfg.out) / output_name(spec.file_name);
    r.output = dst.filename().string();
    if (fs::exists(dst) && !cfg.overwrite) throw IoError("output exists (use --overwrite): " + dst.string());
    PipelineInputs in;
    in.image = normalize(io::read_image_rgb(fs::path(cfg.images) / spec.file_name));
    if (auto d = find_depth_file(cfg.depth, spec.file_name)) in.raw_depth = io::read_depth_file(*d);
    in.convention = convention;
    in.annotations = c.annotations(spec.image_id);
    in.locale = c.locale(spec.image_id);
    if (!cfg.rain_masks.empty()) in.rain_masks = cfg.rain_masks;
    if (!cfg.fog_masks.empty()) in.fog_masks = cfg.fog_masks;
    in.profiles = &c.profiles;
    in.activity_rules = c.activities;
    const PipelineResult res = apply_distortion(spec, in);
    io::write_png_rgb(dst, denormalize(res.image));
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline bool same_directory(const std::string& a, const std::string& b) {
  std::error_code ec1, ec2;
  const fs::path pa = fs::weakly_canonical(a, ec1), pb = fs::weakly_canonical(b, ec2);
  return !ec1 && !ec2 && pa == pb;
}

inline int cmd_apply(const RunConfig& cfg, const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  if (cfg.images.empty()) throw UsageError("apply needs --images");
  if (cfg.out.empty()) throw UsageError("apply needs --out (output directory)");
  if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (same_directory(cfg.images, cfg.out)) throw UsageError("--out must differ from --images");
  const DepthConvention convention = resolve_convention(cfg);
  const Manifest m = manifest_from_json(io::read_text_file(manifest_path));
  if (const auto f = structural_findings(m); !f.empty()) {
    for (const auto& x : f) err << "error: manifest " << x.code << " (image " << x.image_id << "): " << x.message << "\n";
    return kExitFailure;
  }
  Corpus c;
  if (!cfg.annotations.empty()) {
    c = load_corpus(cfg, err, false);
  } else {
    load_config_tables(cfg, c);
    if (!cfg.scene_index.empty()) c.scenes = load_scene_index(io::read_text_file(cfg.scene_index));
  }
  fs::create_directories(cfg.out);

  std::vector<EntryOutcome> outcomes(m.entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < m.entries.size(); i = next++) outcomes[i] = apply_entry(m.entries[i], cfg, c, convention);
  };
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), m.entries.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!cfg.annotations.empty()) {
    const fs::path copy = fs::path(cfg.out) / fs::path(cfg.annotations).filename();
    fs::copy_file(cfg.annotations, copy, fs::copy_options::overwrite_existing);
  }

  nlohmann::json entries = nlohmann::json::array();
  std::size_t succeeded = 0;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    const auto& o = outcomes[i];
    nlohmann::json j = {{"image_id", e.image_id},
                        {"file_name", e.file_name},
                        {"kind", to_string(e.kind)},
                        {"output", o.output},
                        {"status", o.ok ? "ok" : "failed"},
                        {"millis", o.millis}};
    if (!o.ok) {
      j["error"] = o.error;
      err << "error: image " << e.image_id << " (" << e.file_name << "): " << o.error << "\n";
    }
    succeeded += o.ok;
    entries.push_back(std::move(j));
  }
  const nlohmann::json report = {{"manifest", manifest_path},
                                 {"total", m.entries.size()},
                                 {"succeeded", succeeded},
                                 {"failed", m.entries.size() - succeeded},
                                 {"jobs", cfg.jobs},
                                 {"entries", entries}};
  io::write_text_file(fs::path(cfg.out) / "run_report.json", report.dump(2) + "\n");
  out << succeeded << "/" << m.entries.size() << " image(s) written to " << cfg.out << "\n";
  return succeeded == 0 ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// preview

struct PreviewOptions {
  std::string kind;
  std::optional<int> level;
  std::string params;  // JSON object merged over the drawn parameters
  std::optional<std::int64_t> image_id;
  std::string locale = "outdoor";
};

inline bool is_local(DistortionKind k) {
  return k == DistortionKind::backlight || k == DistortionKind::local_defocus || k == DistortionKind::local_motion_blur;
}

/// Side-by-side panels: original | distorted, plus mask | depth for local
/// kinds.
inline Image8 preview_panels(const Image& original, const PipelineResult& r, bool four_panels) {
  const int w = original.width(), h = original.height(), n = four_panels ? 4 : 2;
  Image8 out;
  out.width = w * n;
  out.height = h;
  out.data.assign(static_cast<std::size_t>(out.width) * h * 3, 0);
  auto put = [&](int panel, int x, int y, double r_, double g, double b) {
    auto* px = &out.data[(static_cast<std::size_t>(y) * out.width + panel * w + x) * 3];
    px[0] = to_byte(r_);
    px[1] = to_byte(g);
    px[2] = to_byte(b);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      put(0, x, y, original.at(x, y, 0), original.at(x, y, 1), original.at(x, y, 2));
      put(1, x, y, r.image.at(x, y, 0), r.image.at(x, y, 1), r.image.at(x, y, 2));
      if (!four_panels) continue;
      const double m = r.mask ? r.mask->at(x, y) : 0.0;
      put(2, x, y, m, m, m);
      const double d = r.farness ? r.farness->at(x, y) : 1.0;
      put(3, x, y, d, d, d);
    }
  }
  return out;
}

inline int cmd_preview(const RunConfig& cfg, const PreviewOptions& opt, std::ostream& out) {
  if (cfg.images.empty()) throw UsageError("preview needs --images (path of one image)");
  if (cfg.out.empty()) throw UsageError("preview needs --out (PNG path)");
  const auto kind = parse_kind(opt.kind);
  if (!kind) throw UsageError("unknown --kind \"" + opt.kind + "\"");
  const auto locale = parse_locale(opt.locale);
  if (!locale) throw UsageError("--locale must be indoor or outdoor");
  if (needs_depth(*kind) && cfg.depth.empty()) throw UsageError(std::string(to_string(*kind)) + " needs --depth");
  if (needs_annotations(*kind) && cfg.annotations.empty()) {
    throw UsageError(std::string(to_string(*kind)) + " needs --annotations");
  }

  Corpus c;
  load_config_tables(cfg, c);
  CorpusImage img;
  img.file_name = fs::path(cfg.images).filename().string();
  img.locale = *locale;
  if (!cfg.annotations.empty()) {
    c.dataset = coco::parse_dataset(io::read_text_file(cfg.annotations));
    const coco::AnnotationSet* set = nullptr;
    for (const auto& s : c.dataset.images) {
      if (opt.image_id ? s.image_id == *opt.image_id : s.file_name == img.file_name) set = &s;
    }
    if (!set) throw UsageError("--annotations has no entry for this image (pass --image-id)");
    img.image_id = set->image_id;
    img.annotations = *set;
    c.by_id[set->image_id] = static_cast<std::size_t>(set - c.dataset.images.data());
  } else if (opt.image_id) {
    img.image_id = *opt.image_id;
  }

  DistortionSpec spec;
  spec.image_id = img.image_id;
  spec.file_name = img.file_name;
  spec.kind = *kind;
  spec.seed = stable_hash(resolve_seed(cfg), static_cast<std::uint64_t>(img.image_id));
  draw_parameters(spec, img);
  if (opt.level) {
    if (!is_global(*kind)) throw UsageError("--level applies to global kinds only");
    spec.level = *opt.level;
  }
  if (!opt.params.empty()) {
    nlohmann::json extra;
    try {
      extra = nlohmann::json::parse(opt.params);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("--params is not valid JSON: ") + e.what());
    }
    if (!extra.is_object()) throw UsageError("--params must be a JSON object");
    spec.params.update(extra);
  }

  PipelineInputs in;
  in.image = normalize(io::read_image_rgb(cfg.images));
  if (!cfg.depth.empty()) in.raw_depth = io::read_depth_file(cfg.depth);
  in.convention = resolve_convention(cfg);
  in.annotations = c.annotations(img.image_id);
  in.locale = *locale;
  if (!cfg.rain_masks.empty()) in.rain_masks = cfg.rain_masks;
  if (!cfg.fog_masks.empty()) in.fog_masks = cfg.fog_masks;
  in.profiles = &c.profiles;
  in.activity_rules = c.activities;
  const PipelineResult r = apply_distortion(spec, in);
  io::write_png_rgb(cfg.out, preview_panels(in.image, r, is_local(*kind)));
  nlohmann::json j = {{"kind", to_string(spec.kind)}, {"params", spec.params}, {"seed", spec.seed}};
  if (spec.level) j["level"] = *spec.level;
  out << j.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

inline int cmd_validate(const RunConfig& cfg, const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  if (cfg.annotations.empty()) throw UsageError("validate needs --annotations");
  Manifest m;
  try {
    m = manifest_from_json(io::read_text_file(manifest_path));
  } catch (const Error& e) {
    err << "error: " << manifest_path << ": " << e.what() << "\n";
    return kExitFailure;
  }
  const Corpus c = load_corpus(cfg, err, false);
  const ValidationReport report = validate_manifest(m, c.images, c.profiles, c.activities);
  const std::string text = report.to_json().dump(2) + "\n";
  if (!cfg.out.empty()) {
    io::write_text_file(cfg.out, text);
  } else {
    out << text;
  }
  for (const auto& v : report.violations) {
    err << "violation: " << v.code << " (image " << v.image_id << "): " << v.message << "\n";
  }
  return report.ok() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware image distortion for object detection corpora", "distort_forge"};
  app.require_subcommand(1);
  RunConfig cfg;
  PreviewOptions preview;
  std::string manifest;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--images", cfg.images, "Image directory (preview: one image file)");
    sub->add_option("--depth", cfg.depth, "Depth directory (preview: one depth file)");
    sub->add_option("--annotations", cfg.annotations, "COCO annotations JSON");
    sub->add_option("--scene-index", cfg.scene_index, "CSV image_id,locale");
    sub->add_option("--profiles", cfg.profiles, "Superclass motion profile overrides (JSON)");
    sub->add_option("--activities", cfg.activities, "Activity category list overrides (JSON)");
    sub->add_option("--seed", seed, "Global seed (fallback: DISTORT_FORGE_SEED)");
  };
  auto add_render = [&](CLI::App* sub) {
    sub->add_option("--rain-masks", cfg.rain_masks, "Directory of grayscale rain masks");
    sub->add_option("--fog-masks", cfg.fog_masks, "Directory of grayscale fog masks");
    sub->add_option("--depth-convention", cfg.depth_convention, "nearness|farness")->check(CLI::IsMember({"nearness", "farness"}));
  };

  CLI::App* plan = app.add_subcommand("plan", "Assign one distortion per image and write the manifest");
  add_common(plan);
  plan->add_option("--out", cfg.out, "Manifest path")->required();
  plan->add_option("--ratios", cfg.ratios, "Ratio override (JSON kind -> fraction)");

  CLI::App* apply = app.add_subcommand("apply", "Render a manifest into an output directory");
  apply->add_option("manifest", manifest, "Manifest JSON")->required();
  add_common(apply);
  add_render(apply);
  apply->add_option("--out", cfg.out, "Output directory")->required();
  apply->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  apply->add_flag("--overwrite", cfg.overwrite, "Replace existing outputs");

  CLI::App* prev = app.add_subcommand("preview", "Render one distortion as a side-by-side PNG");
  add_common(prev);
  add_render(prev);
  prev->add_option("--out", cfg.out, "Output PNG")->required();
  prev->add_option("--kind", preview.kind, "Distortion kind")->required();
  prev->add_option("--level", preview.level, "Intensity level 1-5")->check(CLI::Range(1, 5));
  prev->add_option("--params", preview.params, "JSON object of parameter overrides");
  prev->add_option("--image-id", preview.image_id, "Annotation image id");
  prev->add_option("--locale", preview.locale, "indoor|outdoor");

  CLI::App* val = app.add_subcommand("validate", "Check a manifest against the corpus");
  val->add_option("manifest", manifest, "Manifest JSON")->required();
  add_common(val);
  val->add_option("--out", cfg.out, "Report path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  for (const CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) cfg.seed = seed;
  }

  try {
    if (*plan) return cmd_plan(cfg, out, err);
    if (*apply) return cmd_apply(cfg, manifest, out, err);
    if (*prev) return cmd_preview(cfg, preview, out);
    return cmd_validate(cfg, manifest, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace distort_forge::cli
