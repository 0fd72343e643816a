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

// COCO detection ground truth: categories, boxes, polygon and RLE
// segmentations, plus the mask geometry the local distortions need.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "distort_forge/error.hpp"
#include "distort_forge/image.hpp"
#include "distort_forge/mask.hpp"

namespace distort_forge::coco {

/// (x, y, w, h) in pixels, top-left origin.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return std::max(0.0, w) * std::max(0.0, h); }
  bool operator==(const BBox&) const = default;
};

struct ObjectAnnotation {
  std::int64_t object_id = 0;
  std::int64_t category_id = 0;
  std::string category;
  std::string supercategory;
  BBox bbox;
  BitMask mask;
  bool crowd = false;
};

struct AnnotationSet {
  std::int64_t image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<ObjectAnnotation> objects;

  const ObjectAnnotation* find(std::int64_t object_id) const {
    for (const auto& o : objects)
      if (o.object_id == object_id) return &o;
    return nullptr;
  }
};

/// An annotation that was skipped because its segmentation could not be used.
struct AnnotationIssue {
  std::int64_t annotation_id = 0;
  std::int64_t image_id = 0;
  std::string reason;
};

struct Dataset {
  std::vector<AnnotationSet> images;  // in document order
  std::vector<AnnotationIssue> issues;

  const AnnotationSet* find(std::int64_t image_id) const {
    for (const auto& s : images)
      if (s.image_id == image_id) return &s;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Run-length encoding

/// Decodes column-major runs (background first) into a height x width mask.
inline BitMask decode_rle(std::span<const std::int64_t> counts, int height, int width) {
  if (height < 0 || width < 0) throw DimensionError("decode_rle: negative size");
  const std::int64_t total = static_cast<std::int64_t>(height) * width;
  std::int64_t sum = 0;
  for (auto c : counts) {
    if (c < 0) throw LengthError("decode_rle: negative run length");
    if (c > total - sum) throw LengthError("decode_rle: run lengths exceed " + std::to_string(total) + " pixels");
    sum += c;
  }
  if (sum != total) {
    throw LengthError("decode_rle: run lengths sum to " + std::to_string(sum) + ", expected " + std::to_string(total));
  }
  // Bounding box of the foreground runs first, so only that window is stored.
  int x0 = width, y0 = height, x1 = -1, y1 = -1;
  std::int64_t pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::int64_t len = counts[i];
    if (i % 2 == 1 && len > 0) {
      const std::int64_t first = pos, last = pos + len - 1;
      const int cf = static_cast<int>(first / height), cl = static_cast<int>(last / height);
      x0 = std::min(x0, cf);
      x1 = std::max(x1, cl);
      if (cf == cl) {
        y0 = std::min(y0, static_cast<int>(first % height));
        y1 = std::max(y1, static_cast<int>(last % height));
      } else {
        y0 = 0;
        y1 = height - 1;
      }
    }
    pos += len;
  }
  if (x1 < 0) return BitMask(width, height);
  const Rect w{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w.width) * w.height, 0);
  pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::int64_t len = counts[i];
    if (i % 2 == 1) {
      for (std::int64_t k = pos; k < pos + len; ++k) {
        const int x = static_cast<int>(k / height), y = static_cast<int>(k % height);
        bits[static_cast<std::size_t>(y - w.y) * w.width + (x - w.x)] = 1;
      }
    }
    pos += len;
  }
  return BitMask(width, height, w, bits);
}

/// Parses COCO's compressed RLE string (6-bit groups offset by '0', with
/// counts after the second stored as differences) into run lengths.
inline std::vector<std::int64_t> decode_rle_string(std::string_view s) {
  std::vector<std::int64_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw SchemaError("compressed RLE: truncated value");
      const int c = static_cast<unsigned char>(s[p]) - 48;
      if (c < 0 || c > 63) throw SchemaError("compressed RLE: invalid character");
      if (k >= 12) throw SchemaError("compressed RLE: value too long");
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= static_cast<std::int64_t>(-1) * (std::int64_t{1} << (5 * k));
    }
    if (counts.size() > 2 && __builtin_add_overflow(x, counts[counts.size() - 2], &x)) {
      throw SchemaError("compressed RLE: run length overflows");
    }
    counts.push_back(x);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Polygons

/// Even-odd fill of a flat x,y vertex list; a pixel is set when its center
/// (x+0.5, y+0.5) is inside. Parts outside the raster are clipped.
inline BitMask rasterize_polygon(std::span<const double> points, int width, int height) {
  if (points.size() % 2 != 0) throw GeometryError("polygon has an odd coordinate count");
  if (points.size() < 6) throw GeometryError("polygon needs at least 3 vertices");
  for (double v : points)
    if (!std::isfinite(v)) throw GeometryError("polygon coordinate is not finite");
  const std::size_t n = points.size() / 2;
  double ymin = points[1], ymax = points[1], xmin = points[0], xmax = points[0];
  for (std::size_t i = 0; i < n; ++i) {
    xmin = std::min(xmin, points[2 * i]);
    xmax = std::max(xmax, points[2 * i]);
    ymin = std::min(ymin, points[2 * i + 1]);
    ymax = std::max(ymax, points[2 * i + 1]);
  }
  const Rect raster{0, 0, width, height};
  const auto lo = [](double v) { return static_cast<int>(std::clamp(std::floor(v) - 1, -1.0, 1e9)); };
  const auto hi = [](double v) { return static_cast<int>(std::clamp(std::ceil(v) + 1, -1.0, 1e9)); };
  const Rect w = Rect{lo(xmin), lo(ymin), hi(xmax) - lo(xmin), hi(ymax) - lo(ymin)}.intersect(raster);
  if (w.empty()) return BitMask(width, height);

  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w.width) * w.height, 0);
  std::vector<double> xs;
  for (int y = w.y; y < w.bottom(); ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const double xa = points[2 * i], ya = points[2 * i + 1];
      const double xb = points[2 * j], yb = points[2 * j + 1];
      if ((ya <= yc) != (yb <= yc)) xs.push_back(xa + (yc - ya) * (xb - xa) / (yb - ya));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // centers x + 0.5 in [xs[k], xs[k+1])
      const double first = std::ceil(xs[k] - 0.5), last = std::ceil(xs[k + 1] - 0.5) - 1;
      const int a = static_cast<int>(std::max<double>(first, w.x));
      const int b = static_cast<int>(std::min<double>(last, w.right() - 1));
      for (int x = a; x <= b; ++x) bits[static_cast<std::size_t>(y - w.y) * w.width + (x - w.x)] = 1;
    }
  }
  return BitMask(width, height, w, bits);
}

// ---------------------------------------------------------------------------
// Mask geometry

/// Orientation of the equivalent ellipse's major axis, in degrees [0, 180),
/// measured from +x in image coordinates (y down). Isotropic masks give 0.
inline double mask_orientation(const BitMask& mask) {
  if (mask.empty()) throw GeometryError("mask_orientation: empty mask");
  // Exact integer moments; n^2-scaled central moments keep the angle.
  __int128 n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  mask.for_each([&](int x, int y) {
    ++n;
    sx += x;
    sy += y;
    sxx += static_cast<__int128>(x) * x;
    syy += static_cast<__int128>(y) * y;
    sxy += static_cast<__int128>(x) * y;
  });
  const __int128 mu20 = n * sxx - sx * sx;
  const __int128 mu02 = n * syy - sy * sy;
  const __int128 mu11 = n * sxy - sx * sy;
  if (mu11 == 0 && mu20 == mu02) return 0.0;
  const double theta = 0.5 * std::atan2(2.0 * static_cast<double>(mu11), static_cast<double>(mu20 - mu02));
  double deg = theta * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return deg;
}

inline double bbox_iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Mean of `field` over the set bits of `mask`.
inline double mask_mean_over(const BitMask& mask, const Plane& field) {
  require_same_size(mask, field, "mask_mean_over");
  if (mask.empty()) throw GeometryError("mask_mean_over: empty mask");
  double sum = 0.0;
  std::size_t n = 0;
  mask.for_each([&](int x, int y) {
    sum += field.at(x, y);
    ++n;
  });
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Document parsing

inline constexpr std::int64_t kMaxImagePixels = std::int64_t{1} << 26;

namespace detail {

using nlohmann::json;

inline const json& member(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing \"" + key + "\"");
  return *it;
}

inline std::int64_t as_id(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw SchemaError(where + ": id out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw SchemaError(where + ": expected an integer");
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(where + ": number is not finite");
  return d;
}

inline std::string as_string_or(const json& obj, const char* key, std::string fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw SchemaError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

inline BitMask decode_segmentation(const json& seg, int width, int height) {
  if (seg.is_array()) {
    if (seg.empty()) throw GeometryError("empty polygon list");
    BitMask out(width, height);
    for (const auto& poly : seg) {
      if (!poly.is_array()) throw SchemaError("unsupported segmentation variant: polygon is not an array");
      std::vector<double> pts;
      pts.reserve(poly.size());
      for (const auto& v : poly) pts.push_back(as_number(v, "polygon"));
      out = mask_union(out, rasterize_polygon(pts, width, height));
    }
    return out;
  }
  if (seg.is_object()) {
    const auto& size = member(seg, "size", "RLE segmentation");
    if (!size.is_array() || size.size() != 2) throw SchemaError("RLE \"size\" must be [height, width]");
    const auto h = as_id(size[0], "RLE size"), w = as_id(size[1], "RLE size");
    if (h != height || w != width) throw DimensionError("RLE size does not match the image");
    const auto& counts = member(seg, "counts", "RLE segmentation");
    std::vector<std::int64_t> runs;
    if (counts.is_string()) {
      runs = decode_rle_string(counts.get_ref<const std::string&>());
    } else if (counts.is_array()) {
      runs.reserve(counts.size());
      for (const auto& c : counts) runs.push_back(as_id(c, "RLE counts"));
    } else {
      throw SchemaError("unsupported segmentation variant: RLE counts must be a list or string");
    }
    return decode_rle(runs, height, width);
  }
  throw SchemaError("unsupported segmentation variant");
}

}  // namespace detail

/// Parses a COCO detection document. Syntax errors raise ParseError with the
/// byte offset, schema violations SchemaError, dangling or duplicate ids
/// IntegrityError. Annotations whose segmentation cannot be decoded into a
/// non-empty mask are dropped and listed in `Dataset::issues`.
inline Dataset parse_dataset(std::string_view bytes) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed COCO document: ") + e.what(), e.byte);
  } catch (const json::exception& e) {  // e.g. numbers out of range
    throw SchemaError(std::string("malformed COCO document: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw SchemaError("COCO document must be a JSON object");
    const auto& images = detail::member(doc, "images", "document");
    const auto& annotations = detail::member(doc, "annotations", "document");
    const auto& categories = detail::member(doc, "categories", "document");
    if (!images.is_array() || !annotations.is_array() || !categories.is_array()) {
      throw SchemaError("\"images\", \"annotations\" and \"categories\" must be arrays");
    }

    struct Category {
      std::string name, supercategory;
    };
    std::unordered_map<std::int64_t, Category> cats;
    for (const auto& c : categories) {
      if (!c.is_object()) throw SchemaError("category entry must be an object");
      const auto id = detail::as_id(detail::member(c, "id", "category"), "category id");
      Category cat{detail::as_string_or(c, "name", ""), detail::as_string_or(c, "supercategory", "")};
      if (!cats.emplace(id, std::move(cat)).second) {
        throw IntegrityError("duplicate category id " + std::to_string(id));
      }
    }

    Dataset ds;
    std::unordered_map<std::int64_t, std::size_t> image_index;
    for (const auto& im : images) {
      if (!im.is_object()) throw SchemaError("image entry must be an object");
      AnnotationSet set;
      set.image_id = detail::as_id(detail::member(im, "id", "image"), "image id");
      const std::string where = "image " + std::to_string(set.image_id);
      const auto w = detail::as_id(detail::member(im, "width", where), where + " width");
      const auto h = detail::as_id(detail::member(im, "height", where), where + " height");
      if (w < 1 || h < 1 || w > 65535 || h > 65535 || w * h > kMaxImagePixels) {
        throw SchemaError(where + ": unsupported dimensions " + std::to_string(w) + "x" + std::to_string(h));
      }
      set.width = static_cast<int>(w);
      set.height = static_cast<int>(h);
      set.file_name = detail::as_string_or(im, "file_name", "");
      if (!image_index.emplace(set.image_id, ds.images.size()).second) {
        throw IntegrityError("duplicate image id " + std::to_string(set.image_id));
      }
      ds.images.push_back(std::move(set));
    }

    std::unordered_set<std::int64_t> seen_annotations;
    for (const auto& a : annotations) {
      if (!a.is_object()) throw SchemaError("annotation entry must be an object");
      const auto ann_id = detail::as_id(detail::member(a, "id", "annotation"), "annotation id");
      const std::string where = "annotation " + std::to_string(ann_id);
      const auto image_id = detail::as_id(detail::member(a, "image_id", where), where + " image_id");
      const auto category_id = detail::as_id(detail::member(a, "category_id", where), where + " category_id");
      if (!seen_annotations.insert(ann_id).second) {
        throw IntegrityError("duplicate annotation id " + std::to_string(ann_id));
      }
      auto img_it = image_index.find(image_id);
      if (img_it == image_index.end()) {
        throw IntegrityError(where + " references unknown image_id " + std::to_string(image_id));
      }
      auto cat_it = cats.find(category_id);
      if (cat_it == cats.end()) {
        throw IntegrityError(where + " references unknown category_id " + std::to_string(category_id));
      }
      AnnotationSet& set = ds.images[img_it->second];

      ObjectAnnotation obj;
      obj.object_id = ann_id;
      obj.category_id = category_id;
      obj.category = cat_it->second.name;
      obj.supercategory = cat_it->second.supercategory;
      if (auto it = a.find("iscrowd"); it != a.end() && !it->is_null()) {
        obj.crowd = detail::as_number(*it, where + " iscrowd") != 0.0;
      }
      try {
        const auto& bbox = detail::member(a, "bbox", where);
        if (!bbox.is_array() || bbox.size() != 4) throw SchemaError("bbox must have 4 numbers");
        double x = detail::as_number(bbox[0], "bbox"), y = detail::as_number(bbox[1], "bbox");
        double bw = detail::as_number(bbox[2], "bbox"), bh = detail::as_number(bbox[3], "bbox");
        const double x0 = std::clamp(x, 0.0, static_cast<double>(set.width));
        const double y0 = std::clamp(y, 0.0, static_cast<double>(set.height));
        const double x1 = std::clamp(x + bw, 0.0, static_cast<double>(set.width));
        const double y1 = std::clamp(y + bh, 0.0, static_cast<double>(set.height));
        obj.bbox = {x0, y0, x1 - x0, y1 - y0};
        if (!(obj.bbox.w > 0.0) || !(obj.bbox.h > 0.0)) throw GeometryError("bbox is empty inside the image");
        obj.mask = detail::decode_segmentation(detail::member(a, "segmentation", where), set.width, set.height);
        if (obj.mask.empty()) throw GeometryError("segmentation covers no pixel");
      } catch (const Error& e) {
        ds.issues.push_back({ann_id, image_id, e.what()});
        continue;
      }
      set.objects.push_back(std::move(obj));
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("COCO document: ") + e.what());
  }
}

}  // namespace distort_forge::coco
