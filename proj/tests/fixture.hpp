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

// On-disk corpus for end-to-end runs of the command-line tool.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "distort_forge/cli.hpp"
#include "distort_forge/io.hpp"
#include "distort_forge/random.hpp"
#include "support.hpp"

namespace df_test {

struct CorpusDirs {
  std::filesystem::path root, images, depth, annotations, scenes, ratios;
  int count = 0;
};

inline std::string file_name(int i) { return "img" + std::to_string(1000 + i) + ".png"; }

/// `count` images of w x h. Every 4th image is indoor, every 5th lacks depth,
/// every 7th carries a crowd region. Ratios are uniform so small corpora
/// exercise every kind.
inline CorpusDirs write_corpus(const std::string& name, int count, std::uint64_t seed, int w = 64, int h = 48) {
  using nlohmann::json;
  CorpusDirs d;
  d.count = count;
  d.root = temp_dir(name);
  d.images = d.root / "images";
  d.depth = d.root / "depth";
  std::filesystem::create_directories(d.images);
  std::filesystem::create_directories(d.depth);
  distort_forge::Rng rng(seed);

  json images = json::array(), anns = json::array();
  std::string scenes = "image_id,locale\n";
  int ann_id = 1;
  for (int i = 0; i < count; ++i) {
    const int id = i + 1;
    distort_forge::Image8 img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<std::size_t>(w) * h * 3);
    const double phase = rng.uniform(0.0, 6.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          const double v = 0.5 + 0.3 * std::sin(0.11 * x + 0.07 * y + phase + c) + 0.05 * rng.normal();
          img.data[(static_cast<std::size_t>(y) * w + x) * 3 + c] = distort_forge::to_byte(std::clamp(v, 0.0, 1.0));
        }
    distort_forge::io::write_png_rgb(d.images / file_name(i), img);

    if (id % 5 != 0) {
      std::vector<std::uint8_t> depth(static_cast<std::size_t>(w) * h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) depth[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(40 + 200 * y / h);
      distort_forge::io::write_png_gray8(d.depth / file_name(i), w, h, depth);
    }
    scenes += std::to_string(id) + (id % 4 == 0 ? ",indoor\n" : ",outdoor\n");
    images.push_back({{"id", id}, {"file_name", file_name(i)}, {"width", w}, {"height", h}});

    auto rect = [](double x, double y, double rw, double rh) {
      return json::array({json::array({x, y, x + rw, y, x + rw, y + rh, x, y + rh})});
    };
    const double px = rng.uniform(4.0, w / 2.0), py = rng.uniform(4.0, h / 3.0);
    anns.push_back({{"id", ann_id++}, {"image_id", id}, {"category_id", 1}, {"iscrowd", 0},
                    {"segmentation", rect(px, py, w / 5.0, h / 2.5)}, {"bbox", {px, py, w / 5.0, h / 2.5}}});
    if (id % 2 == 1) {
      anns.push_back({{"id", ann_id++}, {"image_id", id}, {"category_id", 2}, {"iscrowd", 0},
                      {"segmentation", rect(px - 2, py + h / 4.0, w / 3.0, h / 4.0)},
                      {"bbox", {px - 2, py + h / 4.0, w / 3.0, h / 4.0}}});
    }
    if (id % 7 == 0) {
      anns.push_back({{"id", ann_id++}, {"image_id", id}, {"category_id", 3}, {"iscrowd", 1},
                      {"segmentation", rect(w * 0.6, 2, w * 0.3, h * 0.3)}, {"bbox", {w * 0.6, 2, w * 0.3, h * 0.3}}});
    }
  }
  const json doc = {{"images", images},
                    {"annotations", anns},
                    {"categories", json::array({{{"id", 1}, {"name", "person"}, {"supercategory", "person"}},
                                                {{"id", 2}, {"name", "horse"}, {"supercategory", "animal"}},
                                                {{"id", 3}, {"name", "car"}, {"supercategory", "vehicle"}}})}};
  d.annotations = d.root / "instances.json";
  distort_forge::io::write_text_file(d.annotations, doc.dump());
  d.scenes = d.root / "scenes.csv";
  distort_forge::io::write_text_file(d.scenes, scenes);
  json ratios = json::object();
  for (auto name : distort_forge::kKindNames) ratios[std::string(name)] = 0.1;
  d.ratios = d.root / "ratios.json";
  distort_forge::io::write_text_file(d.ratios, ratios.dump());
  return d;
}

struct RunResult {
  int code = 0;
  std::string out, err;
};

inline RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "distort_forge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  RunResult r;
  r.code = distort_forge::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Output PNG bytes keyed by file name, run report excluded.
inline std::map<std::string, std::string> output_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".png") m[e.path().filename().string()] = slurp(e.path());
  }
  return m;
}

}  // namespace df_test
