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

#include <gtest/gtest.h>

#include <cmath>

#include "distort_forge/assign.hpp"
#include "support.hpp"

namespace {

using namespace distort_forge;
using K = DistortionKind;

coco::AnnotationSet objects(std::initializer_list<std::pair<const char*, const char*>> cats, bool crowd = false) {
  coco::AnnotationSet a;
  a.width = a.height = 16;
  std::int64_t id = 1;
  for (const auto& [cat, super] : cats) {
    a.objects.push_back(df_test::make_object(id, cat, super, df_test::rect_mask(16, 16, {1, 1, 5, 5}), crowd));
    ++id;
  }
  return a;
}

CorpusImage image(std::int64_t id, Locale locale, bool depth, coco::AnnotationSet ann) {
  CorpusImage c;
  c.image_id = id;
  c.file_name = "img" + std::to_string(id) + ".png";
  c.locale = locale;
  c.has_depth = depth;
  c.annotations = std::move(ann);
  return c;
}

std::vector<CorpusImage> full_corpus(int n) {
  std::vector<CorpusImage> v;
  for (int i = 0; i < n; ++i) v.push_back(image(1000 + 7 * i, Locale::outdoor, true, objects({{"person", "person"}})));
  return v;
}

std::vector<CorpusImage> mixed_corpus(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CorpusImage> v;
  const std::pair<const char*, const char*> cats[] = {
      {"person", "person"}, {"chair", "furniture"}, {"horse", "animal"}, {"car", "vehicle"}, {"cup", "kitchen"}};
  for (int i = 0; i < n; ++i) {
    coco::AnnotationSet a;
    a.width = a.height = 16;
    const int count = static_cast<int>(rng.uniform_int(0, 3));
    for (int j = 0; j < count; ++j) {
      const auto& c = cats[rng.uniform_int(0, 4)];
      a.objects.push_back(df_test::make_object(j + 1, c.first, c.second, df_test::rect_mask(16, 16, {j, j, 4, 4}),
                                               rng.uniform() < 0.2));
    }
    v.push_back(image(i + 1, rng.uniform() < 0.4 ? Locale::indoor : Locale::outdoor, rng.uniform() < 0.7, a));
  }
  return v;
}

TEST(Kinds, NamesRoundTrip) {
  for (K k : kAllKinds) EXPECT_EQ(parse_kind(to_string(k)), k);
  EXPECT_EQ(parse_kind("compression_artifact"), K::compression);
  EXPECT_FALSE(parse_kind("sepia").has_value());
  EXPECT_TRUE(is_global(K::global_defocus_blur));
  EXPECT_FALSE(is_global(K::fog));
}

TEST(Ratios, DefaultsMatchReferenceShares) {
  const Ratios r = default_ratios();
  EXPECT_NO_THROW(check_ratios(r));
  const double published[] = {0.153, 0.154, 0.154, 0.153, 0.151, 0.007, 0.007, 0.003, 0.060, 0.159};
  for (int k = 0; k < kKindCount; ++k) EXPECT_NEAR(r[k], published[k], 0.0006) << to_string(kAllKinds[k]);
  EXPECT_EQ(std::max_element(r.begin(), r.end()) - r.begin(), static_cast<int>(K::local_motion_blur));
}

TEST(Ratios, LoadAndReject) {
  const Ratios r = load_ratios(R"({"compression":0.5,"fog":0.5})");
  EXPECT_DOUBLE_EQ(r[static_cast<int>(K::compression)], 0.5);
  EXPECT_DOUBLE_EQ(r[static_cast<int>(K::rain)], 0.0);
  EXPECT_THROW(load_ratios(R"({"compression":0.5})"), ParameterError);
  EXPECT_THROW(load_ratios(R"({"sepia":1.0})"), SchemaError);
  EXPECT_THROW(load_ratios("{"), ParseError);
  EXPECT_THROW(load_ratios(R"({"fog":-0.5,"rain":1.5})"), ParameterError);
}

TEST(SceneIndex, Basics) {
  const SceneIndex a = load_scene_index("42,indoor");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.at(42), Locale::indoor);
  EXPECT_TRUE(load_scene_index("").empty());
  const SceneIndex b = load_scene_index("image_id,locale\n1,outdoor\r\n\n2,indoor\n");
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.at(1), Locale::outdoor);
}

TEST(SceneIndex, Errors) {
  try {
    load_scene_index("7,indoor\n8,outdoor\n7,outdoor\n");
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
  EXPECT_THROW(load_scene_index("5,underwater\n"), SchemaError);
  EXPECT_THROW(load_scene_index("x,indoor\n"), SchemaError);
  EXPECT_THROW(load_scene_index("5\n"), SchemaError);
}

TEST(Activity, Classification) {
  EXPECT_TRUE(classify_activity(objects({{"person", "person"}, {"surfboard", "sports"}})).has(Activity::surf));
  EXPECT_EQ(classify_activity(objects({{"person", "person"}, {"surfboard", "sports"}})).bits,
            static_cast<std::uint8_t>(Activity::surf));
  EXPECT_EQ(classify_activity(objects({{"person", "person"}, {"horse", "animal"}})).bits,
            static_cast<std::uint8_t>(Activity::riding));
  EXPECT_TRUE(classify_activity(objects({{"chair", "furniture"}, {"dining table", "furniture"}})).empty());
  EXPECT_TRUE(classify_activity(objects({{"horse", "animal"}})).empty());
  EXPECT_TRUE(classify_activity(objects({{"snowboard", "sports"}})).has(Activity::ski));
  EXPECT_TRUE(classify_activity(objects({{"kite", "sports"}})).has(Activity::sport));
}

TEST(Activity, Monotone) {
  const char* names[] = {"person", "horse", "skis", "surfboard", "skateboard", "kite", "chair", "bicycle", "cup"};
  Rng rng(81);
  for (int t = 0; t < 500; ++t) {
    coco::AnnotationSet a;
    a.width = a.height = 4;
    ActivitySet prev;
    for (int j = 0; j < 6; ++j) {
      a.objects.push_back(df_test::make_object(j, names[rng.uniform_int(0, 8)], "x", BitMask(4, 4)));
      const ActivitySet now = classify_activity(a);
      EXPECT_TRUE(now.contains(prev));
      prev = now;
    }
  }
}

TEST(Activity, RulesOverride) {
  const ActivityRules r = load_activity_rules(R"({"surf":["paddle"]})");
  EXPECT_TRUE(classify_activity(objects({{"paddle", "sports"}}), r).has(Activity::surf));
  EXPECT_FALSE(classify_activity(objects({{"surfboard", "sports"}}), r).has(Activity::surf));
  EXPECT_THROW(load_activity_rules(R"({"dance":[]})"), SchemaError);
}

TEST(Applicability, Cases) {
  const coco::AnnotationSet none;
  const KindSet indoor = applicable_kinds({Locale::indoor, {}}, none, true);
  EXPECT_EQ(indoor.count(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(indoor.test(k));
  const auto person = objects({{"person", "person"}});
  EXPECT_EQ(applicable_kinds({Locale::outdoor, {}}, person, true).count(), 10u);
  const KindSet nodepth = applicable_kinds({Locale::outdoor, {}}, person, false);
  EXPECT_FALSE(nodepth.test(static_cast<int>(K::fog)));
  EXPECT_FALSE(nodepth.test(static_cast<int>(K::rain)));
  EXPECT_FALSE(nodepth.test(static_cast<int>(K::local_defocus)));
  EXPECT_TRUE(nodepth.test(static_cast<int>(K::local_motion_blur)));
  EXPECT_TRUE(nodepth.test(static_cast<int>(K::backlight)));
  const KindSet chairs = applicable_kinds({Locale::indoor, {}}, objects({{"chair", "furniture"}}), true);
  EXPECT_FALSE(chairs.test(static_cast<int>(K::local_motion_blur)));
  EXPECT_TRUE(chairs.test(static_cast<int>(K::backlight)));
  EXPECT_TRUE(chairs.test(static_cast<int>(K::local_defocus)));
  const KindSet crowd = applicable_kinds({Locale::outdoor, {}}, objects({{"person", "person"}}, true), false);
  EXPECT_FALSE(crowd.test(static_cast<int>(K::backlight)));
  EXPECT_FALSE(crowd.test(static_cast<int>(K::local_motion_blur)));
}

TEST(Plan, ConvergesOnFullyApplicableCorpus) {
  const auto corpus = full_corpus(10000);
  const Manifest m = build_plan(corpus, default_ratios(), 2026);
  ASSERT_EQ(m.entries.size(), 10000u);
  const Ratios r = default_ratios();
  for (int k = 0; k < kKindCount; ++k) {
    EXPECT_NEAR(m.summary.achieved[k], r[k], 0.01) << to_string(kAllKinds[k]);
    // greedy deficit keeps each count within one image of its quota
    EXPECT_LE(std::abs(static_cast<double>(m.summary.counts[k]) - r[k] * 10000.0), 1.0);
  }
}

TEST(Plan, ConvergesAtFiveThousand) {
  const Manifest m = build_plan(full_corpus(5000), default_ratios(), 9);
  for (int k = 0; k < kKindCount; ++k) EXPECT_LE(std::abs(m.summary.achieved[k] - default_ratios()[k]), 0.01);
}

TEST(Plan, SingleImage) {
  const Manifest m = build_plan(full_corpus(1), default_ratios(), 3);
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.entries[0].kind, K::local_motion_blur);
  const Manifest indoor = build_plan({image(5, Locale::indoor, false, {})}, default_ratios(), 3);
  EXPECT_EQ(indoor.entries[0].kind, K::gaussian_noise);  // largest global share
}

TEST(Plan, TieBreaksToLowerKind) {
  Ratios r{};
  r[static_cast<int>(K::contrast)] = 0.5;
  r[static_cast<int>(K::gaussian_noise)] = 0.5;
  const Manifest m = build_plan(full_corpus(1), r, 1);
  EXPECT_EQ(m.entries[0].kind, K::contrast);
}

TEST(Plan, DeterministicAndSeedSensitive) {
  const auto corpus = mixed_corpus(400, 82);
  const Manifest a = build_plan(corpus, default_ratios(), 11), b = build_plan(corpus, default_ratios(), 11);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  auto reversed = corpus;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(to_json(build_plan(reversed, default_ratios(), 11)).dump(), to_json(a).dump());
  EXPECT_NE(to_json(build_plan(corpus, default_ratios(), 12)).dump(), to_json(a).dump());
}

TEST(Plan, SeedsLevelsAndSorting) {
  const auto corpus = mixed_corpus(300, 83);
  const Manifest m = build_plan(corpus, default_ratios(), 77);
  std::map<std::int64_t, const CorpusImage*> by_id;
  for (const auto& c : corpus) by_id[c.image_id] = &c;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (i) {
      EXPECT_LT(m.entries[i - 1].image_id, e.image_id);
    }
    EXPECT_EQ(e.seed, stable_hash(77, static_cast<std::uint64_t>(e.image_id)));
    if (is_global(e.kind)) {
      ASSERT_TRUE(e.level.has_value());
      EXPECT_GE(*e.level, 1);
      EXPECT_LE(*e.level, by_id[e.image_id]->locale == Locale::indoor ? 3 : 5);
    } else {
      EXPECT_FALSE(e.level.has_value());
    }
  }
}

TEST(Plan, IndoorLevelsStayLow) {
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 2000; ++i) corpus.push_back(image(i, Locale::indoor, false, {}));
  const Manifest m = build_plan(corpus, default_ratios(), 5);
  std::set<int> levels;
  for (const auto& e : m.entries) levels.insert(*e.level);
  EXPECT_EQ(levels, (std::set<int>{1, 2, 3}));
  for (int k = 5; k < kKindCount; ++k) EXPECT_EQ(m.summary.counts[k], 0u);
  EXPECT_GT(m.summary.shortfall[static_cast<int>(K::local_motion_blur)], 300.0);
}

TEST(Plan, OutdoorLevelsCoverAllFive) {
  const Manifest m = build_plan(full_corpus(2000), default_ratios(), 5);
  std::set<int> levels;
  for (const auto& e : m.entries) {
    if (e.level) levels.insert(*e.level);
  }
  EXPECT_EQ(levels, (std::set<int>{1, 2, 3, 4, 5}));
}

TEST(Plan, RejectsBadInput) {
  EXPECT_THROW(build_plan({}, default_ratios(), 1), ParameterError);
  Ratios bad = default_ratios();
  bad[0] += 0.1;
  EXPECT_THROW(build_plan(full_corpus(3), bad, 1), ParameterError);
  auto dup = full_corpus(2);
  dup[1].image_id = dup[0].image_id;
  EXPECT_THROW(build_plan(dup, default_ratios(), 1), IntegrityError);
}

TEST(Validate, FreshPlansAreClean) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto corpus = mixed_corpus(500, 90 + seed);
    const Manifest m = build_plan(corpus, default_ratios(), seed);
    const ValidationReport r = validate_manifest(m, corpus);
    EXPECT_TRUE(r.ok()) << r.to_json().dump();
    EXPECT_EQ(r.entries, 500u);
  }
}

bool has_code(const ValidationReport& r, const std::string& code, std::int64_t id) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Finding& f) { return f.code == code && f.image_id == id; });
}

TEST(Validate, RainOnIndoorImage) {
  std::vector<CorpusImage> corpus = {image(1, Locale::indoor, true, objects({{"person", "person"}})),
                                     image(2, Locale::outdoor, true, objects({{"person", "person"}}))};
  Manifest m = build_plan(corpus, default_ratios(), 4);
  auto& e = m.entries[0];
  e.kind = K::rain;
  e.level.reset();
  e.params = {{"alpha", 0.8}, {"angle", 90.0}, {"streak_density", kRainStreakDensity}};
  const ValidationReport r = validate_manifest(m, corpus);
  EXPECT_TRUE(has_code(r, "applicability", 1));
  EXPECT_EQ(r.violations.size(), 1u);
}

TEST(Validate, TamperedSeedAndCoverage) {
  const auto corpus = mixed_corpus(20, 95);
  Manifest m = build_plan(corpus, default_ratios(), 4);
  m.entries[3].seed ^= 1;
  EXPECT_TRUE(has_code(validate_manifest(m, corpus), "seed", m.entries[3].image_id));
  m = build_plan(corpus, default_ratios(), 4);
  const auto dropped = m.entries[5].image_id;
  m.entries.erase(m.entries.begin() + 5);
  EXPECT_TRUE(has_code(validate_manifest(m, corpus), "coverage", dropped));
  m = build_plan(corpus, default_ratios(), 4);
  m.entries.push_back(m.entries[0]);
  EXPECT_TRUE(has_code(validate_manifest(m, corpus), "coverage", m.entries[0].image_id));
  m.entries.clear();
  const ValidationReport empty = validate_manifest(m, corpus);
  ASSERT_FALSE(empty.ok());
  EXPECT_EQ(empty.violations[0].code, "empty");
}

TEST(Validate, LevelAndParams) {
  std::vector<CorpusImage> corpus = {image(1, Locale::indoor, false, {})};
  Manifest m = build_plan(corpus, default_ratios(), 4);
  m.entries[0].kind = K::contrast;
  m.entries[0].level = 5;
  m.entries[0].params = {{"direction", "increase"}};
  EXPECT_TRUE(has_code(validate_manifest(m, corpus), "level", 1));
  m.entries[0].level = 2;
  m.entries[0].params = nlohmann::json::object();
  EXPECT_TRUE(has_code(validate_manifest(m, corpus), "params", 1));
}

TEST(Validate, DeviationReported) {
  const auto corpus = full_corpus(1000);
  const Manifest m = build_plan(corpus, default_ratios(), 8);
  const ValidationReport r = validate_manifest(m, corpus);
  for (int k = 0; k < kKindCount; ++k) EXPECT_LE(std::abs(r.deviation[k]), 0.002);
}

TEST(ManifestJson, RoundTrip) {
  const auto corpus = mixed_corpus(200, 96);
  const Manifest m = build_plan(corpus, default_ratios(), 123456789012345ULL);
  const std::string text = to_json(m).dump(2);
  const Manifest back = manifest_from_json(text);
  EXPECT_EQ(back.global_seed, m.global_seed);
  EXPECT_EQ(back.entries, m.entries);
  EXPECT_EQ(back.ratios, m.ratios);
  EXPECT_EQ(to_json(back).dump(2), text);
}

TEST(ManifestJson, Errors) {
  EXPECT_THROW(manifest_from_json("[1,2"), ParseError);
  EXPECT_THROW(manifest_from_json("[]"), SchemaError);
  EXPECT_THROW(manifest_from_json(R"({"global_seed":1,"entries":[{"image_id":1,"kind":"sepia","seed":2}]})"),
               SchemaError);
}

TEST(ManifestJson, FuzzedInputsFailCleanly) {
  const Manifest m = build_plan(mixed_corpus(12, 97), default_ratios(), 5);
  const std::string base = to_json(m).dump();
  const char* tokens[] = {"-1", "1e400", "null", "[]", "{}", "\"x\"", "18446744073709551616", "0.5", "\"rain\"", "true"};
  Rng rng(98);
  for (int i = 0; i < 20000; ++i) {
    std::string t = base;
    for (int e = static_cast<int>(rng.uniform_int(1, 3)); e > 0 && !t.empty(); --e) {
      const auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(t.size()) - 1));
      switch (rng.uniform_int(0, 3)) {
        case 0: t[pos] = static_cast<char>(rng.uniform_int(0, 255)); break;
        case 1: t.erase(pos, static_cast<std::size_t>(rng.uniform_int(1, 6))); break;
        case 2: t.insert(pos, tokens[rng.uniform_int(0, 9)]); break;
        default: {
          const auto start = t.find_first_of("0123456789", pos);
          if (start == std::string::npos) break;
          const auto end = t.find_first_not_of("0123456789.e-", start);
          t.replace(start, end == std::string::npos ? std::string::npos : end - start, tokens[rng.uniform_int(0, 9)]);
        }
      }
    }
    try {
      const Manifest back = manifest_from_json(t);
      (void)validate_manifest(back, {});
    } catch (const Error&) {
    } catch (const std::exception& e) {
      ADD_FAILURE() << "unstructured exception " << e.what() << " on input " << t;
      return;
    }
  }
}

}  // namespace
