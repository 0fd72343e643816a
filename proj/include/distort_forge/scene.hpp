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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace distort_forge {

enum class Locale { indoor, outdoor };

/// Activity tags a scene can carry; stored as a bit set.
enum class Activity : std::uint8_t { ski = 1, surf = 2, skate = 4, sport = 8, riding = 16 };

struct ActivitySet {
  std::uint8_t bits = 0;

  bool has(Activity a) const noexcept { return (bits & static_cast<std::uint8_t>(a)) != 0; }
  void add(Activity a) noexcept { bits |= static_cast<std::uint8_t>(a); }
  bool empty() const noexcept { return bits == 0; }
  /// True when every tag of `o` is also in this set.
  bool contains(ActivitySet o) const noexcept { return (bits & o.bits) == o.bits; }
  bool operator==(const ActivitySet&) const = default;
};

struct SceneContext {
  Locale locale = Locale::outdoor;
  ActivitySet activities;

  /// Scenes whose people and sports gear move fast.
  bool is_fast_action() const noexcept {
    return activities.has(Activity::sport) || activities.has(Activity::ski) || activities.has(Activity::skate) ||
           activities.has(Activity::surf);
  }
};

inline std::string_view to_string(Locale l) { return l == Locale::indoor ? "indoor" : "outdoor"; }

inline std::optional<Locale> parse_locale(std::string_view s) {
  if (s == "indoor") return Locale::indoor;
  if (s == "outdoor") return Locale::outdoor;
  return std::nullopt;
}

inline std::string_view to_string(Activity a) {
  switch (a) {
    case Activity::ski: return "ski";
    case Activity::surf: return "surf";
    case Activity::skate: return "skate";
    case Activity::sport: return "sport";
    case Activity::riding: return "riding";
  }
  return "?";
}

}  // namespace distort_forge
