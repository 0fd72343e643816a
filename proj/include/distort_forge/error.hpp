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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace distort_forge {

/// Root of every error the library raises. Callers that only need to know
/// "structured failure vs. crash" catch this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raster sizes disagree, or an image is below the 8x8 minimum.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain numeric parameter (non-positive std, bad level, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed document syntax. `offset()` is the byte position the parser
/// stopped at.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed document whose structure does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Cross-reference failure: dangling or duplicated ids.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Empty masks, degenerate polygons.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Run-length counts that do not add up to the raster size.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Depth raster that cannot be normalized (all zero, negative, non-finite).
class DegenerateDepthError : public Error {
 public:
  using Error::Error;
};

/// The requested distortion cannot be produced from the available inputs.
class InapplicableDistortion : public Error {
 public:
  using Error::Error;
};

/// File system and codec failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace distort_forge
