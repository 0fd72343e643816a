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

// File codecs: 8-bit RGB PNG (images), baseline JPEG input, 8/16-bit
// grayscale PNG (depth maps and external rain/fog masks) and the
// little-endian float32 raw depth format (8-byte header: width, height as
// uint32).

#include <png.h>
// jpeglib.h expects FILE and size_t to be declared first.
#include <cstddef>
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "distort_forge/error.hpp"
#include "distort_forge/image.hpp"

namespace distort_forge::io {

namespace detail {

struct File {
  std::FILE* fp = nullptr;
  File(const std::filesystem::path& p, const char* mode) : fp(std::fopen(p.string().c_str(), mode)) {}
  ~File() {
    if (fp) std::fclose(fp);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buf, 256, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 or 3
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint8_t> bytes;  // row-major, 16-bit samples big-endian
};

/// Decodes to 8-bit RGB (`want_rgb`) or to native-depth grayscale.
inline DecodedPng decode(const std::filesystem::path& path, bool want_rgb) {
  File f(path, "rb");
  if (!f.fp) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  char message[256] = "libpng error";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  std::vector<png_bytep> rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    throw IoError(path.string() + ": " + message);
  }
  png_init_io(png, f.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (w == 0 || h == 0 || static_cast<std::uint64_t>(w) * h > (1ULL << 28)) {
    png_error(png, "unsupported image dimensions");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (want_rgb) {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  } else if (color & PNG_COLOR_MASK_COLOR) {
    png_error(png, "expected a grayscale PNG");
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = out.bytes.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
                   const std::uint8_t* data, std::size_t stride) {
  File f(path, "wb");
  if (!f.fp) throw IoError("cannot create " + path.string());
  char message[256] = "libpng error";
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoError(path.string() + ": " + message);
  }
  png_init_io(png, f.fp);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline Image8 read_png_rgb(const std::filesystem::path& path) {
  auto d = detail::decode(path, true);
  Image8 img;
  img.width = d.width;
  img.height = d.height;
  img.data = std::move(d.bytes);
  return img;
}

inline void write_png_rgb(const std::filesystem::path& path, const Image8& img) {
  detail::encode(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, img.data.data(),
                 static_cast<std::size_t>(img.width) * 3);
}

namespace detail {
struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_silent(j_common_ptr, int) {}
}  // namespace detail

inline Image8 read_jpeg_rgb(const std::filesystem::path& path) {
  detail::File f(path, "rb");
  if (!f.fp) throw IoError("cannot open " + path.string());
  jpeg_decompress_struct cinfo;
  detail::JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::jpeg_error_exit;
  err.mgr.emit_message = detail::jpeg_silent;
  Image8 img;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  if (cinfo.output_components != 3 || static_cast<std::uint64_t>(cinfo.output_width) * cinfo.output_height > (1ULL << 28)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(path.string() + ": unsupported JPEG layout");
  }
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

/// PNG or JPEG, told apart by signature.
inline Image8 read_image_rgb(const std::filesystem::path& path) {
  unsigned char sig[3] = {0, 0, 0};
  {
    detail::File f(path, "rb");
    if (!f.fp) throw IoError("cannot open " + path.string());
    if (std::fread(sig, 1, 3, f.fp) != 3) throw IoError(path.string() + ": file too short");
  }
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return read_jpeg_rgb(path);
  return read_png_rgb(path);
}

/// Grayscale PNG as raw sample values (0..255 or 0..65535).
inline Plane read_png_gray(const std::filesystem::path& path, int* bit_depth = nullptr) {
  auto d = detail::decode(path, false);
  Plane p(d.width, d.height);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      if (d.bit_depth == 16) {
        const std::size_t i = (static_cast<std::size_t>(y) * d.width + x) * 2;
        p.at(x, y) = static_cast<double>((d.bytes[i] << 8) | d.bytes[i + 1]);
      } else {
        p.at(x, y) = d.bytes[static_cast<std::size_t>(y) * d.width + x];
      }
    }
  }
  if (bit_depth) *bit_depth = d.bit_depth;
  return p;
}

inline void write_png_gray8(const std::filesystem::path& path, int width, int height,
                            const std::vector<std::uint8_t>& samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height) throw DimensionError("write_png_gray8: size");
  detail::encode(path, width, height, PNG_COLOR_TYPE_GRAY, 8, samples.data(), static_cast<std::size_t>(width));
}

inline void write_png_gray16(const std::filesystem::path& path, int width, int height,
                             const std::vector<std::uint16_t>& samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height) throw DimensionError("write_png_gray16: size");
  std::vector<std::uint8_t> be(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    be[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
    be[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xFF);
  }
  detail::encode(path, width, height, PNG_COLOR_TYPE_GRAY, 16, be.data(), static_cast<std::size_t>(width) * 2);
}

namespace detail {
inline std::uint32_t load_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void store_u32le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}
}  // namespace detail

/// Raw float depth: uint32 width, uint32 height, then width*height float32,
/// all little-endian, row-major.
inline Plane read_depth_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char header[8];
  if (!in.read(reinterpret_cast<char*>(header), 8)) throw IoError(path.string() + ": truncated header");
  const std::uint32_t w = detail::load_u32le(header);
  const std::uint32_t h = detail::load_u32le(header + 4);
  if (w == 0 || h == 0 || static_cast<std::uint64_t>(w) * h > (1ULL << 28)) {
    throw IoError(path.string() + ": bad raw depth dimensions");
  }
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw IoError(path.string() + ": truncated raw depth payload");
  }
  Plane p(static_cast<int>(w), static_cast<int>(h));
  auto vals = p.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const std::uint32_t bits = detail::load_u32le(buf.data() + 4 * i);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    vals[i] = f;
  }
  return p;
}

inline void write_depth_raw(const std::filesystem::path& path, const Plane& depth) {
  std::vector<unsigned char> buf(8 + depth.size() * 4);
  detail::store_u32le(buf.data(), static_cast<std::uint32_t>(depth.width()));
  detail::store_u32le(buf.data() + 4, static_cast<std::uint32_t>(depth.height()));
  auto vals = depth.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const float f = static_cast<float>(vals[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    detail::store_u32le(buf.data() + 8 + 4 * i, bits);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw IoError("cannot write " + path.string());
  }
}

/// Reads a depth raster by extension: .png (8/16-bit gray) or anything else
/// as the raw float format.
inline Plane read_depth_file(const std::filesystem::path& path) {
  if (path.extension() == ".png" || path.extension() == ".PNG") return read_png_gray(path);
  return read_depth_raw(path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw IoError("cannot write " + path.string());
  }
}

}  // namespace distort_forge::io
