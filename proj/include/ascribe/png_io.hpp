// Copyright 2026 The Ascribe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Grayscale PNG reading and writing on top of libpng.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ascribe/error.hpp"

namespace ascribe {

/// Single-channel raster with 8- or 16-bit samples, row-major.
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;

  std::uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
  friend bool operator==(const Raster&, const Raster&) = default;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_error_to_longjmp(png_structp png, png_const_charp) { png_longjmp(png, 1); }
inline void png_silent_warning(png_structp, png_const_charp) {}

inline void png_vector_write(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

inline void png_noop_flush(png_structp) {}

/// Status 0 ok, 1 corrupt, 2 unsupported format. Only trivially destructible
/// locals live between setjmp and the libpng calls.
inline int png_read_rows(png_structp png, png_infop info, std::FILE* file, Raster& raster,
                         std::vector<std::uint8_t>& buffer, std::vector<png_bytep>& rows, int& color,
                         int& depth) {
  if (setjmp(png_jmpbuf(png))) return 1;
  png_init_io(png, file);
  png_read_info(png, info);
  color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) return 2;
  raster.width = png_get_image_width(png, info);
  raster.height = png_get_image_height(png, info);
  raster.bit_depth = depth;
  const std::size_t stride = std::size_t{raster.width} * static_cast<std::size_t>(depth / 8);
  buffer.resize(stride * raster.height);
  rows.resize(raster.height);
  for (std::uint32_t r = 0; r < raster.height; ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return 0;
}

}  // namespace detail

inline Raster read_png(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           detail::png_error_to_longjmp, detail::png_silent_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }

  Raster raster;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  int color = 0, depth = 0;
  const int status = detail::png_read_rows(png, info, file.get(), raster, buffer, rows, color, depth);
  png_destroy_read_struct(&png, &info, nullptr);

  if (status == 1) throw Error(ErrorCode::IoError, "corrupt PNG " + path.string());
  if (status == 2) {
    throw Error(ErrorCode::UnsupportedPixelFormat, path.filename().string() + ": color type " +
                                                       std::to_string(color) + ", bit depth " +
                                                       std::to_string(depth));
  }
  raster.pixels.resize(std::size_t{raster.width} * raster.height);
  for (std::size_t i = 0; i < raster.pixels.size(); ++i) {
    raster.pixels[i] = raster.bit_depth == 16
                           ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                           : buffer[i];
  }
  return raster;
}

/// Encodes `raster` as a grayscale PNG in memory.
inline std::vector<std::uint8_t> encode_png(const Raster& raster) {
  if (raster.bit_depth != 8 && raster.bit_depth != 16) {
    throw Error(ErrorCode::UnsupportedPixelFormat, "bit depth " + std::to_string(raster.bit_depth));
  }
  if (raster.pixels.size() != std::size_t{raster.width} * raster.height) {
    throw Error(ErrorCode::DimensionMismatch, "pixel count does not match width x height");
  }
  const std::size_t bpp = raster.bit_depth / 8;
  const std::size_t stride = std::size_t{raster.width} * bpp;
  std::vector<std::uint8_t> buffer(stride * raster.height);
  for (std::size_t i = 0; i < raster.pixels.size(); ++i) {
    if (bpp == 2) {
      buffer[2 * i] = static_cast<std::uint8_t>(raster.pixels[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(raster.pixels[i]);
    } else {
      buffer[i] = static_cast<std::uint8_t>(raster.pixels[i]);
    }
  }
  std::vector<png_bytep> rows(raster.height);
  for (std::uint32_t r = 0; r < raster.height; ++r) rows[r] = buffer.data() + r * stride;

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            detail::png_error_to_longjmp, detail::png_silent_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, detail::png_vector_write, detail::png_noop_flush);
  png_set_IHDR(png, info, raster.width, raster.height, raster.bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline void write_png(const std::filesystem::path& path, const Raster& raster) {
  const auto bytes = encode_png(raster);
  detail::FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size()) {
    throw Error(ErrorCode::IoError, "short write to " + path.string());
  }
}

}  // namespace ascribe
