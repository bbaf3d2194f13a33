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

// Voxel volumes built from image stacks: slicing, Perona-Malik filtering and
// intensity statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ascribe/error.hpp"
#include "ascribe/png_io.hpp"

namespace ascribe {

struct Dims {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  std::uint32_t nz = 0;

  std::size_t count() const { return std::size_t{nx} * ny * nz; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

using Spacing = std::array<double, 3>;

/// Scalar grid with samples in [0,1], x fastest, then y, then z.
struct Volume {
  Dims dims;
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<double> data;

  Volume() = default;
  Volume(Dims d, Spacing s = {1.0, 1.0, 1.0}, double fill = 0.0)
      : dims(d), spacing(s), data(d.count(), fill) {}

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return x + std::size_t{dims.nx} * (y + std::size_t{dims.ny} * z);
  }
  double& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) { return data[index(x, y, z)]; }
  double at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const { return data[index(x, y, z)]; }

  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

  friend bool operator==(const Volume&, const Volume&) = default;
};

struct Slice2D {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t index = 0;
  std::vector<double> data;

  friend bool operator==(const Slice2D&, const Slice2D&) = default;
};

struct IntensityStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<std::uint64_t> histogram;
};

/// Stacks rasters along z; slice k becomes z = k. Samples are divided by the
/// bit-depth maximum. `names` (optional, parallel to `images`) only labels
/// errors.
inline Volume load_stack(std::span<const Raster> images, std::span<const std::string> names = {}) {
  if (images.empty()) throw Error(ErrorCode::EmptyStack, "no slices");
  auto label = [&](std::size_t k) {
    return k < names.size() ? names[k] : "slice " + std::to_string(k);
  };
  const auto& first = images.front();
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto& img = images[k];
    if (img.bit_depth != 8 && img.bit_depth != 16) {
      throw Error(ErrorCode::UnsupportedPixelFormat,
                  label(k) + ": bit depth " + std::to_string(img.bit_depth));
    }
    if (img.width == 0 || img.height == 0 || img.pixels.size() != std::size_t{img.width} * img.height) {
      throw Error(ErrorCode::DimensionMismatch, label(k) + ": empty or inconsistent raster");
    }
    if (img.width != first.width || img.height != first.height) {
      throw Error(ErrorCode::DimensionMismatch,
                  label(k) + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                      ", expected " + std::to_string(first.width) + "x" +
                      std::to_string(first.height));
    }
  }
  Volume v(Dims{first.width, first.height, static_cast<std::uint32_t>(images.size())});
  const std::size_t plane = std::size_t{first.width} * first.height;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const double scale = 1.0 / images[k].max_value();
    for (std::size_t i = 0; i < plane; ++i) v.data[k * plane + i] = images[k].pixels[i] * scale;
  }
  return v;
}

/// PNG files directly inside `dir`, ordered lexicographically by file name.
inline std::vector<std::filesystem::path> list_stack_files(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::RootNotFound, dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline Volume load_stack_dir(const std::filesystem::path& dir) {
  const auto files = list_stack_files(dir);
  std::vector<Raster> images;
  std::vector<std::string> names;
  images.reserve(files.size());
  for (const auto& f : files) {
    images.push_back(read_png(f));
    names.push_back(f.filename().string());
  }
  return load_stack(images, names);
}

inline Slice2D get_slice(const Volume& v, std::int64_t index) {
  if (index < 0 || index >= static_cast<std::int64_t>(v.dims.nz)) {
    throw Error(ErrorCode::IndexOutOfRange,
                "slice " + std::to_string(index) + " of " + std::to_string(v.dims.nz));
  }
  const std::size_t plane = std::size_t{v.dims.nx} * v.dims.ny;
  Slice2D s{v.dims.nx, v.dims.ny, static_cast<std::uint32_t>(index), {}};
  const auto begin = v.data.begin() + static_cast<std::ptrdiff_t>(plane * index);
  s.data.assign(begin, begin + static_cast<std::ptrdiff_t>(plane));
  return s;
}

/// Quantizes a slice to an 8-bit raster for display.
inline Raster slice_to_raster(const Slice2D& s) {
  Raster r{s.width, s.height, 8, std::vector<std::uint16_t>(s.data.size())};
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    r.pixels[i] = static_cast<std::uint16_t>(std::lround(std::clamp(s.data[i], 0.0, 1.0) * 255.0));
  }
  return r;
}

struct DiffusionParams {
  std::uint32_t iterations = 0;
  double kappa = 0.1;
  double lambda = 1.0 / 6.0;

  friend bool operator==(const DiffusionParams&, const DiffusionParams&) = default;
};

inline constexpr double kMaxDiffusionLambda = 1.0 / 6.0;

/// Perona-Malik diffusion with exponential conductance g(d) = exp(-(d/kappa)^2)
/// over the 6-neighbourhood, explicit and double-buffered. The border is
/// mirrored including the edge sample, so no flux crosses it.
inline Volume anisotropic_diffusion(const Volume& input, const DiffusionParams& p) {
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) {
    throw Error(ErrorCode::ParameterOutOfRange, "kappa must be positive and finite");
  }
  if (!(p.lambda > 0.0 && p.lambda <= kMaxDiffusionLambda)) {
    throw Error(ErrorCode::ParameterOutOfRange, "lambda must lie in (0, 1/6]");
  }
  Volume cur = input;
  if (p.iterations == 0) return cur;
  Volume next = input;
  const auto [nx, ny, nz] = input.dims;
  const std::size_t sx = 1, sy = nx, sz = std::size_t{nx} * ny;
  const double inv_k2 = 1.0 / (p.kappa * p.kappa);

  for (std::uint32_t it = 0; it < p.iterations; ++it) {
    const double* in = cur.data.data();
    double* out = next.data.data();
    for (std::uint32_t z = 0; z < nz; ++z) {
      for (std::uint32_t y = 0; y < ny; ++y) {
        for (std::uint32_t x = 0; x < nx; ++x) {
          const std::size_t i = cur.index(x, y, z);
          const double c = in[i];
          double flux = 0.0;
          auto accumulate = [&](std::size_t j) {
            const double d = in[j] - c;
            flux += std::exp(-d * d * inv_k2) * d;
          };
          if (x > 0) accumulate(i - sx);
          if (x + 1 < nx) accumulate(i + sx);
          if (y > 0) accumulate(i - sy);
          if (y + 1 < ny) accumulate(i + sy);
          if (z > 0) accumulate(i - sz);
          if (z + 1 < nz) accumulate(i + sz);
          out[i] = std::clamp(c + p.lambda * flux, 0.0, 1.0);
        }
      }
    }
    std::swap(cur.data, next.data);
  }
  return cur;
}

inline Volume anisotropic_diffusion(const Volume& v, std::uint32_t iterations, double kappa,
                                    double lambda) {
  return anisotropic_diffusion(v, DiffusionParams{iterations, kappa, lambda});
}

/// Exact min/max/mean and population standard deviation, plus a histogram
/// whose bin k covers [k/B, (k+1)/B) with the last bin closed.
inline IntensityStats intensity_stats(const Volume& v, std::uint32_t bins) {
  if (bins == 0) throw Error(ErrorCode::ParameterOutOfRange, "bins must be >= 1");
  IntensityStats s;
  s.histogram.assign(bins, 0);
  if (v.data.empty()) return s;
  s.min = s.max = v.data.front();
  double sum = 0.0;
  for (double x : v.data) {
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
    sum += x;
    const auto k = static_cast<std::uint32_t>(std::clamp(x, 0.0, 1.0) * bins);
    ++s.histogram[std::min(k, bins - 1)];
  }
  const double n = static_cast<double>(v.data.size());
  s.mean = std::clamp(sum / n, s.min, s.max);
  double sq = 0.0;
  for (double x : v.data) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / n);
  return s;
}

}  // namespace ascribe
