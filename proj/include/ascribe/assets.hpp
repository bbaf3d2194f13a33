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

// Importable asset catalog: mesh files and image-stack directories under a
// root, plus a loader that resolves catalog names to parsed data.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ascribe/core/mesh.hpp"
#include "ascribe/error.hpp"
#include "ascribe/mesh_io.hpp"
#include "ascribe/volume.hpp"

namespace ascribe {

enum class AssetKind { MeshObj, MeshStl, ImageStack };

constexpr std::string_view to_string(AssetKind k) {
  switch (k) {
    case AssetKind::MeshObj: return "mesh_obj";
    case AssetKind::MeshStl: return "mesh_stl";
    case AssetKind::ImageStack: return "image_stack";
  }
  return "mesh_obj";
}

inline std::optional<AssetKind> asset_kind_from_string(std::string_view s) {
  if (s == "mesh_obj") return AssetKind::MeshObj;
  if (s == "mesh_stl") return AssetKind::MeshStl;
  if (s == "image_stack") return AssetKind::ImageStack;
  return std::nullopt;
}

struct AssetEntry {
  std::string name;  // path relative to the asset root, '/' separated
  AssetKind kind = AssetKind::MeshObj;
  std::uint64_t size_bytes = 0;
  std::uint32_t slice_count = 0;  // image stacks only

  friend bool operator==(const AssetEntry&, const AssetEntry&) = default;
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace detail

/// Recursive scan. *.obj / *.stl files are mesh assets; a directory holding
/// at least one *.png and no subdirectories is an image stack. Ordered by
/// name.
inline std::vector<AssetEntry> scan_assets(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::RootNotFound, root.string());

  std::vector<AssetEntry> out;
  auto relative_name = [&](const fs::path& p) { return fs::relative(p, root).generic_string(); };

  auto visit_dir = [&](const fs::path& dir, bool is_root, auto&& self) -> void {
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(dir)) children.push_back(e.path());
    std::sort(children.begin(), children.end());
    bool has_subdir = false;
    std::uint32_t pngs = 0;
    std::uint64_t png_bytes = 0;
    for (const auto& child : children) {
      if (fs::is_directory(child)) {
        has_subdir = true;
        self(child, false, self);
      } else if (fs::is_regular_file(child)) {
        const auto ext = detail::lower_extension(child);
        if (ext == ".obj" || ext == ".stl") {
          out.push_back({relative_name(child), ext == ".obj" ? AssetKind::MeshObj : AssetKind::MeshStl,
                         fs::file_size(child), 0});
        } else if (ext == ".png") {
          ++pngs;
          png_bytes += fs::file_size(child);
        }
      }
    }
    if (!is_root && !has_subdir && pngs > 0) {
      out.push_back({relative_name(dir), AssetKind::ImageStack, png_bytes, pngs});
    }
  };
  visit_dir(root, true, visit_dir);
  std::sort(out.begin(), out.end(),
            [](const AssetEntry& a, const AssetEntry& b) { return a.name < b.name; });
  return out;
}

/// Resolves catalog names to parsed assets.
class AssetSource {
 public:
  virtual ~AssetSource() = default;
  virtual std::vector<AssetEntry> catalog() = 0;
  /// Throws AssetNotFound for unknown names, parser errors otherwise.
  virtual Mesh load_mesh(const std::string& name) = 0;
  virtual Volume load_stack(const std::string& name) = 0;
};

/// Assets on disk under a root directory. The catalog is rescanned on every
/// call so newly dropped files show up.
class DirectoryAssetSource : public AssetSource {
 public:
  explicit DirectoryAssetSource(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root_, ec)) throw Error(ErrorCode::RootNotFound, root_.string());
  }

  const std::filesystem::path& root() const { return root_; }

  std::vector<AssetEntry> catalog() override { return scan_assets(root_); }

  Mesh load_mesh(const std::string& name) override {
    const auto entry = find(name);
    if (!entry || entry->kind == AssetKind::ImageStack) {
      throw Error(ErrorCode::AssetNotFound, name);
    }
    return mesh_io::load_mesh(root_ / entry->name);
  }

  Volume load_stack(const std::string& name) override {
    const auto entry = find(name);
    if (!entry || entry->kind != AssetKind::ImageStack) throw Error(ErrorCode::AssetNotFound, name);
    return load_stack_dir(root_ / entry->name);
  }

 private:
  std::optional<AssetEntry> find(const std::string& name) {
    for (auto& e : catalog()) {
      if (e.name == name) return e;
    }
    return std::nullopt;
  }

  std::filesystem::path root_;
};

/// In-memory assets, for tests and embedding.
class MemoryAssetSource : public AssetSource {
 public:
  void add_mesh(std::string name, Mesh mesh, AssetKind kind = AssetKind::MeshObj) {
    meshes_[name] = std::move(mesh);
    kinds_[name] = kind;
  }
  void add_stack(std::string name, Volume v) {
    stacks_[name] = std::move(v);
    kinds_[name] = AssetKind::ImageStack;
  }
  /// A mesh asset whose loading fails with `error` (e.g. a corrupt file).
  void add_broken(std::string name, Error error, AssetKind kind = AssetKind::MeshStl) {
    broken_.insert_or_assign(name, std::move(error));
    kinds_[name] = kind;
  }

  std::vector<AssetEntry> catalog() override {
    std::vector<AssetEntry> out;
    for (const auto& [name, kind] : kinds_) {
      AssetEntry e{name, kind, 0, 0};
      if (auto it = stacks_.find(name); it != stacks_.end()) e.slice_count = it->second.dims.nz;
      out.push_back(e);
    }
    return out;
  }

  Mesh load_mesh(const std::string& name) override {
    if (auto it = broken_.find(name); it != broken_.end()) throw it->second;
    auto it = meshes_.find(name);
    if (it == meshes_.end()) throw Error(ErrorCode::AssetNotFound, name);
    return it->second;
  }

  Volume load_stack(const std::string& name) override {
    auto it = stacks_.find(name);
    if (it == stacks_.end()) throw Error(ErrorCode::AssetNotFound, name);
    return it->second;
  }

 private:
  std::map<std::string, Mesh> meshes_;
  std::map<std::string, Volume> stacks_;
  std::map<std::string, Error> broken_;
  std::map<std::string, AssetKind> kinds_;
};

}  // namespace ascribe
