// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/raster.hpp"
#include "hintbox/world/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hintbox::tools {

// Crop window applied to a scene: pixels [x1, x2) x [y1, y2) resampled by zoom.
struct CropView {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double zoom = 1.0;
  friend bool operator==(const CropView&, const CropView&) = default;
};

// Output raster size of a crop window.
std::pair<int, int> crop_dims(const CropView& view) noexcept;

// Ties an image to the synthetic world it depicts. `key` names the base
// scene in a scene store, `views` the crops applied on top of it, and
// `scene` is the resolved (already cropped) ground truth.
struct SceneBinding {
  std::string key;
  std::vector<CropView> views;
  world::SceneSpec scene;
};

struct ImageEntry {
  std::string ref;  // "image-k"
  Raster raster;
  std::optional<SceneBinding> scene;
  std::filesystem::path file;  // empty when the store is memory-only
};

bool is_image_ref(std::string_view ref) noexcept;

// Per-episode image registry. image-0 is the input; every rendered raster
// takes the next index. When constructed with a directory, rasters are also
// written there as image-<k>.ppm.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path dir);

  const ImageEntry& add(Raster raster, std::optional<SceneBinding> scene = std::nullopt);

  [[nodiscard]] const ImageEntry* find(std::string_view ref) const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] const std::vector<ImageEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<ImageEntry> entries_;
};

}  // namespace hintbox::tools
