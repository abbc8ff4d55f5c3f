// SPDX-License-Identifier: Apache-2.0
#include "hintbox/tools/image_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace hintbox::tools {

bool is_image_ref(std::string_view ref) noexcept {
  constexpr std::string_view prefix = "image-";
  if (!ref.starts_with(prefix) || ref.size() == prefix.size()) return false;
  for (char c : ref.substr(prefix.size())) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

ImageStore::ImageStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

const ImageEntry& ImageStore::add(Raster raster, std::optional<SceneBinding> scene) {
  ImageEntry e;
  e.ref = "image-" + std::to_string(entries_.size());
  e.raster = std::move(raster);
  e.scene = std::move(scene);
  if (!dir_.empty()) {
    e.file = dir_ / (e.ref + ".ppm");
    if (!write_ppm(e.raster, e.file)) throw std::runtime_error("cannot write " + e.file.string());
  }
  entries_.push_back(std::move(e));
  return entries_.back();
}

const ImageEntry* ImageStore::find(std::string_view ref) const {
  if (!is_image_ref(ref)) return nullptr;
  std::size_t k = 0;
  for (char c : ref.substr(6)) {
    k = k * 10 + static_cast<std::size_t>(c - '0');
    if (k > entries_.size()) return nullptr;
  }
  return k < entries_.size() ? &entries_[k] : nullptr;
}


std::pair<int, int> crop_dims(const CropView& view) noexcept {
  const auto dim = [&](double lo, double hi) {
    const auto v = static_cast<long>(std::lround((hi - lo) * view.zoom));
    return static_cast<int>(std::max(1L, v));
  };
  return {dim(view.x1, view.x2), dim(view.y1, view.y2)};
}

}  // namespace hintbox::tools
