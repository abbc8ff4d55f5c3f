// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hintbox::world {

struct PhysicalSize {
  double w = 0;  // meters
  double h = 0;
  friend bool operator==(const PhysicalSize&, const PhysicalSize&) = default;
};

// Pinhole intrinsics shared by every object in a scene.
struct Camera {
  double focal = 500.0;  // pixels
  double cx = 0.0;
  double cy = 0.0;
  friend bool operator==(const Camera&, const Camera&) = default;
};

struct SceneObject {
  std::string label;
  Box box;
  double mean_depth = 0.5;  // relative, [0, 1], larger = farther
  PhysicalSize size_m;
  Vec3 point3d;  // camera frame, meters
  int instance_id = 0;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

// Ground-truth synthetic world. The induced depth field is background_depth
// everywhere and each object's mean_depth inside its box, later objects
// overwriting earlier ones.
struct SceneSpec {
  std::string id;
  int width = 640;
  int height = 480;
  std::vector<SceneObject> objects;
  double background_depth = 1.0;
  std::uint64_t seed = 0;
  Camera camera;
  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

}  // namespace hintbox::world
