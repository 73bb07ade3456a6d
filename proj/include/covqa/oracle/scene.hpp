// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/geomattn/geometry.hpp"

namespace covqa::oracle {

struct SceneObject {
  std::string label;
  std::string color;
  std::string size;
  geomattn::BoundingBox box;
};

// Synthetic ground-truth annotation; labels come from a closed vocabulary and
// boxes lie inside the canvas.
struct Scene {
  int image_id = 0;
  double canvas_w = 100, canvas_h = 100;
  std::vector<SceneObject> objects;
};

}  // namespace covqa::oracle
