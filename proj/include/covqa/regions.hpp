// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covqa/geomattn/geometry.hpp"
#include "covqa/numcore/tensor.hpp"

namespace covqa {

// Per-image visual input: M region feature vectors with their boxes.
struct RegionSet {
  numcore::Tensor features;  // M x feature_width
  std::vector<geomattn::BoundingBox> boxes;

  int count() const { return features.ndim() == 2 ? features.rows() : 0; }
  void validate() const;
};

inline void RegionSet::validate() const {
  if (features.ndim() != 2 || features.rows() < 1)
    throw std::invalid_argument("RegionSet: empty region set");
  if (static_cast<int>(boxes.size()) != features.rows())
    throw std::invalid_argument("RegionSet: box count does not match feature rows");
}

}  // namespace covqa
