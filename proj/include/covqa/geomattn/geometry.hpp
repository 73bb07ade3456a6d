// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

namespace covqa::geomattn {

struct BoundingBox {
  double x = 0, y = 0;  // top-left, image units
  double w = 0, h = 0;  // strictly positive
};

// (log(|xi-xj|/wi), log(|yi-yj|/hi), log(wj/wi), log(hj/hi)); coordinate
// differences of exactly 0 are clamped to eps before the log. Throws on
// non-positive box extents.
std::array<double, 4> relative_geometry(const BoundingBox& bi, const BoundingBox& bj, double eps);

// Sinusoidal embedding of a 4-component geometry vector. Each component is
// expanded at dh/8 wavelengths scale*progression^(k/L) as interleaved
// (sin, cos) pairs. dh must be divisible by 8.
std::vector<double> sin_embed(const std::array<double, 4>& g, int dh, double wavelength_scale = 1.0,
                              double wavelength_progression = 1000.0);

// max(0, w . emb)
double box_weight(const std::vector<double>& w, const std::vector<double>& emb);

// Indices of the min(k, n) largest entries; ties broken toward the lower
// index. -inf entries are chosen only when fewer finite entries exist.
std::vector<int> topk_indices(const std::vector<double>& values, int k);

}  // namespace covqa::geomattn
