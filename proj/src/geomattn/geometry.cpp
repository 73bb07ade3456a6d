// SPDX-License-Identifier: Apache-2.0
#include "covqa/geomattn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace covqa::geomattn {

std::array<double, 4> relative_geometry(const BoundingBox& bi, const BoundingBox& bj, double eps) {
  if (bi.w <= 0 || bi.h <= 0 || bj.w <= 0 || bj.h <= 0)
    throw std::invalid_argument("relative_geometry: non-positive box extent");
  double dx = std::abs(bi.x - bj.x);
  double dy = std::abs(bi.y - bj.y);
  if (dx == 0.0) dx = eps;
  if (dy == 0.0) dy = eps;
  return {std::log(dx / bi.w), std::log(dy / bi.h), std::log(bj.w / bi.w), std::log(bj.h / bi.h)};
}

std::vector<double> sin_embed(const std::array<double, 4>& g, int dh, double wavelength_scale,
                              double wavelength_progression) {
  if (dh <= 0 || dh % 8 != 0) throw std::invalid_argument("sin_embed: dh must be a positive multiple of 8");
  int waves = dh / 8;
  std::vector<double> out;
  out.reserve(static_cast<size_t>(dh));
  for (double component : g) {
    for (int k = 0; k < waves; ++k) {
      double lambda = wavelength_scale * std::pow(wavelength_progression, static_cast<double>(k) / waves);
      double angle = component / lambda;
      out.push_back(std::sin(angle));
      out.push_back(std::cos(angle));
    }
  }
  return out;
}

double box_weight(const std::vector<double>& w, const std::vector<double>& emb) {
  if (w.size() != emb.size()) throw std::invalid_argument("box_weight: dimension mismatch");
  double s = std::inner_product(w.begin(), w.end(), emb.begin(), 0.0);
  return std::max(0.0, s);
}

std::vector<int> topk_indices(const std::vector<double>& values, int k) {
  int n = static_cast<int>(values.size());
  if (n == 0) throw std::invalid_argument("topk_indices: empty input");
  for (double v : values)
    if (std::isnan(v)) throw std::invalid_argument("topk_indices: NaN input");
  int take = std::min(k, n);
  if (take < 1) throw std::invalid_argument("topk_indices: k < 1");
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
    double va = values[static_cast<size_t>(a)], vb = values[static_cast<size_t>(b)];
    if (va != vb) return va > vb;
    return a < b;
  });
  idx.resize(static_cast<size_t>(take));
  return idx;
}

}  // namespace covqa::geomattn
