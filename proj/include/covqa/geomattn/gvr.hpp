// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/geomattn/geometry.hpp"
#include "covqa/numcore/nn.hpp"

namespace covqa::geomattn {

struct GvrConfig {
  int d_q = 64;   // hidden width (paper 768)
  int d_v = 64;   // visual width (paper 768)
  int heads = 4;  // paper 8
  int k = 5;      // neighborhood size, paper 15
  double geo_eps = 1e-3;
  double wavelength_scale = 1.0;
  double wavelength_progression = 1000.0;

  int d_h() const { return d_q / heads; }
  void validate() const;
};

// Question-conditioned multi-head graph attention over region features with
// geometric edge priors. One instance owns one parameter set; the parameter
// prefix keeps multiple instances (chain vs fusion) distinct in a store.
class Gvr {
 public:
  Gvr() = default;
  Gvr(GvrConfig cfg, std::string prefix);

  void init(numcore::ParamStore& ps, numcore::Rng& rng) const;

  const GvrConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }

  // v'_i = W [v_i || q] for every node.
  numcore::Var joint_embedding(const numcore::VarMap& vm, const numcore::Var& V,
                               const numcore::Var& q) const;

  // Per-head M x M unnormalized logits: scaled dot-product visual term plus
  // log of the clipped geometry weight; fully clipped edges carry -inf.
  std::vector<numcore::Var> edge_logits(const numcore::VarMap& vm, const numcore::Var& nodes,
                                        const std::vector<BoundingBox>& boxes) const;

  struct Forward {
    numcore::Var output;                          // M x d_q
    std::vector<numcore::Tensor> head_attention;  // per head M x M selected weights
  };

  Forward forward(const numcore::VarMap& vm, const numcore::Var& V, const numcore::Var& q,
                  const std::vector<BoundingBox>& boxes) const;

 private:
  GvrConfig cfg_;
  std::string prefix_;
};

// Column-wise sum of per-head attention maps: how much mass flows *into*
// each node. Used as the attention value for trace dumps.
std::vector<double> in_degree(const std::vector<numcore::Tensor>& head_attention);

}  // namespace covqa::geomattn
