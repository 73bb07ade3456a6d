// SPDX-License-Identifier: Apache-2.0
// Reference implementations used as independent oracles by the test and
// acceptance suites. Everything here is plain scalar code with no shared
// machinery with the library paths it checks.
#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "covqa/numcore/params.hpp"

namespace covqa::testing {

// Central finite differences (step h) of eval() with respect to every entry
// of every tensor in the store. eval must recompute the scalar from the
// store's current contents.
std::map<std::string, numcore::Tensor> fd_gradients(numcore::ParamStore& store,
                                                    const std::function<double()>& eval,
                                                    double step = 1e-3);

double rel_err(double a, double b, double floor = 1e-4);

// Max relative error between analytic and numeric gradient maps.
double max_rel_err(const std::map<std::string, numcore::Tensor>& analytic,
                   const std::map<std::string, numcore::Tensor>& numeric, double floor = 1e-4);

// Extended-precision softmax.
std::vector<double> softmax_reference(const std::vector<double>& logits);

// Scalar-loop GRU: r/z gates sigmoid, tanh candidate, h' = z h + (1-z) n.
std::vector<double> gru_reference(const std::vector<double>& x, const std::vector<double>& h,
                                  const std::vector<std::vector<double>>& wr,
                                  const std::vector<std::vector<double>>& ur,
                                  const std::vector<double>& br,
                                  const std::vector<std::vector<double>>& wz,
                                  const std::vector<std::vector<double>>& uz,
                                  const std::vector<double>& bz,
                                  const std::vector<std::vector<double>>& wn,
                                  const std::vector<std::vector<double>>& un,
                                  const std::vector<double>& bn);

// Brute-force GVR mirror: explicit double loops, full sort for top-k,
// no masking shortcuts.
struct GvrRefParams {
  std::vector<std::vector<double>> fuse_w;                // d_q x (d_v + d_q)
  std::vector<std::vector<std::vector<double>>> wq, wk, wv;  // head -> d_h x d_q
  std::vector<std::vector<double>> geo_w;                 // head -> d_h
};

struct GvrRefConfig {
  int d_q, d_v, heads, k;
  double geo_eps = 1e-3;
  double wavelength_scale = 1.0;
  double wavelength_progression = 1000.0;
};

// Distances from the non-smooth points of the kernel; finite-difference
// checks only use instances where all three margins are comfortable.
struct GvrRefDiagnostics {
  double min_geo_margin = 1e300;   // |w . emb| closest to the relu clip
  double min_topk_gap = 1e300;     // smallest selected-vs-excluded logit gap
  double min_out_margin = 1e300;   // |pre-relu| of outputs closest to 0
};

std::vector<std::vector<double>> gvr_reference(const std::vector<std::vector<double>>& V,
                                               const std::vector<double>& q,
                                               const std::vector<std::array<double, 4>>& boxes,
                                               const GvrRefParams& p, const GvrRefConfig& cfg,
                                               GvrRefDiagnostics* diag = nullptr);

// Independent corpus BLEU (percentages): modified n-gram precision with
// clipping, brevity penalty on closest reference length (ties toward the
// shorter), geometric mean of orders 1..max_n. Any zero precision gives 0.
double bleu_reference(const std::vector<std::vector<std::string>>& candidates,
                      const std::vector<std::vector<std::vector<std::string>>>& references,
                      int max_n);

}  // namespace covqa::testing
