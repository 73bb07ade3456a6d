// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "covqa/numcore/ops.hpp"
#include "covqa/numcore/params.hpp"

namespace covqa::numcore {

inline double fan_in_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

// Affine map with optional direction/magnitude weight-norm reparameterization:
// W = diag(g / ||v_row||) v. Parameters live under <name>.v/.g/.b (or .w/.b
// when weight_norm is off). Initial g equals the row norms of v, so the
// initial effective weight is v itself.
struct Linear {
  std::string name;
  int in = 0, out = 0;
  bool weight_norm = true;
  bool bias = true;

  void init(ParamStore& ps, Rng& rng) const;
  Var weight(const VarMap& vm) const;
  Var apply(const VarMap& vm, const Var& x) const;       // {in} -> {out}
  Var apply_rows(const VarMap& vm, const Var& X) const;  // {m,in} -> {m,out}
};

struct GruCell {
  std::string name;
  int in = 0, hidden = 0;

  void init(ParamStore& ps, Rng& rng) const;
  GruCellVars vars(const VarMap& vm) const;
  Var step(const VarMap& vm, const Var& x, const Var& h) const;
  Var zero_state(Tape& tape) const { return tape.leaf(Tensor({hidden})); }
};

// relu MLP with one hidden layer; dropout applies to the hidden activation.
struct Mlp2 {
  Linear l1, l2;
  double hidden_dropout = 0.0;

  void init(ParamStore& ps, Rng& rng) const {
    l1.init(ps, rng);
    l2.init(ps, rng);
  }
  Var apply(const VarMap& vm, const Var& x, Rng* rng = nullptr, bool training = false) const {
    Var h = relu(l1.apply(vm, x));
    if (training && rng && hidden_dropout > 0.0) h = dropout(h, hidden_dropout, *rng, true);
    return l2.apply(vm, h);
  }
};

// Per-row layer normalization with learned gain/bias vectors.
Var layernorm_rows(const VarMap& vm, const Var& X, const std::string& gain_name,
                   const std::string& bias_name, double eps = 1e-5);

}  // namespace covqa::numcore
