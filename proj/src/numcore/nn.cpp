// SPDX-License-Identifier: Apache-2.0
#include "covqa/numcore/nn.hpp"

#include <cmath>

namespace covqa::numcore {

void Linear::init(ParamStore& ps, Rng& rng) const {
  double bound = fan_in_bound(in);
  if (weight_norm) {
    Tensor& v = ps.add_uniform(name + ".v", {out, in}, rng, bound);
    Tensor& g = ps.add(name + ".g", {out});
    for (int r = 0; r < out; ++r) {
      double s = 0;
      for (int c = 0; c < in; ++c) s += v.at(r, c) * v.at(r, c);
      g[r] = std::sqrt(s);
    }
  } else {
    ps.add_uniform(name + ".w", {out, in}, rng, bound);
  }
  if (bias) ps.add(name + ".b", {out});
}

Var Linear::weight(const VarMap& vm) const {
  if (!weight_norm) return lookup(vm, name + ".w");
  Var v = lookup(vm, name + ".v");
  Var g = lookup(vm, name + ".g");
  Var norms = sqrt_v(row_sums(mul(v, v)));
  return mul_colvec(v, div(g, norms));
}

Var Linear::apply(const VarMap& vm, const Var& x) const {
  Var y = matvec(weight(vm), x);
  return bias ? add(y, lookup(vm, name + ".b")) : y;
}

Var Linear::apply_rows(const VarMap& vm, const Var& X) const {
  Var y = matmul(X, transpose(weight(vm)));
  return bias ? add_rowvec(y, lookup(vm, name + ".b")) : y;
}

void GruCell::init(ParamStore& ps, Rng& rng) const {
  double bx = fan_in_bound(in), bh = fan_in_bound(hidden);
  for (const char* gate : {"r", "z", "n"}) {
    ps.add_uniform(name + ".w" + gate, {hidden, in}, rng, bx);
    ps.add_uniform(name + ".u" + gate, {hidden, hidden}, rng, bh);
    ps.add(name + ".b" + gate, {hidden});
  }
}

GruCellVars GruCell::vars(const VarMap& vm) const {
  return GruCellVars{lookup(vm, name + ".wr"), lookup(vm, name + ".ur"), lookup(vm, name + ".br"),
                     lookup(vm, name + ".wz"), lookup(vm, name + ".uz"), lookup(vm, name + ".bz"),
                     lookup(vm, name + ".wn"), lookup(vm, name + ".un"), lookup(vm, name + ".bn")};
}

Var GruCell::step(const VarMap& vm, const Var& x, const Var& h) const {
  return gru_cell(vars(vm), x, h);
}

Var layernorm_rows(const VarMap& vm, const Var& X, const std::string& gain_name,
                   const std::string& bias_name, double eps) {
  Var gain = lookup(vm, gain_name);
  Var bias = lookup(vm, bias_name);
  int m = X.value().rows();
  int n = X.value().cols();
  std::vector<Var> rows;
  rows.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    Var v = row(X, i);
    Var mu = scale(sum(v), 1.0 / n);
    Var centered = sub(v, bcast(mu, n));
    Var variance = scale(sum(mul(centered, centered)), 1.0 / n);
    Var denom = bcast(sqrt_v(add_const(variance, eps)), n);
    rows.push_back(add(mul(div(centered, denom), gain), bias));
  }
  return stack_rows(rows);
}

}  // namespace covqa::numcore
