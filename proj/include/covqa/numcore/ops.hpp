// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covqa/numcore/rng.hpp"
#include "covqa/numcore/tape.hpp"

namespace covqa::numcore {

// Elementwise (same shape unless noted).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var sigmoid(const Var& a);
Var tanh_v(const Var& a);
Var relu(const Var& a);
Var exp_v(const Var& a);
Var log_v(const Var& a);  // log(0) -> -inf (mask sentinel), negative input throws
Var sqrt_v(const Var& a);

// Linear algebra.
Var matmul(const Var& a, const Var& b);  // {m,k} x {k,n} -> {m,n}
Var matvec(const Var& w, const Var& x);  // {m,n} x {n} -> {m}
Var transpose(const Var& a);

// Reductions / broadcasts.
Var sum(const Var& a);        // -> {1}
Var mean_rows(const Var& a);  // {m,n} -> {n}
Var row_sums(const Var& a);   // {m,n} -> {m}
Var bcast(const Var& s, int n);  // {1} -> {n}

// Softmax over a vector; masked entries and -inf logits map to exact 0.
// Throws when no unmasked finite entry exists.
Var softmax(const Var& logits);
Var softmax_masked(const Var& logits, const std::vector<char>& masked);

// Shape surgery.
Var concat(const std::vector<Var>& parts);       // vectors -> vector
Var slice(const Var& v, int begin, int len);     // vector slice
Var row(const Var& a, int r);                    // matrix row -> vector
Var stack_rows(const std::vector<Var>& rows);    // vectors -> matrix
Var slice_cols(const Var& a, int c0, int len);   // matrix column block
Var concat_cols(const std::vector<Var>& parts);  // matrices -> matrix
Var reshape(const Var& a, std::vector<int> shape);

Var dot(const Var& a, const Var& b);                     // vectors -> {1}
Var gather_rows(const Var& table, std::vector<int> ids); // embedding lookup
Var add_rowvec(const Var& a, const Var& v);              // each row + v
Var mul_rowvec(const Var& a, const Var& v);              // each row * v
Var mul_colvec(const Var& a, const Var& v);              // row i scaled by v[i]

// Inverted dropout; identity when not training or p == 0.
Var dropout(const Var& a, double p, Rng& rng, bool training);

// Losses (sum-reduced scalars).
Var bce_with_logits(const Var& logits, Tensor targets);
Var cross_entropy_logits(const Var& logits, int target);

// Standard GRU update: reset/update gates (sigmoid), tanh candidate,
// h' = z*h + (1-z)*n. Parameter matrices are {hidden,in} / {hidden,hidden}.
struct GruCellVars {
  Var wr, ur, br;
  Var wz, uz, bz;
  Var wn, un, bn;
};
Var gru_cell(const GruCellVars& p, const Var& x, const Var& h);

int argmax(const Tensor& t);

}  // namespace covqa::numcore
