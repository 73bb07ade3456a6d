// SPDX-License-Identifier: Apache-2.0
#include "covqa/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace covqa::numcore {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw std::logic_error("ops: empty Var");
  return *v.tape();
}

void same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::logic_error("ops: operands on different tapes");
}

void require_vector(const Var& v, const char* who) {
  if (v.value().ndim() != 1) throw std::invalid_argument(std::string(who) + ": expected a vector");
}

void require_matrix(const Var& v, const char* who) {
  if (v.value().ndim() != 2) throw std::invalid_argument(std::string(who) + ": expected a matrix");
}

using Fwd = double (*)(double);
using Bwd = double (*)(double x, double y, double g);  // returns dL/dx contribution

Var unary(const Var& a, Fwd f, Bwd dfdx) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  int aid = a.id();
  return t.make(std::move(out), a.requires_grad(), [aid, dfdx](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(aid);
    const Tensor& y = tp.value(self);
    Tensor da(x.shape());
    for (int i = 0; i < x.size(); ++i) {
      double gi = g[i];
      da[i] = gi == 0.0 ? 0.0 : dfdx(x[i], y[i], gi);
    }
    tp.accumulate(aid, da);
  });
}

using Fwd2 = double (*)(double, double);

Var binary(const Var& a, const Var& b, Fwd2 f, Bwd dfda_xy, Bwd dfdb_xy) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv))
    throw std::invalid_argument("ops: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  Tensor out(av.shape());
  for (int i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  int aid = a.id(), bid = b.id();
  bool need = a.requires_grad() || b.requires_grad();
  return t.make(std::move(out), need, [aid, bid, dfda_xy, dfdb_xy](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av2 = tp.value(aid);
    const Tensor& bv2 = tp.value(bid);
    if (tp.wants_grad(aid)) {
      Tensor da(av2.shape());
      for (int i = 0; i < av2.size(); ++i) {
        double gi = g[i];
        da[i] = gi == 0.0 ? 0.0 : dfda_xy(av2[i], bv2[i], gi);
      }
      tp.accumulate(aid, da);
    }
    if (tp.wants_grad(bid)) {
      Tensor db(bv2.shape());
      for (int i = 0; i < bv2.size(); ++i) {
        double gi = g[i];
        db[i] = gi == 0.0 ? 0.0 : dfdb_xy(av2[i], bv2[i], gi);
      }
      tp.accumulate(bid, db);
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double g) { return g / y; },
      [](double x, double y, double g) { return -g * x / (y * y); });
}

Var scale(const Var& a, double c) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  int aid = a.id();
  return t.make(std::move(out), a.requires_grad(), [aid, c](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor da(g.shape());
    for (int i = 0; i < g.size(); ++i) da[i] = g[i] * c;
    tp.accumulate(aid, da);
  });
}

Var add_const(const Var& a, double c) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (int i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  int aid = a.id();
  return t.make(std::move(out), a.requires_grad(),
                [aid](Tape& tp, int self) { tp.accumulate(aid, tp.grad(self)); });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y, double g) { return g * y * (1.0 - y); });
}

Var tanh_v(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y, double g) { return g * (1.0 - y * y); });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double, double g) { return x > 0 ? g : 0.0; });
}

Var exp_v(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double, double y, double g) { return g * y; });
}

Var log_v(const Var& a) {
  const Tensor& av = a.value();
  for (int i = 0; i < av.size(); ++i)
    if (av[i] < 0.0) throw std::domain_error("log: negative input");
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double, double g) { return g / x; });
}

Var sqrt_v(const Var& a) {
  const Tensor& av = a.value();
  for (int i = 0; i < av.size(); ++i)
    if (av[i] < 0.0) throw std::domain_error("sqrt: negative input");
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double, double y, double g) { return g / (2.0 * y); });
}

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b);
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  int m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k)
    throw std::invalid_argument("matmul: inner dimensions disagree " + av.shape_str() + " x " + bv.shape_str());
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double aip = av.at(i, p);
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  int aid = a.id(), bid = b.id();
  bool need = a.requires_grad() || b.requires_grad();
  return tape_of(a).make(std::move(out), need, [aid, bid, m, k, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av2 = tp.value(aid);
    const Tensor& bv2 = tp.value(bid);
    if (tp.wants_grad(aid)) {
      Tensor da({m, k});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double gij = g.at(i, j);
          if (gij == 0.0) continue;
          for (int p = 0; p < k; ++p) da.at(i, p) += gij * bv2.at(p, j);
        }
      tp.accumulate(aid, da);
    }
    if (tp.wants_grad(bid)) {
      Tensor db({k, n});
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double aip = av2.at(i, p);
          if (aip == 0.0) continue;
          for (int j = 0; j < n; ++j) db.at(p, j) += aip * g.at(i, j);
        }
      tp.accumulate(bid, db);
    }
  });
}

Var matvec(const Var& w, const Var& x) {
  same_tape(w, x);
  require_matrix(w, "matvec");
  require_vector(x, "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  int m = wv.rows(), n = wv.cols();
  if (xv.size() != n) throw std::invalid_argument("matvec: dimension mismatch");
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += wv.at(i, j) * xv[j];
    out[i] = s;
  }
  int wid = w.id(), xid = x.id();
  bool need = w.requires_grad() || x.requires_grad();
  return tape_of(w).make(std::move(out), need, [wid, xid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& wv2 = tp.value(wid);
    const Tensor& xv2 = tp.value(xid);
    if (tp.wants_grad(wid)) {
      Tensor dw({m, n});
      for (int i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        for (int j = 0; j < n; ++j) dw.at(i, j) = gi * xv2[j];
      }
      tp.accumulate(wid, dw);
    }
    if (tp.wants_grad(xid)) {
      Tensor dx({n});
      for (int i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        for (int j = 0; j < n; ++j) dx[j] += gi * wv2.at(i, j);
      }
      tp.accumulate(xid, dx);
    }
  });
}

Var transpose(const Var& a) {
  require_matrix(a, "transpose");
  const Tensor& av = a.value();
  int m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor da({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da.at(i, j) = g.at(j, i);
    tp.accumulate(aid, da);
  });
}

Var sum(const Var& a) {
  const Tensor& av = a.value();
  double s = 0;
  for (int i = 0; i < av.size(); ++i) s += av[i];
  int aid = a.id();
  return tape_of(a).make(Tensor::scalar(s), a.requires_grad(), [aid](Tape& tp, int self) {
    double g = tp.grad(self)[0];
    if (g == 0.0) return;
    Tensor da(tp.value(aid).shape());
    for (int i = 0; i < da.size(); ++i) da[i] = g;
    tp.accumulate(aid, da);
  });
}

Var mean_rows(const Var& a) {
  require_matrix(a, "mean_rows");
  const Tensor& av = a.value();
  int m = av.rows(), n = av.cols();
  Tensor out({n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j] += av.at(i, j) / m;
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor da({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da.at(i, j) = g[j] / m;
    tp.accumulate(aid, da);
  });
}

Var row_sums(const Var& a) {
  require_matrix(a, "row_sums");
  const Tensor& av = a.value();
  int m = av.rows(), n = av.cols();
  Tensor out({m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i] += av.at(i, j);
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor da({m, n});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da.at(i, j) = g[i];
    tp.accumulate(aid, da);
  });
}

Var bcast(const Var& s, int n) {
  if (s.value().size() != 1) throw std::invalid_argument("bcast: expected scalar");
  Tensor out = Tensor::full({n}, s.value()[0]);
  int sid = s.id();
  return tape_of(s).make(std::move(out), s.requires_grad(), [sid](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    double acc = 0;
    for (int i = 0; i < g.size(); ++i) acc += g[i];
    tp.accumulate(sid, Tensor::scalar(acc));
  });
}

Var softmax(const Var& logits) { return softmax_masked(logits, {}); }

Var softmax_masked(const Var& logits, const std::vector<char>& masked) {
  require_vector(logits, "softmax");
  const Tensor& lv = logits.value();
  int n = lv.size();
  if (!masked.empty() && static_cast<int>(masked.size()) != n)
    throw std::invalid_argument("softmax: mask length mismatch");
  auto excluded = [&](int i) { return (!masked.empty() && masked[static_cast<size_t>(i)]) || lv[i] == kNegInf; };
  double mx = kNegInf;
  for (int i = 0; i < n; ++i)
    if (!excluded(i) && lv[i] > mx) mx = lv[i];
  if (mx == kNegInf) throw std::runtime_error("softmax: all entries masked or -inf");
  Tensor out({n});
  double z = 0;
  for (int i = 0; i < n; ++i) {
    if (excluded(i)) continue;
    out[i] = std::exp(lv[i] - mx);
    z += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
  int lid = logits.id();
  return tape_of(logits).make(std::move(out), logits.requires_grad(), [lid](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& y = tp.value(self);
    double s = 0;
    for (int i = 0; i < y.size(); ++i) s += g[i] * y[i];
    Tensor dl(y.shape());
    for (int i = 0; i < y.size(); ++i) dl[i] = y[i] == 0.0 ? 0.0 : y[i] * (g[i] - s);
    tp.accumulate(lid, dl);
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  Tape& t = tape_of(parts[0]);
  int total = 0;
  bool need = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require_vector(p, "concat");
    total += p.value().size();
    need = need || p.requires_grad();
  }
  Tensor out({total});
  int off = 0;
  std::vector<int> ids, sizes, offsets;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int i = 0; i < pv.size(); ++i) out[off + i] = pv[i];
    ids.push_back(p.id());
    sizes.push_back(pv.size());
    offsets.push_back(off);
    off += pv.size();
  }
  return t.make(std::move(out), need, [ids, sizes, offsets](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    for (size_t k = 0; k < ids.size(); ++k) {
      if (!tp.wants_grad(ids[k])) continue;
      Tensor d({sizes[k]});
      for (int i = 0; i < sizes[k]; ++i) d[i] = g[offsets[k] + i];
      tp.accumulate(ids[k], d);
    }
  });
}

Var slice(const Var& v, int begin, int len) {
  require_vector(v, "slice");
  const Tensor& vv = v.value();
  if (begin < 0 || len <= 0 || begin + len > vv.size()) throw std::out_of_range("slice: range");
  Tensor out({len});
  for (int i = 0; i < len; ++i) out[i] = vv[begin + i];
  int vid = v.id();
  return tape_of(v).make(std::move(out), v.requires_grad(), [vid, begin, len](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor d(tp.value(vid).shape());
    for (int i = 0; i < len; ++i) d[begin + i] = g[i];
    tp.accumulate(vid, d);
  });
}

Var row(const Var& a, int r) {
  require_matrix(a, "row");
  const Tensor& av = a.value();
  if (r < 0 || r >= av.rows()) throw std::out_of_range("row: index");
  int n = av.cols();
  Tensor out({n});
  for (int j = 0; j < n; ++j) out[j] = av.at(r, j);
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, r, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor d(tp.value(aid).shape());
    for (int j = 0; j < n; ++j) d.at(r, j) = g[j];
    tp.accumulate(aid, d);
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  Tape& t = tape_of(rows[0]);
  int n = rows[0].value().size();
  int m = static_cast<int>(rows.size());
  bool need = false;
  std::vector<int> ids;
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    same_tape(rows[0], rows[static_cast<size_t>(i)]);
    require_vector(rows[static_cast<size_t>(i)], "stack_rows");
    const Tensor& rv = rows[static_cast<size_t>(i)].value();
    if (rv.size() != n) throw std::invalid_argument("stack_rows: ragged rows");
    for (int j = 0; j < n; ++j) out.at(i, j) = rv[j];
    need = need || rows[static_cast<size_t>(i)].requires_grad();
    ids.push_back(rows[static_cast<size_t>(i)].id());
  }
  return t.make(std::move(out), need, [ids, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!tp.wants_grad(ids[i])) continue;
      Tensor d({n});
      for (int j = 0; j < n; ++j) d[j] = g.at(static_cast<int>(i), j);
      tp.accumulate(ids[i], d);
    }
  });
}

Var slice_cols(const Var& a, int c0, int len) {
  require_matrix(a, "slice_cols");
  const Tensor& av = a.value();
  int m = av.rows();
  if (c0 < 0 || len <= 0 || c0 + len > av.cols()) throw std::out_of_range("slice_cols: range");
  Tensor out({m, len});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < len; ++j) out.at(i, j) = av.at(i, c0 + j);
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, c0, len, m](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor d(tp.value(aid).shape());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < len; ++j) d.at(i, c0 + j) = g.at(i, j);
    tp.accumulate(aid, d);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Tape& t = tape_of(parts[0]);
  int m = parts[0].value().rows();
  int total = 0;
  bool need = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require_matrix(p, "concat_cols");
    if (p.value().rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
    total += p.value().cols();
    need = need || p.requires_grad();
  }
  Tensor out({m, total});
  std::vector<int> ids, widths, offsets;
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < pv.cols(); ++j) out.at(i, off + j) = pv.at(i, j);
    ids.push_back(p.id());
    widths.push_back(pv.cols());
    offsets.push_back(off);
    off += pv.cols();
  }
  return t.make(std::move(out), need, [ids, widths, offsets, m](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    for (size_t k = 0; k < ids.size(); ++k) {
      if (!tp.wants_grad(ids[k])) continue;
      Tensor d({m, widths[k]});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < widths[k]; ++j) d.at(i, j) = g.at(i, offsets[k] + j);
      tp.accumulate(ids[k], d);
    }
  });
}

Var reshape(const Var& a, std::vector<int> shape) {
  const Tensor& av = a.value();
  Tensor out(std::move(shape), av.data());
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor d(tp.value(aid).shape(), g.data());
    tp.accumulate(aid, d);
  });
}

Var dot(const Var& a, const Var& b) {
  same_tape(a, b);
  require_vector(a, "dot");
  require_vector(b, "dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0;
  for (int i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  int aid = a.id(), bid = b.id();
  bool need = a.requires_grad() || b.requires_grad();
  return tape_of(a).make(Tensor::scalar(s), need, [aid, bid](Tape& tp, int self) {
    double g = tp.grad(self)[0];
    if (g == 0.0) return;
    const Tensor& av2 = tp.value(aid);
    const Tensor& bv2 = tp.value(bid);
    if (tp.wants_grad(aid)) {
      Tensor d(av2.shape());
      for (int i = 0; i < av2.size(); ++i) d[i] = g * bv2[i];
      tp.accumulate(aid, d);
    }
    if (tp.wants_grad(bid)) {
      Tensor d(bv2.shape());
      for (int i = 0; i < bv2.size(); ++i) d[i] = g * av2[i];
      tp.accumulate(bid, d);
    }
  });
}

Var gather_rows(const Var& table, std::vector<int> ids) {
  require_matrix(table, "gather_rows");
  const Tensor& tv = table.value();
  int n = tv.cols();
  int m = static_cast<int>(ids.size());
  if (m == 0) throw std::invalid_argument("gather_rows: empty index list");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    int r = ids[static_cast<size_t>(i)];
    if (r < 0 || r >= tv.rows()) throw std::out_of_range("gather_rows: row index");
    for (int j = 0; j < n; ++j) out.at(i, j) = tv.at(r, j);
  }
  int tid = table.id();
  return tape_of(table).make(std::move(out), table.requires_grad(),
                             [tid, ids = std::move(ids), n](Tape& tp, int self) {
                               const Tensor& g = tp.grad(self);
                               Tensor d(tp.value(tid).shape());
                               for (size_t i = 0; i < ids.size(); ++i)
                                 for (int j = 0; j < n; ++j)
                                   d.at(ids[i], j) += g.at(static_cast<int>(i), j);
                               tp.accumulate(tid, d);
                             });
}

Var add_rowvec(const Var& a, const Var& v) {
  same_tape(a, v);
  require_matrix(a, "add_rowvec");
  require_vector(v, "add_rowvec");
  const Tensor& av = a.value();
  const Tensor& vv = v.value();
  int m = av.rows(), n = av.cols();
  if (vv.size() != n) throw std::invalid_argument("add_rowvec: width mismatch");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) + vv[j];
  int aid = a.id(), vid = v.id();
  bool need = a.requires_grad() || v.requires_grad();
  return tape_of(a).make(std::move(out), need, [aid, vid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    if (tp.wants_grad(aid)) tp.accumulate(aid, g);
    if (tp.wants_grad(vid)) {
      Tensor d({n});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d[j] += g.at(i, j);
      tp.accumulate(vid, d);
    }
  });
}

Var mul_rowvec(const Var& a, const Var& v) {
  same_tape(a, v);
  require_matrix(a, "mul_rowvec");
  require_vector(v, "mul_rowvec");
  const Tensor& av = a.value();
  const Tensor& vv = v.value();
  int m = av.rows(), n = av.cols();
  if (vv.size() != n) throw std::invalid_argument("mul_rowvec: width mismatch");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) * vv[j];
  int aid = a.id(), vid = v.id();
  bool need = a.requires_grad() || v.requires_grad();
  return tape_of(a).make(std::move(out), need, [aid, vid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av2 = tp.value(aid);
    const Tensor& vv2 = tp.value(vid);
    if (tp.wants_grad(aid)) {
      Tensor d({m, n});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d.at(i, j) = g.at(i, j) * vv2[j];
      tp.accumulate(aid, d);
    }
    if (tp.wants_grad(vid)) {
      Tensor d({n});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d[j] += g.at(i, j) * av2.at(i, j);
      tp.accumulate(vid, d);
    }
  });
}

Var mul_colvec(const Var& a, const Var& v) {
  same_tape(a, v);
  require_matrix(a, "mul_colvec");
  require_vector(v, "mul_colvec");
  const Tensor& av = a.value();
  const Tensor& vv = v.value();
  int m = av.rows(), n = av.cols();
  if (vv.size() != m) throw std::invalid_argument("mul_colvec: height mismatch");
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) * vv[i];
  int aid = a.id(), vid = v.id();
  bool need = a.requires_grad() || v.requires_grad();
  return tape_of(a).make(std::move(out), need, [aid, vid, m, n](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av2 = tp.value(aid);
    const Tensor& vv2 = tp.value(vid);
    if (tp.wants_grad(aid)) {
      Tensor d({m, n});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d.at(i, j) = g.at(i, j) * vv2[i];
      tp.accumulate(aid, d);
    }
    if (tp.wants_grad(vid)) {
      Tensor d({m});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d[i] += g.at(i, j) * av2.at(i, j);
      tp.accumulate(vid, d);
    }
  });
}

Var dropout(const Var& a, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
  if (!training || p == 0.0) return a;
  const Tensor& av = a.value();
  std::vector<double> keep(static_cast<size_t>(av.size()));
  double inv = 1.0 / (1.0 - p);
  Tensor out(av.shape());
  for (int i = 0; i < av.size(); ++i) {
    keep[static_cast<size_t>(i)] = rng.bernoulli(p) ? 0.0 : inv;
    out[i] = av[i] * keep[static_cast<size_t>(i)];
  }
  int aid = a.id();
  return tape_of(a).make(std::move(out), a.requires_grad(), [aid, keep = std::move(keep)](Tape& tp, int self) {
    const Tensor& g = tp.grad(self);
    Tensor d(g.shape());
    for (int i = 0; i < g.size(); ++i) d[i] = g[i] * keep[static_cast<size_t>(i)];
    tp.accumulate(aid, d);
  });
}

Var bce_with_logits(const Var& logits, Tensor targets) {
  require_vector(logits, "bce_with_logits");
  const Tensor& lv = logits.value();
  if (!lv.same_shape(targets)) throw std::invalid_argument("bce_with_logits: target length mismatch");
  double loss = 0;
  for (int i = 0; i < lv.size(); ++i) {
    double l = lv[i], t = targets[i];
    loss += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
  }
  int lid = logits.id();
  return tape_of(logits).make(Tensor::scalar(loss), logits.requires_grad(),
                              [lid, targets = std::move(targets)](Tape& tp, int self) {
                                double g = tp.grad(self)[0];
                                if (g == 0.0) return;
                                const Tensor& lv2 = tp.value(lid);
                                Tensor d(lv2.shape());
                                for (int i = 0; i < lv2.size(); ++i) {
                                  double l = lv2[i];
                                  double sig = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
                                  d[i] = g * (sig - targets[i]);
                                }
                                tp.accumulate(lid, d);
                              });
}

Var cross_entropy_logits(const Var& logits, int target) {
  require_vector(logits, "cross_entropy_logits");
  const Tensor& lv = logits.value();
  if (target < 0 || target >= lv.size()) throw std::out_of_range("cross_entropy_logits: target index");
  double mx = lv[0];
  for (int i = 1; i < lv.size(); ++i) mx = std::max(mx, lv[i]);
  double z = 0;
  for (int i = 0; i < lv.size(); ++i) z += std::exp(lv[i] - mx);
  double loss = std::log(z) + mx - lv[target];
  int lid = logits.id();
  return tape_of(logits).make(Tensor::scalar(loss), logits.requires_grad(), [lid, target](Tape& tp, int self) {
    double g = tp.grad(self)[0];
    if (g == 0.0) return;
    const Tensor& lv2 = tp.value(lid);
    double mx2 = lv2[0];
    for (int i = 1; i < lv2.size(); ++i) mx2 = std::max(mx2, lv2[i]);
    double z2 = 0;
    for (int i = 0; i < lv2.size(); ++i) z2 += std::exp(lv2[i] - mx2);
    Tensor d(lv2.shape());
    for (int i = 0; i < lv2.size(); ++i) d[i] = g * (std::exp(lv2[i] - mx2) / z2 - (i == target ? 1.0 : 0.0));
    tp.accumulate(lid, d);
  });
}

Var gru_cell(const GruCellVars& p, const Var& x, const Var& h) {
  Var r = sigmoid(add(add(matvec(p.wr, x), matvec(p.ur, h)), p.br));
  Var z = sigmoid(add(add(matvec(p.wz, x), matvec(p.uz, h)), p.bz));
  Var n = tanh_v(add(add(matvec(p.wn, x), matvec(p.un, mul(r, h))), p.bn));
  // h' = z*h + (1-z)*n
  return add(n, mul(z, sub(h, n)));
}

int argmax(const Tensor& t) {
  int best = 0;
  for (int i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return best;
}

}  // namespace covqa::numcore
