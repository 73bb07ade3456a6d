// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "covqa/numcore/nn.hpp"
#include "covqa/numcore/ops.hpp"
#include "covqa/numcore/optim.hpp"
#include "covqa/numcore/params.hpp"
#include "oracles.hpp"

using namespace covqa::numcore;
namespace tst = covqa::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Max relative FD error of a scalar graph over every tensor in the store.
// The floor bounds the denominator from below: gradients smaller than it are
// compared with absolute tolerance floor * 1e-4, which keeps FD truncation
// noise at the spec step size from dominating near-cancelled entries.
double op_grad_err(ParamStore& ps, const std::function<Var(Tape&, const VarMap&)>& graph,
                   double floor = 1e-4) {
  Tape tape;
  VarMap vm = ps.lift(tape, true);
  Var loss = graph(tape, vm);
  tape.backward(loss);
  std::map<std::string, Tensor> analytic;
  for (auto& [name, var] : vm) analytic[name] = var.grad();
  auto numeric = tst::fd_gradients(ps, [&] {
    Tape t2;
    VarMap vm2 = ps.lift(t2, false);
    return graph(t2, vm2).value()[0];
  });
  return tst::max_rel_err(analytic, numeric, floor);
}

// Projects a vector/matrix output to a scalar with fixed weights.
Var project(Tape& tape, const Var& out, const Tensor& w) {
  Var wv = tape.leaf(w);
  if (out.value().ndim() == 1) return dot(out, wv);
  return sum(mul(out, wv));
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS(Tensor({2, 3}, {1.0, 2.0}));
  CHECK_THROWS(Tensor({0, 3}));
  CHECK_THROWS(Tensor({-1}));
  Tensor t({2, 2}, {1, 2, 3, 4});
  CHECK(t.at(1, 0) == 3.0);
  CHECK_THROWS(t.at(2, 0));
}

TEST_CASE("matmul examples") {
  Tape tape;
  Var I = tape.leaf(Tensor({2, 2}, {1, 0, 0, 1}));
  Var A = tape.leaf(Tensor({2, 2}, {3, -1, 2, 5}));
  Var P = matmul(I, A);
  for (int i = 0; i < 4; ++i) CHECK(P.value()[i] == A.value()[i]);

  Var B = tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  Var C = tape.leaf(Tensor({2, 1}, {5, 6}));
  Var R = matmul(B, C);
  CHECK(R.value()[0] == 17.0);
  CHECK(R.value()[1] == 39.0);

  Var Z = tape.leaf(Tensor({1, 3}));
  Var D = tape.leaf(Tensor({3, 2}, {9, 8, 7, 6, 5, 4}));
  Var ZR = matmul(Z, D);
  CHECK(ZR.value()[0] == 0.0);
  CHECK(ZR.value()[1] == 0.0);

  CHECK_THROWS(matmul(B, Z));
}

TEST_CASE("softmax contract") {
  Tape tape;
  Var u = softmax(tape.leaf(Tensor({3}, {0, 0, 0})));
  for (int i = 0; i < 3; ++i) CHECK(u.value()[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Var masked_edge = softmax(tape.leaf(Tensor({2}, {-kInf, 0.0})));
  CHECK(masked_edge.value()[0] == 0.0);
  CHECK(masked_edge.value()[1] == 1.0);

  Var v = softmax(tape.leaf(Tensor({3}, {1, 2, 3})));
  auto ref = tst::softmax_reference({1, 2, 3});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(v.value()[i] - ref[static_cast<size_t>(i)]) < 1e-12);

  CHECK_THROWS(softmax(tape.leaf(Tensor({2}, {-kInf, -kInf}))));
  CHECK_THROWS(softmax_masked(tape.leaf(Tensor({2}, {1, 2})), {1, 1}));

  Var m = softmax_masked(tape.leaf(Tensor({3}, {5, 1, 5})), {0, 1, 0});
  CHECK(m.value()[1] == 0.0);
  CHECK(m.value()[0] + m.value()[2] == doctest::Approx(1.0).epsilon(1e-9));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int n = rng.uniform_int(2, 9);
    Tensor logits = random_tensor({n}, rng, -4, 4);
    Tape t2;
    Var s = softmax(t2.leaf(logits));
    double total = 0;
    for (int i = 0; i < n; ++i) total += s.value()[i];
    CHECK(std::abs(total - 1.0) < 1e-9);

    double shift = rng.uniform(-50, 50);
    Tensor shifted = logits;
    for (double& x : shifted.data()) x += shift;
    Var s2 = softmax(t2.leaf(shifted));
    for (int i = 0; i < n; ++i) CHECK(std::abs(s.value()[i] - s2.value()[i]) < 1e-12);
  }
}

TEST_CASE("gru cell against scalar reference") {
  SUBCASE("all zeros give zero state") {
    Tape tape;
    GruCell cell{"g", 3, 3};
    ParamStore ps;
    Rng rng(0);
    cell.init(ps, rng);
    for (auto& [name, t] : ps.all())
      for (double& v : t.data()) v = 0.0;
    VarMap vm = ps.lift(tape, false);
    Var h = cell.step(vm, tape.leaf(Tensor({3})), tape.leaf(Tensor({3})));
    for (int i = 0; i < 3; ++i) CHECK(h.value()[i] == 0.0);
  }

  SUBCASE("saturated update gate keeps previous state") {
    Tape tape;
    GruCell cell{"g", 2, 2};
    ParamStore ps;
    Rng rng(1);
    cell.init(ps, rng);
    for (double& v : ps.get("g.bz").data()) v = 50.0;
    VarMap vm = ps.lift(tape, false);
    Tensor h0({2}, {0.3, -0.7});
    Var h = cell.step(vm, tape.leaf(random_tensor({2}, rng)), tape.leaf(h0));
    for (int i = 0; i < 2; ++i) CHECK(h.value()[i] == doctest::Approx(h0[i]).epsilon(1e-9));
  }

  SUBCASE("random case matches reference within 1e-12") {
    Rng rng(2);
    GruCell cell{"g", 3, 3};
    ParamStore ps;
    cell.init(ps, rng);
    Tensor x = random_tensor({3}, rng), h = random_tensor({3}, rng);
    Tape tape;
    VarMap vm = ps.lift(tape, false);
    Var out = cell.step(vm, tape.leaf(x), tape.leaf(h));

    auto mat = [&](const std::string& n) {
      const Tensor& t = ps.get(n);
      std::vector<std::vector<double>> m(static_cast<size_t>(t.rows()),
                                         std::vector<double>(static_cast<size_t>(t.cols())));
      for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) m[static_cast<size_t>(r)][static_cast<size_t>(c)] = t.at(r, c);
      return m;
    };
    auto vec = [&](const std::string& n) { return ps.get(n).data(); };
    auto ref = tst::gru_reference(x.data(), h.data(), mat("g.wr"), mat("g.ur"), vec("g.br"),
                                  mat("g.wz"), mat("g.uz"), vec("g.bz"), mat("g.wn"), mat("g.un"),
                                  vec("g.bn"));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(out.value()[i] - ref[static_cast<size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("backward basics") {
  Tape tape;
  Var x = tape.leaf(Tensor({4}, {1, 2, 3, 4}), true);
  Var loss = sum(x);
  tape.backward(loss);
  for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == 1.0);

  Tape t2;
  Var y = t2.leaf(Tensor({3}, {1.5, -2, 0.5}), true);
  t2.backward(dot(y, y));
  for (int i = 0; i < 3; ++i) CHECK(y.grad()[i] == doctest::Approx(2 * y.value()[i]));

  Tape t3;
  Var v = t3.leaf(Tensor({2}, {1, 2}), true);
  CHECK_THROWS(t3.backward(v));          // not scalar
  CHECK_THROWS(t2.backward(sum(v)));     // recorded on a different tape

  // non-participating tensors keep zero gradient
  Tape t4;
  Var a = t4.leaf(Tensor({2}, {1, 1}), true);
  Var b = t4.leaf(Tensor({2}, {2, 2}), true);
  t4.backward(sum(a));
  CHECK(b.grad()[0] == 0.0);
  CHECK(b.grad()[1] == 0.0);
}

TEST_CASE("gradient suite: every differentiable op vs central differences") {
  Rng rng(42);
  double worst = 0;
  auto run = [&](const std::string& name, const std::function<double(Rng&)>& one) {
    double w = 0;
    for (int i = 0; i < 20; ++i) w = std::max(w, one(rng));
    INFO("op group: ", name);
    CHECK(w < 1e-4);
    worst = std::max(worst, w);
  };

  run("add/sub/mul", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {3, 2});
    ps.add("b", {3, 2});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-2, 2);
    Tensor w = random_tensor({3, 2}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      Var s = mul(add(lookup(vm, "a"), lookup(vm, "b")), sub(lookup(vm, "a"), lookup(vm, "b")));
      return project(t, s, w);
    });
  });

  run("div", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {4});
    ps.add("b", {4});
    for (double& v : ps.get("a").data()) v = r.uniform(-2, 2);
    for (double& v : ps.get("b").data()) v = r.uniform(0.4, 2.0) * (r.bernoulli(0.5) ? 1 : -1);
    Tensor w = random_tensor({4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, div(lookup(vm, "a"), lookup(vm, "b")), w);
    });
  });

  run("scale/add_const/neg path", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {5});
    for (double& v : ps.get("a").data()) v = r.uniform(-2, 2);
    Tensor w = random_tensor({5}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, add_const(scale(lookup(vm, "a"), -1.7), 0.3), w);
    });
  });

  run("sigmoid/tanh/exp", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {4});
    for (double& v : ps.get("a").data()) v = r.uniform(-2, 2);
    Tensor w = random_tensor({4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, exp_v(scale(tanh_v(sigmoid(lookup(vm, "a"))), 0.5)), w);
    });
  });

  run("relu (inputs away from the kink)", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {6});
    for (double& v : ps.get("a").data()) {
      v = r.uniform(-2, 2);
      if (std::abs(v) < 0.05) v = 0.1;
    }
    Tensor w = random_tensor({6}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) { return project(t, relu(lookup(vm, "a")), w); });
  });

  run("log/sqrt", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {4});
    for (double& v : ps.get("a").data()) v = r.uniform(0.3, 2.0);
    Tensor w = random_tensor({4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, log_v(sqrt_v(lookup(vm, "a"))), w);
    });
  });

  run("matmul", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {3, 4});
    ps.add("b", {4, 2});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({3, 2}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, matmul(lookup(vm, "a"), lookup(vm, "b")), w);
    });
  });

  run("matvec/transpose", [](Rng& r) {
    ParamStore ps;
    ps.add("w", {3, 4});
    ps.add("x", {3});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, matvec(transpose(lookup(vm, "w")), lookup(vm, "x")), w);
    });
  });

  run("reductions", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {4, 3});
    for (double& v : ps.get("a").data()) v = r.uniform(-1, 1);
    Tensor w1 = random_tensor({3}, r), w2 = random_tensor({4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      Var a = lookup(vm, "a");
      Var s1 = dot(mean_rows(a), t.leaf(w1));
      Var s2 = dot(row_sums(a), t.leaf(w2));
      return add(add(s1, s2), sum(bcast(sum(a), 3)));
    });
  });

  run("softmax", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {5});
    for (double& v : ps.get("a").data()) v = r.uniform(-3, 3);
    Tensor w = random_tensor({5}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, softmax(lookup(vm, "a")), w);
    });
  });

  run("masked softmax", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {6});
    for (double& v : ps.get("a").data()) v = r.uniform(-3, 3);
    std::vector<char> mask = {0, 1, 0, 0, 1, 0};
    Tensor w = random_tensor({6}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, softmax_masked(lookup(vm, "a"), mask), w);
    });
  });

  run("shape surgery", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {3, 4});
    ps.add("b", {5});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({2, 2}, r);
    Tensor w2 = random_tensor({9}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      Var a = lookup(vm, "a");
      Var b = lookup(vm, "b");
      Var s1 = project(t, slice_cols(a, 1, 2), Tensor({3, 2}, {1, -1, 0.5, 2, -0.3, 1}));
      Var s2 = project(t, reshape(slice(b, 1, 4), {2, 2}), w);
      Var s3 = project(t, concat({row(a, 0), row(a, 2), slice(b, 0, 1)}), w2);
      return add(add(s1, s2), s3);
    });
  });

  run("stack/concat_cols/gather", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {4, 3});
    ps.add("b", {2, 2});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({3, 5}, r);
    Tensor w2 = random_tensor({3, 3}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      Var a = lookup(vm, "a");
      Var b = lookup(vm, "b");
      Var g = gather_rows(a, {0, 2, 2});  // duplicate index accumulates
      Var st = stack_rows({row(b, 0), row(b, 1), row(b, 0)});
      Var cc = concat_cols({g, st});
      return add(project(t, cc, w), project(t, g, w2));
    });
  });

  run("row/col broadcasts", [](Rng& r) {
    ParamStore ps;
    ps.add("a", {3, 4});
    ps.add("rv", {4});
    ps.add("cv", {3});
    for (auto& [n, t] : ps.all())
      for (double& v : t.data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({3, 4}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      Var y = mul_colvec(mul_rowvec(add_rowvec(lookup(vm, "a"), lookup(vm, "rv")), lookup(vm, "rv")),
                         lookup(vm, "cv"));
      return project(t, y, w);
    });
  });

  run("losses", [](Rng& r) {
    ParamStore ps;
    ps.add("l", {5});
    for (double& v : ps.get("l").data()) v = r.uniform(-2, 2);
    Tensor targets({5}, {1, 0, 0.7, 0, 0.2});
    return op_grad_err(ps, [&](Tape&, const VarMap& vm) {
      Var l = lookup(vm, "l");
      return add(bce_with_logits(l, targets), cross_entropy_logits(l, 2));
    });
  });

  run("gru_cell", [](Rng& r) {
    ParamStore ps;
    GruCell cell{"g", 3, 2};
    cell.init(ps, r);
    ps.add("x", {3});
    ps.add("h", {2});
    for (double& v : ps.get("x").data()) v = r.uniform(-1, 1);
    for (double& v : ps.get("h").data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({2}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, cell.step(vm, lookup(vm, "x"), lookup(vm, "h")), w);
    });
  });

  run("weight-norm linear", [](Rng& r) {
    ParamStore ps;
    Linear lin{"l", 4, 3, true, true};
    lin.init(ps, r);
    // keep direction rows well away from zero norm
    for (double& v : ps.get("l.v").data()) v = r.uniform(0.25, 0.6) * (r.bernoulli(0.5) ? 1 : -1);
    ps.add("x", {4});
    for (double& v : ps.get("x").data()) v = r.uniform(-1, 1);
    Tensor w = random_tensor({3}, r);
    return op_grad_err(ps, [&](Tape& t, const VarMap& vm) {
      return project(t, lin.apply(vm, lookup(vm, "x")), w);
    });
  });

  run("layernorm", [](Rng& r) {
    ParamStore ps;
    ps.add("x", {3, 4});
    // guaranteed per-row spread so the row variance stays away from 0
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 4; ++col)
        ps.get("x").at(row, col) = r.uniform(-0.3, 0.3) + (col - 1.5);
    ps.add_full("ln.g", {4}, 1.0);
    ps.add("ln.b", {4});
    Tensor w = random_tensor({3, 4}, r);
    return op_grad_err(
        ps,
        [&](Tape& t, const VarMap& vm) {
          return project(t, layernorm_rows(vm, lookup(vm, "x"), "ln.g", "ln.b"), w);
        },
        1e-3);
  });

  std::printf("op gradient suite worst relative error: %.3g\n", worst);
}

TEST_CASE("dropout semantics") {
  Rng rng(5);
  Tape tape;
  Tensor x = Tensor::full({1000}, 1.0);
  Var a = tape.leaf(x, true);
  Var d = dropout(a, 0.25, rng, true);
  int zeros = 0;
  for (int i = 0; i < 1000; ++i) {
    double v = d.value()[i];
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    if (v == 0.0) ++zeros;
  }
  CHECK(zeros > 180);
  CHECK(zeros < 320);
  tape.backward(sum(d));
  for (int i = 0; i < 1000; ++i)
    CHECK(a.grad()[i] == (d.value()[i] == 0.0 ? 0.0 : doctest::Approx(1.0 / 0.75)));

  Rng rng2(5);
  Tape t2;
  Var b = t2.leaf(x);
  CHECK(dropout(b, 0.25, rng2, false).id() == b.id());  // identity in eval mode
  CHECK_THROWS(dropout(b, 1.0, rng2, true));
}

TEST_CASE("adamax") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParamStore ps;
    ps.add_full("p", {3}, 2.5);
    Adamax opt;
    std::map<std::string, Tensor> grads{{"p", Tensor({3})}};
    opt.step(ps, grads, 0.1);
    for (int i = 0; i < 3; ++i) CHECK(ps.get("p")[i] == 2.5);
  }

  SUBCASE("two steps match the hand-executed recurrence") {
    ParamStore ps;
    ps.add_full("p", {1}, 1.0);
    AdamaxConfig cfg;
    Adamax opt(cfg);
    std::map<std::string, Tensor> grads{{"p", Tensor::full({1}, 1.0)}};

    // independent scalar recurrence
    double m = 0, u = 0, p = 1.0;
    for (int t = 1; t <= 2; ++t) {
      m = cfg.beta1 * m + (1 - cfg.beta1) * 1.0;
      u = std::max(cfg.beta2 * u, 1.0);
      p -= 0.1 / (1 - std::pow(cfg.beta1, t)) * m / std::max(u, cfg.eps);
    }

    opt.step(ps, grads, 0.1);
    opt.step(ps, grads, 0.1);
    CHECK(std::abs(ps.get("p")[0] - p) < 1e-12);
    CHECK(ps.get("p")[0] == doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("first step is invariant to gradient scale") {
    ParamStore a, b;
    a.add_full("p", {1}, 1.0);
    b.add_full("p", {1}, 1.0);
    Adamax oa, ob;
    oa.step(a, {{"p", Tensor::full({1}, 1.0)}}, 0.05);
    ob.step(b, {{"p", Tensor::full({1}, 10.0)}}, 0.05);
    CHECK(a.get("p")[0] == b.get("p")[0]);
  }

  SUBCASE("zero infinity-norm with zero epsilon is an error") {
    // beta2 = 0 forgets the norm instantly, so a zero gradient after a
    // nonzero one leaves m != 0 over a zero denominator
    Adamax opt(AdamaxConfig{0.9, 0.0, 0.0});
    ParamStore ps;
    ps.add_full("p", {1}, 1.0);
    opt.step(ps, {{"p", Tensor::full({1}, 1.0)}}, 0.1);
    CHECK_THROWS_AS(opt.step(ps, {{"p", Tensor::full({1}, 0.0)}}, 0.1), std::runtime_error);
  }
}

TEST_CASE("learning-rate schedule") {
  LrSchedule s;
  CHECK(s.at(0) == 5e-4);
  CHECK(s.at(4) == 2e-3);
  CHECK(s.at(2) == doctest::Approx(1.25e-3).epsilon(1e-15));
  for (int e = 1; e <= 4; ++e) CHECK(s.at(e) > s.at(e - 1));
  for (int e = 5; e <= 14; ++e) CHECK(s.at(e) == 2e-3);
  CHECK(s.at(15) == doctest::Approx(2e-3 * 0.2).epsilon(1e-12));
  CHECK(s.at(16) == doctest::Approx(2e-3 * 0.2).epsilon(1e-12));
  CHECK(s.at(17) == doctest::Approx(2e-3 * 0.04).epsilon(1e-12));
  CHECK(s.at(18) == doctest::Approx(2e-3 * 0.04).epsilon(1e-12));
  CHECK_THROWS(s.at(-1));
  CHECK_THROWS(s.at(19));
}

TEST_CASE("checkpoint round trip") {
  ParamStore ps;
  Rng rng(9);
  ps.add_uniform("alpha.w", {3, 4}, rng, 1.0);
  ps.add_uniform("beta.b", {7}, rng, 0.001);
  ps.get("beta.b")[0] = 1.0 / 3.0;
  ps.get("beta.b")[1] = -0.0;
  std::string path = "ckpt_test.txt";
  ps.save(path, {{"kind", "unit-test"}, {"answer_vocab", "yes,no"}});

  std::map<std::string, std::string> meta;
  ParamStore loaded = ParamStore::load(path, &meta);
  CHECK(meta.at("kind") == "unit-test");
  CHECK(meta.at("answer_vocab") == "yes,no");
  REQUIRE(loaded.count() == ps.count());
  for (const auto& [name, t] : ps.all()) {
    const Tensor& l = loaded.get(name);
    REQUIRE(l.same_shape(t));
    for (int i = 0; i < t.size(); ++i) CHECK(l[i] == t[i]);
  }

  // identical stores serialize to identical bytes
  std::string path2 = "ckpt_test2.txt";
  loaded.save(path2, {{"kind", "unit-test"}, {"answer_vocab", "yes,no"}});
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);

  std::ofstream bad("ckpt_bad.txt");
  bad << "not-a-checkpoint\n";
  bad.close();
  CHECK_THROWS(ParamStore::load("ckpt_bad.txt"));
  std::remove(path.c_str());
  std::remove(path2.c_str());
  std::remove("ckpt_bad.txt");
}

TEST_CASE("determinism: identical seeds give bit-identical results") {
  auto build = [] {
    ParamStore ps;
    Rng rng(123);
    Linear lin{"l", 6, 5, true, true};
    lin.init(ps, rng);
    GruCell cell{"g", 5, 4};
    cell.init(ps, rng);
    Tape tape;
    VarMap vm = ps.lift(tape, false);
    Var x = tape.leaf(random_tensor({6}, rng));
    Var h = cell.step(vm, lin.apply(vm, x), tape.leaf(Tensor({4})));
    return h.value().data();
  };
  auto a = build();
  auto b = build();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("weight norm reparameterization") {
  ParamStore ps;
  Rng rng(3);
  Linear lin{"l", 4, 3, true, true};
  lin.init(ps, rng);
  Tape tape;
  VarMap vm = ps.lift(tape, false);
  Var W = lin.weight(vm);
  for (int r = 0; r < 3; ++r) {
    double n = 0;
    for (int c = 0; c < 4; ++c) n += W.value().at(r, c) * W.value().at(r, c);
    CHECK(std::sqrt(n) == doctest::Approx(ps.get("l.g")[r]).epsilon(1e-12));
  }

  for (double& v : ps.get("l.g").data()) v = 0.0;
  ps.get("l.b")[0] = 0.7;
  Tape t2;
  VarMap vm2 = ps.lift(t2, false);
  Var y = lin.apply(vm2, t2.leaf(random_tensor({4}, rng)));
  CHECK(y.value()[0] == 0.7);
  CHECK(y.value()[1] == 0.0);
}
