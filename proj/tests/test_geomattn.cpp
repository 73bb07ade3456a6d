// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "covqa/geomattn/gvr.hpp"
#include "covqa/numcore/ops.hpp"
#include "oracles.hpp"

using namespace covqa::geomattn;
using namespace covqa::numcore;
namespace tst = covqa::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Instance {
  GvrConfig cfg;
  ParamStore ps;  // gvr params + "input.V" + "input.q"
  std::vector<BoundingBox> boxes;
};

Instance random_instance(Rng& rng, int m, GvrConfig cfg, bool clean_geometry) {
  Instance inst;
  inst.cfg = cfg;
  Gvr gvr(cfg, "gvr");
  gvr.init(inst.ps, rng);
  if (!clean_geometry) {
    // mixed-sign geometry weights so clipping and -inf edges occur
    for (int h = 0; h < cfg.heads; ++h)
      for (double& v : inst.ps.get("gvr.geo_w" + std::to_string(h)).data()) v = rng.uniform(-0.6, 0.6);
  }
  inst.ps.add("input.V", {m, cfg.d_v});
  for (double& v : inst.ps.get("input.V").data()) v = rng.uniform(-1, 1);
  inst.ps.add("input.q", {cfg.d_q});
  for (double& v : inst.ps.get("input.q").data()) v = rng.uniform(-1, 1);
  for (int i = 0; i < m; ++i)
    inst.boxes.push_back(BoundingBox{rng.uniform(0, 80), rng.uniform(0, 80), rng.uniform(5, 40), rng.uniform(5, 40)});
  return inst;
}

tst::GvrRefParams ref_params(const Instance& inst) {
  tst::GvrRefParams p;
  const GvrConfig& c = inst.cfg;
  auto mat = [&](const std::string& n) {
    const Tensor& t = inst.ps.get(n);
    std::vector<std::vector<double>> m(static_cast<size_t>(t.rows()),
                                       std::vector<double>(static_cast<size_t>(t.cols())));
    for (int r = 0; r < t.rows(); ++r)
      for (int col = 0; col < t.cols(); ++col) m[static_cast<size_t>(r)][static_cast<size_t>(col)] = t.at(r, col);
    return m;
  };
  p.fuse_w = mat("gvr.fuse_w");
  for (int h = 0; h < c.heads; ++h) {
    std::string sh = std::to_string(h);
    p.wq.push_back(mat("gvr.wq" + sh));
    p.wk.push_back(mat("gvr.wk" + sh));
    p.wv.push_back(mat("gvr.wv" + sh));
    p.geo_w.push_back(inst.ps.get("gvr.geo_w" + sh).data());
  }
  return p;
}

std::vector<std::vector<double>> run_reference(const Instance& inst, tst::GvrRefDiagnostics* diag = nullptr) {
  const GvrConfig& c = inst.cfg;
  const Tensor& V = inst.ps.get("input.V");
  std::vector<std::vector<double>> vv(static_cast<size_t>(V.rows()),
                                      std::vector<double>(static_cast<size_t>(V.cols())));
  for (int i = 0; i < V.rows(); ++i)
    for (int j = 0; j < V.cols(); ++j) vv[static_cast<size_t>(i)][static_cast<size_t>(j)] = V.at(i, j);
  std::vector<std::array<double, 4>> boxes;
  for (const auto& b : inst.boxes) boxes.push_back({b.x, b.y, b.w, b.h});
  tst::GvrRefConfig rc{c.d_q, c.d_v, c.heads, c.k, c.geo_eps, c.wavelength_scale, c.wavelength_progression};
  return tst::gvr_reference(vv, inst.ps.get("input.q").data(), boxes, ref_params(inst), rc, diag);
}

Gvr::Forward run_kernel(const Instance& inst, Tape& tape) {
  Gvr gvr(inst.cfg, "gvr");
  VarMap vm = inst.ps.lift(tape, false);
  return gvr.forward(vm, lookup(vm, "input.V"), lookup(vm, "input.q"), inst.boxes);
}

// Huge wavelength scale keeps every geometry angle near 0; with weight only
// on the cos slots every edge weight is strictly positive (no -inf edges).
void make_unclipped(Instance& inst) {
  inst.cfg.wavelength_scale = 1e6;
  for (int h = 0; h < inst.cfg.heads; ++h) {
    Tensor& w = inst.ps.get("gvr.geo_w" + std::to_string(h));
    for (int i = 0; i < w.size(); ++i) w[i] = (i % 2 == 1) ? 0.3 : 0.0;
  }
}

}  // namespace

TEST_CASE("relative geometry") {
  double eps = 1e-3;
  BoundingBox a{10, 20, 5, 5};
  auto g = relative_geometry(a, a, eps);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(g[0] == doctest::Approx(std::log(eps / 5)).epsilon(1e-12));

  auto g2 = relative_geometry({0, 0, 2, 2}, {2, 2, 2, 2}, eps);
  for (double v : g2) CHECK(v == 0.0);

  auto g3 = relative_geometry({0, 0, 1, 1}, {3, 0, 2, 1}, eps);
  CHECK(g3[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(g3[1] == doctest::Approx(std::log(eps)).epsilon(1e-12));
  CHECK(g3[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(g3[3] == 0.0);

  CHECK_THROWS(relative_geometry({0, 0, 0, 1}, a, eps));
  CHECK_THROWS(relative_geometry(a, {0, 0, 1, -2}, eps));

  // symmetry: first two components symmetric for equal extents, last two antisymmetric
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    BoundingBox bi{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 9), rng.uniform(1, 9)};
    BoundingBox bj{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 9), rng.uniform(1, 9)};
    auto fwd = relative_geometry(bi, bj, eps);
    auto bwd = relative_geometry(bj, bi, eps);
    CHECK(fwd[2] == doctest::Approx(-bwd[2]).epsilon(1e-12));
    CHECK(fwd[3] == doctest::Approx(-bwd[3]).epsilon(1e-12));
    BoundingBox bj_eq{bj.x, bj.y, bi.w, bi.h};
    auto f2 = relative_geometry(bi, bj_eq, eps);
    auto b2 = relative_geometry(bj_eq, bi, eps);
    CHECK(f2[0] == doctest::Approx(b2[0]).epsilon(1e-12));
    CHECK(f2[1] == doctest::Approx(b2[1]).epsilon(1e-12));
  }
}

TEST_CASE("sinusoidal geometry embedding") {
  auto e0 = sin_embed({0, 0, 0, 0}, 16);
  for (size_t i = 0; i < e0.size(); i += 2) {
    CHECK(e0[i] == 0.0);      // sin(0)
    CHECK(e0[i + 1] == 1.0);  // cos(0)
  }

  CHECK_THROWS(sin_embed({0, 0, 0, 0}, 12));

  // d_h = 8 gives one wavelength per component: scale 1 means angle = g_c
  auto e1 = sin_embed({1, 0, 0, 0}, 8);
  CHECK(e1[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
  CHECK(e1[1] == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
  CHECK(e1[2] == 0.0);
  CHECK(e1[3] == 1.0);

  // scalar oracle for a multi-wavelength case
  std::array<double, 4> g{0.4, -1.2, 2.0, 0.1};
  int dh = 32, waves = dh / 8;
  auto emb = sin_embed(g, dh, 1.0, 1000.0);
  size_t at = 0;
  for (double comp : g)
    for (int k = 0; k < waves; ++k) {
      double angle = comp / std::pow(1000.0, double(k) / waves);
      CHECK(emb[at++] == doctest::Approx(std::sin(angle)).epsilon(1e-14));
      CHECK(emb[at++] == doctest::Approx(std::cos(angle)).epsilon(1e-14));
    }

  // doubling the wavelength scale halves every phase angle
  auto half = sin_embed(g, dh, 2.0, 1000.0);
  at = 0;
  for (double comp : g)
    for (int k = 0; k < waves; ++k) {
      double angle = comp / std::pow(1000.0, double(k) / waves);
      CHECK(half[at++] == doctest::Approx(std::sin(angle / 2)).epsilon(1e-14));
      CHECK(half[at++] == doctest::Approx(std::cos(angle / 2)).epsilon(1e-14));
    }
}

TEST_CASE("box weight") {
  std::vector<double> emb = sin_embed({0, 0, 0, 0}, 16);
  CHECK(box_weight(std::vector<double>(16, 0.0), emb) == 0.0);
  CHECK(box_weight(std::vector<double>(16, -1.0), emb) == 0.0);  // negative dot clips
  CHECK(box_weight(std::vector<double>(16, 1.0), emb) == 8.0);   // one per cos slot
  CHECK_THROWS(box_weight(std::vector<double>(4, 1.0), emb));
}

TEST_CASE("top-k neighborhood") {
  CHECK(topk_indices({3, 1, 2}, 5) == std::vector<int>{0, 2, 1});
  CHECK(topk_indices({5, 1, 3, 2}, 2) == std::vector<int>{0, 2});
  CHECK(topk_indices({7, 7, 7, 7}, 2) == std::vector<int>{0, 1});
  CHECK(topk_indices({-kInf, 1, -kInf}, 2) == std::vector<int>{1, 0});
  CHECK(topk_indices({-kInf, -kInf}, 1) == std::vector<int>{0});
  CHECK_THROWS(topk_indices({}, 1));
  CHECK_THROWS(topk_indices({1.0, std::nan("")}, 1));
}

TEST_CASE("edge logits") {
  GvrConfig cfg;
  cfg.d_q = 16;
  cfg.d_v = 16;
  cfg.heads = 2;
  cfg.k = 3;
  Rng rng(7);

  SUBCASE("zero visual projections leave exactly the log geometry term") {
    Instance inst = random_instance(rng, 3, cfg, true);
    for (int h = 0; h < cfg.heads; ++h) {
      for (double& v : inst.ps.get("gvr.wq" + std::to_string(h)).data()) v = 0;
      for (double& v : inst.ps.get("gvr.wk" + std::to_string(h)).data()) v = 0;
    }
    Tape tape;
    Gvr gvr(cfg, "gvr");
    VarMap vm = inst.ps.lift(tape, false);
    Var nodes = gvr.joint_embedding(vm, lookup(vm, "input.V"), lookup(vm, "input.q"));
    auto logits = gvr.edge_logits(vm, nodes, inst.boxes);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto& w = inst.ps.get("gvr.geo_w" + std::to_string(h)).data();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          auto g = relative_geometry(inst.boxes[size_t(i)], inst.boxes[size_t(j)], cfg.geo_eps);
          double bw = box_weight(w, sin_embed(g, cfg.d_h(), cfg.wavelength_scale, cfg.wavelength_progression));
          double expected = bw == 0.0 ? -kInf : std::log(bw);
          CHECK(logits[size_t(h)].value().at(i, j) == expected);
        }
    }
  }

  SUBCASE("all-clipped geometry masks every edge and softmax errors surface") {
    Instance inst = random_instance(rng, 3, cfg, true);
    for (int h = 0; h < cfg.heads; ++h)
      for (double& v : inst.ps.get("gvr.geo_w" + std::to_string(h)).data()) v = -1.0;
    Tape tape;
    CHECK_THROWS_AS(run_kernel(inst, tape), std::runtime_error);
  }

  SUBCASE("random 3-node case matches the double-loop oracle") {
    for (int t = 0; t < 20; ++t) {
      Instance inst = random_instance(rng, 3, cfg, true);
      Tape tape;
      Gvr gvr(cfg, "gvr");
      VarMap vm = inst.ps.lift(tape, false);
      Var nodes = gvr.joint_embedding(vm, lookup(vm, "input.V"), lookup(vm, "input.q"));
      auto logits = gvr.edge_logits(vm, nodes, inst.boxes);
      auto p = ref_params(inst);
      // independent double loop over pairs
      const Tensor& V = inst.ps.get("input.V");
      const auto& q = inst.ps.get("input.q").data();
      for (int h = 0; h < cfg.heads; ++h)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            std::vector<double> vi, vj;
            for (int c = 0; c < cfg.d_q; ++c) {
              double si = 0, sj = 0;
              for (int x = 0; x < cfg.d_v; ++x) {
                si += p.fuse_w[size_t(c)][size_t(x)] * V.at(i, x);
                sj += p.fuse_w[size_t(c)][size_t(x)] * V.at(j, x);
              }
              for (int x = 0; x < cfg.d_q; ++x) {
                si += p.fuse_w[size_t(c)][size_t(cfg.d_v + x)] * q[size_t(x)];
                sj += p.fuse_w[size_t(c)][size_t(cfg.d_v + x)] * q[size_t(x)];
              }
              vi.push_back(si);
              vj.push_back(sj);
            }
            double dotv = 0;
            for (int r = 0; r < cfg.d_h(); ++r) {
              double qi = 0, kj = 0;
              for (int c = 0; c < cfg.d_q; ++c) {
                qi += p.wq[size_t(h)][size_t(r)][size_t(c)] * vi[size_t(c)];
                kj += p.wk[size_t(h)][size_t(r)][size_t(c)] * vj[size_t(c)];
              }
              dotv += qi * kj;
            }
            double visual = dotv / std::sqrt(double(cfg.d_h()));
            auto geom = relative_geometry(inst.boxes[size_t(i)], inst.boxes[size_t(j)], cfg.geo_eps);
            double bw = box_weight(p.geo_w[size_t(h)],
                                   sin_embed(geom, cfg.d_h(), cfg.wavelength_scale, cfg.wavelength_progression));
            double expected = bw == 0.0 ? -kInf : visual + std::log(bw);
            double got = logits[size_t(h)].value().at(i, j);
            if (expected == -kInf)
              CHECK(got == -kInf);
            else
              CHECK(std::abs(got - expected) < 1e-10);
          }
    }
  }
}

TEST_CASE("gvr forward") {
  GvrConfig cfg;
  cfg.d_q = 16;
  cfg.d_v = 16;
  cfg.heads = 2;
  cfg.k = 3;
  Rng rng(99);

  SUBCASE("single node aggregates itself") {
    Instance inst = random_instance(rng, 1, cfg, true);
    Tape tape;
    auto fwd = run_kernel(inst, tape);
    CHECK(fwd.output.value().rows() == 1);
    CHECK(fwd.head_attention[0].at(0, 0) == 1.0);
    auto ref = run_reference(inst);
    for (int c = 0; c < cfg.d_q; ++c)
      CHECK(std::abs(fwd.output.value().at(0, c) - ref[0][size_t(c)]) < 1e-10);
  }

  SUBCASE("zero value projections give all-zero output") {
    Instance inst = random_instance(rng, 4, cfg, true);
    for (int h = 0; h < cfg.heads; ++h)
      for (double& v : inst.ps.get("gvr.wv" + std::to_string(h)).data()) v = 0;
    Tape tape;
    auto fwd = run_kernel(inst, tape);
    for (int i = 0; i < fwd.output.value().size(); ++i) CHECK(fwd.output.value()[i] == 0.0);
  }

  SUBCASE("random instances match the brute-force reference within 1e-10") {
    int done = 0, attempts = 0;
    while (done < 60 && attempts < 600) {
      ++attempts;
      int m = rng.uniform_int(1, 6);
      Instance inst = random_instance(rng, m, cfg, rng.bernoulli(0.5));
      Tape tape;
      std::vector<std::vector<double>> ref;
      try {
        ref = run_reference(inst);
      } catch (const std::runtime_error&) {
        continue;  // fully masked row; covered by the error-path test
      }
      auto fwd = run_kernel(inst, tape);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < cfg.d_q; ++c)
          CHECK(std::abs(fwd.output.value().at(i, c) - ref[size_t(i)][size_t(c)]) < 1e-10);
      ++done;
    }
    CHECK(done == 60);
  }

  SUBCASE("permutation equivariance") {
    for (int t = 0; t < 10; ++t) {
      int m = rng.uniform_int(2, 6);
      Instance inst = random_instance(rng, m, cfg, true);
      make_unclipped(inst);
      Tape tape;
      auto fwd = run_kernel(inst, tape);
      std::vector<int> perm = rng.permutation(m);

      Instance pinst;
      pinst.cfg = inst.cfg;
      for (const auto& [name, t2] : inst.ps.all())
        if (name.rfind("gvr.", 0) == 0) pinst.ps.add(name, t2.shape()) = t2;
      pinst.ps.add("input.q", {cfg.d_q}) = inst.ps.get("input.q");
      Tensor pv({m, cfg.d_v});
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < cfg.d_v; ++c) pv.at(i, c) = inst.ps.get("input.V").at(perm[size_t(i)], c);
      pinst.ps.add("input.V", {m, cfg.d_v}) = pv;
      pinst.boxes.resize(size_t(m));
      for (int i = 0; i < m; ++i) pinst.boxes[size_t(i)] = inst.boxes[size_t(perm[size_t(i)])];

      Tape tape2;
      auto pfwd = run_kernel(pinst, tape2);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < cfg.d_q; ++c)
          CHECK(pfwd.output.value().at(i, c) ==
                doctest::Approx(fwd.output.value().at(perm[size_t(i)], c)).epsilon(1e-12));
    }
  }

  SUBCASE("each node aggregates from exactly min(K, M) neighbors") {
    for (int t = 0; t < 10; ++t) {
      int m = rng.uniform_int(1, 6);
      Instance inst = random_instance(rng, m, cfg, true);
      make_unclipped(inst);
      Tape tape;
      auto fwd = run_kernel(inst, tape);
      int expect = std::min(cfg.k, m);
      for (const Tensor& att : fwd.head_attention)
        for (int i = 0; i < m; ++i) {
          int nonzero = 0;
          double total = 0;
          for (int j = 0; j < m; ++j) {
            if (att.at(i, j) != 0.0) ++nonzero;
            total += att.at(i, j);
          }
          CHECK(nonzero == expect);
          CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
  }

  SUBCASE("end-to-end gradient check vs finite differences") {
    GvrConfig small = cfg;  // d_q=16 within the spec's bound, M<=5
    int checked = 0, attempts = 0;
    Rng wr(5);
    while (checked < 3 && attempts < 500) {
      ++attempts;
      int m = wr.uniform_int(2, 5);
      Instance inst = random_instance(wr, m, small, true);
      tst::GvrRefDiagnostics diag;
      try {
        run_reference(inst, &diag);
      } catch (const std::runtime_error&) {
        continue;
      }
      // relu and top-k are locally linear; margins just need to exceed the
      // logit shift a 1e-3 parameter perturbation can cause
      if (diag.min_geo_margin < 0.05 || diag.min_topk_gap < 0.05 || diag.min_out_margin < 0.01) continue;

      Tensor w({m, small.d_q});
      for (double& v : w.data()) v = wr.uniform(-1, 1);
      auto graph = [&](Tape& tape, const VarMap& vm) {
        Gvr gvr(small, "gvr");
        auto fwd = gvr.forward(vm, lookup(vm, "input.V"), lookup(vm, "input.q"), inst.boxes);
        return sum(mul(fwd.output, tape.leaf(w)));
      };
      Tape tape;
      VarMap vm = inst.ps.lift(tape, true);
      Var loss = graph(tape, vm);
      tape.backward(loss);
      std::map<std::string, Tensor> analytic;
      for (auto& [name, var] : vm) analytic[name] = var.grad();
      auto numeric = tst::fd_gradients(inst.ps, [&] {
        Tape t2;
        VarMap vm2 = inst.ps.lift(t2, false);
        return graph(t2, vm2).value()[0];
      });
      CHECK(tst::max_rel_err(analytic, numeric) < 1e-4);
      ++checked;
    }
    CHECK(checked == 3);
  }
}

TEST_CASE("in-degree attention") {
  Tensor a({2, 2}, {0.25, 0.75, 0.5, 0.5});
  Tensor b({2, 2}, {1.0, 0.0, 1.0, 0.0});
  auto deg = in_degree({a, b});
  CHECK(deg[0] == doctest::Approx(0.25 + 0.5 + 2.0));
  CHECK(deg[1] == doctest::Approx(0.75 + 0.5));
}
