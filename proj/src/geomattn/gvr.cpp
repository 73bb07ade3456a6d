// SPDX-License-Identifier: Apache-2.0
#include "covqa/geomattn/gvr.hpp"

#include <cmath>
#include <stdexcept>

namespace covqa::geomattn {

using namespace covqa::numcore;

void GvrConfig::validate() const {
  if (d_q <= 0 || d_v <= 0) throw std::invalid_argument("GvrConfig: non-positive width");
  if (heads <= 0 || d_q % heads != 0) throw std::invalid_argument("GvrConfig: d_q not divisible by heads");
  if (d_h() % 8 != 0) throw std::invalid_argument("GvrConfig: head width must be a multiple of 8");
  if (k < 1) throw std::invalid_argument("GvrConfig: k must be >= 1");
  if (geo_eps <= 0) throw std::invalid_argument("GvrConfig: geo_eps must be positive");
}

Gvr::Gvr(GvrConfig cfg, std::string prefix) : cfg_(cfg), prefix_(std::move(prefix)) { cfg_.validate(); }

void Gvr::init(ParamStore& ps, Rng& rng) const {
  ps.add_uniform(prefix_ + ".fuse_w", {cfg_.d_q, cfg_.d_v + cfg_.d_q}, rng, fan_in_bound(cfg_.d_v + cfg_.d_q));
  double b = fan_in_bound(cfg_.d_q);
  for (int h = 0; h < cfg_.heads; ++h) {
    std::string sh = std::to_string(h);
    ps.add_uniform(prefix_ + ".wq" + sh, {cfg_.d_h(), cfg_.d_q}, rng, b);
    ps.add_uniform(prefix_ + ".wk" + sh, {cfg_.d_h(), cfg_.d_q}, rng, b);
    ps.add_uniform(prefix_ + ".wv" + sh, {cfg_.d_h(), cfg_.d_q}, rng, b);
    // positive init keeps most geometry weights unclipped at the start
    Tensor& w = ps.add(prefix_ + ".geo_w" + sh, {cfg_.d_h()});
    for (double& v : w.data()) v = rng.uniform(0.0, fan_in_bound(cfg_.d_h()));
  }
}

Var Gvr::joint_embedding(const VarMap& vm, const Var& V, const Var& q) const {
  if (V.value().cols() != cfg_.d_v) throw std::invalid_argument("gvr: V width != d_v");
  if (q.value().size() != cfg_.d_q) throw std::invalid_argument("gvr: q width != d_q");
  int m = V.value().rows();
  Var qrows = stack_rows(std::vector<Var>(static_cast<size_t>(m), q));
  Var joint = concat_cols({V, qrows});
  return matmul(joint, transpose(lookup(vm, prefix_ + ".fuse_w")));
}

std::vector<Var> Gvr::edge_logits(const VarMap& vm, const Var& nodes,
                                  const std::vector<BoundingBox>& boxes) const {
  int m = nodes.value().rows();
  if (static_cast<int>(boxes.size()) != m) throw std::invalid_argument("gvr: box count != node count");
  if (nodes.value().has_nan()) throw std::invalid_argument("gvr: NaN in node features");
  Tape& tape = *nodes.tape();

  // geometry embeddings depend only on boxes and are shared across heads
  Tensor emb({m * m, cfg_.d_h()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      auto g = relative_geometry(boxes[static_cast<size_t>(i)], boxes[static_cast<size_t>(j)], cfg_.geo_eps);
      auto e = sin_embed(g, cfg_.d_h(), cfg_.wavelength_scale, cfg_.wavelength_progression);
      for (int c = 0; c < cfg_.d_h(); ++c) emb.at(i * m + j, c) = e[static_cast<size_t>(c)];
    }
  Var emb_v = tape.leaf(std::move(emb));

  std::vector<Var> logits;
  logits.reserve(static_cast<size_t>(cfg_.heads));
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.d_h()));
  for (int h = 0; h < cfg_.heads; ++h) {
    std::string sh = std::to_string(h);
    Var qh = matmul(nodes, transpose(lookup(vm, prefix_ + ".wq" + sh)));
    Var kh = matmul(nodes, transpose(lookup(vm, prefix_ + ".wk" + sh)));
    Var visual = scale(matmul(qh, transpose(kh)), inv_sqrt);
    Var geo = reshape(log_v(relu(matvec(emb_v, lookup(vm, prefix_ + ".geo_w" + sh)))), {m, m});
    logits.push_back(add(visual, geo));
  }
  return logits;
}

Gvr::Forward Gvr::forward(const VarMap& vm, const Var& V, const Var& q,
                          const std::vector<BoundingBox>& boxes) const {
  int m = V.value().rows();
  if (m < 1) throw std::invalid_argument("gvr: empty region set");
  Var nodes = joint_embedding(vm, V, q);
  std::vector<Var> logits = edge_logits(vm, nodes, boxes);

  Forward fwd;
  std::vector<Var> head_outputs;
  for (int h = 0; h < cfg_.heads; ++h) {
    Var vh_t = transpose(matmul(nodes, transpose(lookup(vm, prefix_ + ".wv" + std::to_string(h)))));
    Tensor attn({m, m});
    std::vector<Var> out_rows;
    out_rows.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      Var lrow = row(logits[static_cast<size_t>(h)], i);
      const Tensor& lvals = lrow.value();
      std::vector<double> vals(lvals.data().begin(), lvals.data().end());
      std::vector<int> picked = topk_indices(vals, cfg_.k);
      std::vector<char> masked(static_cast<size_t>(m), 1);
      for (int j : picked) masked[static_cast<size_t>(j)] = 0;
      Var weights = softmax_masked(lrow, masked);
      for (int j = 0; j < m; ++j) attn.at(i, j) = weights.value()[j];
      out_rows.push_back(relu(matvec(vh_t, weights)));
    }
    fwd.head_attention.push_back(std::move(attn));
    head_outputs.push_back(stack_rows(out_rows));
  }
  fwd.output = concat_cols(head_outputs);
  if (!fwd.output.value().all_finite()) throw std::runtime_error("gvr: non-finite output");
  return fwd;
}

std::vector<double> in_degree(const std::vector<Tensor>& head_attention) {
  if (head_attention.empty()) return {};
  int m = head_attention.front().rows();
  std::vector<double> deg(static_cast<size_t>(m), 0.0);
  for (const Tensor& a : head_attention)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) deg[static_cast<size_t>(j)] += a.at(i, j);
  return deg;
}

}  // namespace covqa::geomattn
