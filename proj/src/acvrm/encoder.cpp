// SPDX-License-Identifier: Apache-2.0
#include "covqa/acvrm/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace covqa::acvrm {

using namespace covqa::numcore;

QuestionEncoder::QuestionEncoder(EncoderConfig cfg, std::string prefix)
    : cfg_(cfg), prefix_(std::move(prefix)) {
  if (cfg_.d_model % cfg_.heads != 0)
    throw std::invalid_argument("QuestionEncoder: d_model not divisible by heads");
}

void QuestionEncoder::init(ParamStore& ps, Rng& rng) const {
  ps.add_uniform(prefix_ + ".emb", {cfg_.vocab_size, cfg_.d_model}, rng, fan_in_bound(cfg_.d_model));
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string p = prefix_ + ".L" + std::to_string(l);
    for (const char* w : {".wq", ".wk", ".wv", ".wo"})
      Linear{p + w, cfg_.d_model, cfg_.d_model, true, true}.init(ps, rng);
    Linear{p + ".ff1", cfg_.d_model, cfg_.d_ff, true, true}.init(ps, rng);
    Linear{p + ".ff2", cfg_.d_ff, cfg_.d_model, true, true}.init(ps, rng);
    ps.add_full(p + ".ln1.g", {cfg_.d_model}, 1.0);
    ps.add(p + ".ln1.b", {cfg_.d_model});
    ps.add_full(p + ".ln2.g", {cfg_.d_model}, 1.0);
    ps.add(p + ".ln2.b", {cfg_.d_model});
  }
}

Tensor QuestionEncoder::positional(int len) const {
  Tensor pe({len, cfg_.d_model});
  for (int pos = 0; pos < len; ++pos)
    for (int i = 0; i < cfg_.d_model / 2; ++i) {
      double angle = pos / std::pow(10000.0, 2.0 * i / cfg_.d_model);
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  return pe;
}

Var QuestionEncoder::encode(const VarMap& vm, Tape& tape, const std::vector<int>& tokens,
                            Rng* rng, bool training) const {
  if (tokens.empty()) throw std::invalid_argument("encode_question: empty token list");
  int len = static_cast<int>(tokens.size());
  if (len > cfg_.max_len) throw std::invalid_argument("encode_question: length exceeds maximum");
  std::vector<char> pad(static_cast<size_t>(len), 0);
  int non_pad = 0;
  for (int i = 0; i < len; ++i) {
    if (tokens[static_cast<size_t>(i)] == Vocab::kPad)
      pad[static_cast<size_t>(i)] = 1;
    else
      ++non_pad;
  }
  if (non_pad == 0) throw std::invalid_argument("encode_question: all positions are padding");

  auto drop = [&](Var x) { return (training && rng) ? dropout(x, cfg_.dropout, *rng, true) : x; };

  Var X = add(gather_rows(lookup(vm, prefix_ + ".emb"), tokens), tape.leaf(positional(len)));
  int dh = cfg_.d_model / cfg_.heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  for (int l = 0; l < cfg_.layers; ++l) {
    std::string p = prefix_ + ".L" + std::to_string(l);
    Var Q = Linear{p + ".wq", cfg_.d_model, cfg_.d_model, true, true}.apply_rows(vm, X);
    Var K = Linear{p + ".wk", cfg_.d_model, cfg_.d_model, true, true}.apply_rows(vm, X);
    Var V = Linear{p + ".wv", cfg_.d_model, cfg_.d_model, true, true}.apply_rows(vm, X);
    std::vector<Var> head_out;
    for (int h = 0; h < cfg_.heads; ++h) {
      Var qh = slice_cols(Q, h * dh, dh);
      Var kh = slice_cols(K, h * dh, dh);
      Var vh = slice_cols(V, h * dh, dh);
      Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      std::vector<Var> weight_rows;
      for (int i = 0; i < len; ++i) weight_rows.push_back(softmax_masked(row(scores, i), pad));
      head_out.push_back(matmul(stack_rows(weight_rows), vh));
    }
    Var attn = Linear{p + ".wo", cfg_.d_model, cfg_.d_model, true, true}.apply_rows(vm, concat_cols(head_out));
    X = layernorm_rows(vm, add(X, drop(attn)), p + ".ln1.g", p + ".ln1.b");
    Var f1 = relu(Linear{p + ".ff1", cfg_.d_model, cfg_.d_ff, true, true}.apply_rows(vm, X));
    Var f2 = Linear{p + ".ff2", cfg_.d_ff, cfg_.d_model, true, true}.apply_rows(vm, drop(f1));
    X = layernorm_rows(vm, add(X, drop(f2)), p + ".ln2.g", p + ".ln2.b");
  }

  std::vector<Var> kept;
  for (int i = 0; i < len; ++i)
    if (!pad[static_cast<size_t>(i)]) kept.push_back(row(X, i));
  if (kept.size() == 1) return kept[0];
  return mean_rows(stack_rows(kept));
}

}  // namespace covqa::acvrm
