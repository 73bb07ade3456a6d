// SPDX-License-Identifier: Apache-2.0
#include "covqa/acvrm/acvrm.hpp"

#include <sstream>
#include <stdexcept>

namespace covqa::acvrm {

using namespace covqa::numcore;
using covqa::geomattn::Gvr;
using covqa::geomattn::GvrConfig;

GvrConfig AcvrmConfig::gvr_config() const {
  GvrConfig g;
  g.d_q = d_q;
  g.d_v = d_v;
  g.heads = gvr_heads;
  g.k = gvr_k;
  g.geo_eps = geo_eps;
  g.wavelength_scale = wavelength_scale;
  g.wavelength_progression = wavelength_progression;
  return g;
}

EncoderConfig AcvrmConfig::encoder_config(int vocab_size) const {
  EncoderConfig e;
  e.vocab_size = vocab_size;
  e.d_model = d_q;
  e.layers = enc_layers;
  e.heads = enc_heads;
  e.d_ff = enc_ff;
  e.max_len = max_q_len;
  e.dropout = dropout;
  return e;
}

void AcvrmConfig::validate() const {
  if (d_q != d_v) throw std::invalid_argument("AcvrmConfig: the residual chain requires d_q == d_v");
  gvr_config().validate();
}

SprStep spr_step(const Gvr& gvr, const VarMap& vm, const Var& v_prev, const Var& se_t,
                 const std::vector<geomattn::BoundingBox>& boxes) {
  auto fwd = gvr.forward(vm, v_prev, se_t, boxes);
  return SprStep{add(v_prev, fwd.output), fwd.output, std::move(fwd.head_attention)};
}

Var total_loss(const Var& final_logits, const Tensor& target_scores,
               const std::vector<Var>& sub_logits, const std::vector<int>& sub_targets) {
  if (sub_logits.size() != sub_targets.size())
    throw std::invalid_argument("total_loss: sub target count does not match step count");
  Var loss = bce_with_logits(final_logits, target_scores);
  for (size_t t = 0; t < sub_logits.size(); ++t)
    loss = add(loss, cross_entropy_logits(sub_logits[t], sub_targets[t]));
  return loss;
}

Acvrm::Acvrm(AcvrmConfig cfg, Vocab vocab, AnswerVocab answers, uint64_t seed)
    : cfg_(cfg),
      vocab_(std::move(vocab)),
      answers_(std::move(answers)),
      encoder_(cfg.encoder_config(vocab_.size()), "enc"),
      spr_gvr_(cfg.gvr_config(), "spr"),
      fusion_gvr_(cfg.gvr_config(), "fuse") {
  cfg_.validate();
  if (answers_.size() < 2) throw std::invalid_argument("Acvrm: answer vocabulary too small");
  Rng rng(seed);
  encoder_.init(params_, rng);
  spr_gvr_.init(params_, rng);
  fusion_gvr_.init(params_, rng);
  Linear{"v0", cfg_.raw_feature_width, cfg_.d_v, true, true}.init(params_, rng);
  Mlp2 sub{{"sub.l1", cfg_.d_v, cfg_.d_q, true, true}, {"sub.l2", cfg_.d_q, 2, true, true}, cfg_.dropout};
  sub.init(params_, rng);
  Linear{"attn.in", 2 * cfg_.d_q, cfg_.d_q, true, true}.init(params_, rng);
  Linear{"attn.out", cfg_.d_q, 1, true, true}.init(params_, rng);
  Linear{"hv", cfg_.d_q, cfg_.d_q, true, true}.init(params_, rng);
  Linear{"hq", cfg_.d_q, cfg_.d_q, true, true}.init(params_, rng);
  Mlp2 cls{{"cls.l1", cfg_.d_q, cfg_.d_q, true, true},
           {"cls.l2", cfg_.d_q, answers_.size(), true, true},
           cfg_.classifier_dropout};
  cls.init(params_, rng);
}

AcvrmForward Acvrm::forward(Tape& tape, const VarMap& vm, const RegionSet& regions,
                            const std::vector<int>& q_tokens,
                            const std::vector<std::vector<int>>& sq_tokens, bool training,
                            Rng* rng) const {
  regions.validate();
  if (regions.features.cols() != cfg_.raw_feature_width)
    throw std::invalid_argument("Acvrm: region feature width mismatch");
  auto drop = [&](Var x) { return (training && rng) ? dropout(x, cfg_.dropout, *rng, true) : x; };

  Var raw = tape.leaf(regions.features);
  Var v = drop(Linear{"v0", cfg_.raw_feature_width, cfg_.d_v, true, true}.apply_rows(vm, raw));
  Var e = encoder_.encode(vm, tape, q_tokens, rng, training);

  AcvrmForward out;
  Mlp2 sub{{"sub.l1", cfg_.d_v, cfg_.d_q, true, true}, {"sub.l2", cfg_.d_q, 2, true, true}, cfg_.dropout};
  for (const auto& sq : sq_tokens) {
    Var se = encoder_.encode(vm, tape, sq, rng, training);
    SprStep step = spr_step(spr_gvr_, vm, v, se, regions.boxes);
    v = step.v_next;
    Var logits = sub.apply(vm, mean_rows(step.residual), rng, training);
    out.sub_logits.push_back(logits);

    StepTrace trace;
    trace.in_degree = geomattn::in_degree(step.head_attention);
    auto top = geomattn::topk_indices(trace.in_degree, 2);
    for (size_t i = 0; i < top.size(); ++i) trace.top2[i] = top[i];
    trace.predicted_answer = argmax(logits.value()) == kSubYes ? "yes" : "no";
    out.trace.steps.push_back(std::move(trace));
  }

  // fusion: GVR without residual, then question-guided attention pooling
  Var fused = fusion_gvr_.forward(vm, v, e, regions.boxes).output;
  int m = regions.count();
  Linear attn_in{"attn.in", 2 * cfg_.d_q, cfg_.d_q, true, true};
  Linear attn_out{"attn.out", cfg_.d_q, 1, true, true};
  std::vector<Var> scores;
  for (int i = 0; i < m; ++i)
    scores.push_back(attn_out.apply(vm, drop(relu(attn_in.apply(vm, concat({row(fused, i), e}))))));
  Var alpha = softmax(concat(scores));
  Var pooled = matvec(transpose(fused), alpha);
  Var h = mul(relu(Linear{"hv", cfg_.d_q, cfg_.d_q, true, true}.apply(vm, pooled)),
              Linear{"hq", cfg_.d_q, cfg_.d_q, true, true}.apply(vm, e));

  Mlp2 cls{{"cls.l1", cfg_.d_q, cfg_.d_q, true, true},
           {"cls.l2", cfg_.d_q, answers_.size(), true, true},
           cfg_.classifier_dropout};
  out.final_logits = cls.apply(vm, h, rng, training);

  out.trace.fusion_attention.assign(alpha.value().data().begin(), alpha.value().data().end());
  auto top = geomattn::topk_indices(out.trace.fusion_attention, 2);
  for (size_t i = 0; i < top.size(); ++i) out.trace.fusion_top2[i] = top[i];
  return out;
}

Var Acvrm::loss(Tape& tape, const VarMap& vm, const RegionSet& regions,
                const std::vector<int>& q_tokens, const std::vector<std::vector<int>>& sq_tokens,
                const Tensor& target_scores, const std::vector<int>& sub_targets, bool use_sub_loss,
                bool training, Rng* rng) const {
  AcvrmForward fwd = forward(tape, vm, regions, q_tokens, sq_tokens, training, rng);
  if (!use_sub_loss) return total_loss(fwd.final_logits, target_scores, {}, {});
  return total_loss(fwd.final_logits, target_scores, fwd.sub_logits, sub_targets);
}

Acvrm::Prediction Acvrm::predict(const RegionSet& regions, const std::vector<int>& q_tokens,
                                 const std::vector<std::vector<int>>& sq_tokens) const {
  Tape tape;
  VarMap vm = params_.lift(tape, false);
  AcvrmForward fwd = forward(tape, vm, regions, q_tokens, sq_tokens, false, nullptr);
  Prediction p;
  p.answer_id = argmax(fwd.final_logits.value());
  p.answer = answers_.answer(p.answer_id);
  p.logits.assign(fwd.final_logits.value().data().begin(), fwd.final_logits.value().data().end());
  p.trace = std::move(fwd.trace);
  return p;
}

void Acvrm::save(const std::string& path) const {
  std::map<std::string, std::string> meta;
  meta["model"] = "acvrm";
  std::ostringstream cfg;
  cfg << cfg_.d_q << ' ' << cfg_.d_v << ' ' << cfg_.gvr_heads << ' ' << cfg_.gvr_k << ' '
      << cfg_.enc_layers << ' ' << cfg_.enc_heads << ' ' << cfg_.enc_ff << ' ' << cfg_.max_q_len << ' '
      << cfg_.raw_feature_width << ' ' << cfg_.max_rounds << ' ' << cfg_.dropout << ' '
      << cfg_.classifier_dropout << ' ' << cfg_.geo_eps << ' ' << cfg_.wavelength_scale << ' '
      << cfg_.wavelength_progression;
  meta["config"] = cfg.str();
  meta["vocab"] = vocab_.join();
  meta["answers"] = answers_.join();
  params_.save(path, meta);
}

Acvrm Acvrm::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParamStore ps = ParamStore::load(path, &meta);
  if (meta["model"] != "acvrm") throw std::runtime_error("Acvrm::load: not an acvrm checkpoint");
  AcvrmConfig cfg;
  std::istringstream in(meta["config"]);
  in >> cfg.d_q >> cfg.d_v >> cfg.gvr_heads >> cfg.gvr_k >> cfg.enc_layers >> cfg.enc_heads >>
      cfg.enc_ff >> cfg.max_q_len >> cfg.raw_feature_width >> cfg.max_rounds >> cfg.dropout >>
      cfg.classifier_dropout >> cfg.geo_eps >> cfg.wavelength_scale >> cfg.wavelength_progression;
  Acvrm model(cfg, Vocab::from_join(meta["vocab"]), AnswerVocab::from_join(meta["answers"]), 0);
  model.params_ = std::move(ps);
  return model;
}

}  // namespace covqa::acvrm
