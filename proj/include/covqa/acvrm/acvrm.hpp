// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "covqa/acvrm/encoder.hpp"
#include "covqa/geomattn/gvr.hpp"
#include "covqa/regions.hpp"
#include "covqa/vocab.hpp"

namespace covqa::acvrm {

// Sub-answer classes: every constructed sub-question is yes/no.
constexpr int kSubYes = 0;
constexpr int kSubNo = 1;
inline int sub_target_id(const std::string& answer) { return answer == "yes" ? kSubYes : kSubNo; }

struct AcvrmConfig {
  int d_q = 64, d_v = 64;  // equal widths; the residual chain requires it
  int gvr_heads = 4, gvr_k = 5;
  int enc_layers = 2, enc_heads = 4, enc_ff = 128;
  int max_q_len = 14;
  int raw_feature_width = 24;
  int max_rounds = 4;
  double dropout = 0.2;
  double classifier_dropout = 0.5;
  double geo_eps = 1e-3;
  double wavelength_scale = 1.0;
  double wavelength_progression = 1000.0;

  geomattn::GvrConfig gvr_config() const;
  EncoderConfig encoder_config(int vocab_size) const;
  void validate() const;
};

struct StepTrace {
  std::string sq;
  std::string given_answer;      // oracle/dataset answer for this sub-question
  std::string predicted_answer;  // sub-classifier argmax
  std::vector<double> in_degree;
  std::array<int, 2> top2{-1, -1};
};

struct AnswerTrace {
  std::vector<StepTrace> steps;
  std::vector<double> fusion_attention;
  std::array<int, 2> fusion_top2{-1, -1};
};

struct AcvrmForward {
  numcore::Var final_logits;             // {|A*|}
  std::vector<numcore::Var> sub_logits;  // T x {2}
  AnswerTrace trace;
};

struct SprStep {
  numcore::Var v_next;    // V_t = V_{t-1} + residual
  numcore::Var residual;  // GVR(V_{t-1}, SE_t)
  std::vector<numcore::Tensor> head_attention;
};

// One chain step; parameters are shared across steps via the gvr instance.
SprStep spr_step(const geomattn::Gvr& gvr, const numcore::VarMap& vm, const numcore::Var& v_prev,
                 const numcore::Var& se_t, const std::vector<geomattn::BoundingBox>& boxes);

// BCE over final logits plus one cross-entropy per chain step; T = 0 gives
// the BCE term alone.
numcore::Var total_loss(const numcore::Var& final_logits, const numcore::Tensor& target_scores,
                        const std::vector<numcore::Var>& sub_logits,
                        const std::vector<int>& sub_targets);

// The Answerer: question encoding, the residual GVR chain over the SQS,
// shared sub-classifiers, fusion, and the answer predictor.
class Acvrm {
 public:
  Acvrm(AcvrmConfig cfg, Vocab vocab, AnswerVocab answers, uint64_t seed);

  const AcvrmConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const AnswerVocab& answers() const { return answers_; }
  numcore::ParamStore& params() { return params_; }
  const numcore::ParamStore& params() const { return params_; }
  const geomattn::Gvr& chain_gvr() const { return spr_gvr_; }
  const QuestionEncoder& encoder() const { return encoder_; }

  AcvrmForward forward(numcore::Tape& tape, const numcore::VarMap& vm, const RegionSet& regions,
                       const std::vector<int>& q_tokens,
                       const std::vector<std::vector<int>>& sq_tokens, bool training = false,
                       numcore::Rng* rng = nullptr) const;

  numcore::Var loss(numcore::Tape& tape, const numcore::VarMap& vm, const RegionSet& regions,
                    const std::vector<int>& q_tokens, const std::vector<std::vector<int>>& sq_tokens,
                    const numcore::Tensor& target_scores, const std::vector<int>& sub_targets,
                    bool use_sub_loss, bool training, numcore::Rng* rng) const;

  struct Prediction {
    std::string answer;
    int answer_id = -1;
    std::vector<double> logits;
    AnswerTrace trace;
  };

  Prediction predict(const RegionSet& regions, const std::vector<int>& q_tokens,
                     const std::vector<std::vector<int>>& sq_tokens) const;

  void save(const std::string& path) const;
  static Acvrm load(const std::string& path);

 private:
  AcvrmConfig cfg_;
  Vocab vocab_;
  AnswerVocab answers_;
  numcore::ParamStore params_;
  QuestionEncoder encoder_;
  geomattn::Gvr spr_gvr_;
  geomattn::Gvr fusion_gvr_;
};

}  // namespace covqa::acvrm
