// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covqa/numcore/nn.hpp"
#include "covqa/regions.hpp"
#include "covqa/vocab.hpp"

namespace covqa::questioner {

struct QuestionerConfig {
  int d_emb = 16;    // word embedding (paper 300)
  int d_qfea = 32;   // GRU_q hidden (paper 1024)
  int d_att = 32;    // attention hidden
  int raw_feature_width = 24;
  int max_len = 14;
  int max_rounds = 4;
  int beam = 1;  // hook; generation is greedy

  // GRU_Q and GRU_s width: q^fea and the answer embedding concatenate to the
  // session input, and Q^fea is the session's first input (paper 1324 = 1024+300).
  int d_s() const { return d_qfea + d_emb; }
};

// One dialogue round: generated sub-question tokens plus the oracle's answer.
struct DialogueRound {
  std::vector<int> sq_tokens;
  std::string answer;
};

struct Dialogue {
  std::vector<DialogueRound> rounds;
  std::string stop_reason;  // "stop" | "max_rounds" | "oracle_error"
};

// Answers a sub-question posed as text; empty result aborts the dialogue.
using OracleFn = std::function<std::optional<std::string>(const std::string& sq_text)>;

class Questioner {
 public:
  Questioner(QuestionerConfig cfg, Vocab vocab, uint64_t seed);

  const QuestionerConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  numcore::ParamStore& params() { return params_; }
  const numcore::ParamStore& params() const { return params_; }

  // Session state s_t: Q^fea seeds GRU_s from zero state, then each round
  // feeds [q^fea_i || a^emb_i]. history answers are single token ids.
  numcore::Var encode_hierarchy(numcore::Tape& tape, const numcore::VarMap& vm,
                                const std::vector<int>& q_tokens,
                                const std::vector<std::pair<std::vector<int>, int>>& history) const;

  struct DecoderState {
    numcore::Var hidden;
    numcore::Var visual;  // question-guided attention summary, fixed per round
    int step = 0;
  };

  DecoderState init_decoder(numcore::Tape& tape, const numcore::VarMap& vm, const numcore::Var& s_t,
                            const RegionSet& regions, numcore::Rng* rng = nullptr,
                            bool training = false) const;

  struct DecodeOut {
    numcore::Var logits;
    numcore::Var dist;  // softmax over the vocabulary
    DecoderState state;
  };

  DecodeOut decode_step(const numcore::VarMap& vm, const DecoderState& state, int prev_token) const;

  // Teacher-forced negative log-likelihood over all rounds plus the stop
  // decision at round T+1. Each gold round is (sq token ids, answer token id);
  // gold ids outside the vocabulary count as UNK.
  numcore::Var nll_loss(numcore::Tape& tape, const numcore::VarMap& vm,
                        const std::vector<int>& q_tokens, const RegionSet& regions,
                        const std::vector<std::pair<std::vector<int>, int>>& gold_sqs,
                        int* unk_count = nullptr, numcore::Rng* rng = nullptr,
                        bool training = false) const;

  // Greedy generation loop against an oracle. A round whose first decoded
  // token is the stop symbol ends the dialogue; rounds are capped.
  Dialogue generate_sqs(const RegionSet& regions, const std::vector<int>& q_tokens,
                        const OracleFn& oracle, int max_rounds) const;

  void save(const std::string& path) const;
  static Questioner load(const std::string& path);

 private:
  numcore::Var run_gru(const numcore::VarMap& vm, const numcore::GruCell& cell, numcore::Tape& tape,
                       const std::vector<int>& tokens) const;

  QuestionerConfig cfg_;
  Vocab vocab_;
  numcore::ParamStore params_;
  numcore::GruCell gru_q_, gru_big_, gru_s_, dec_;
};

}  // namespace covqa::questioner
