// SPDX-License-Identifier: Apache-2.0
#include "covqa/questioner/questioner.hpp"

#include <sstream>
#include <stdexcept>

namespace covqa::questioner {

using namespace covqa::numcore;

Questioner::Questioner(QuestionerConfig cfg, Vocab vocab, uint64_t seed)
    : cfg_(cfg),
      vocab_(std::move(vocab)),
      gru_q_{"qst.gru_q", cfg.d_emb, cfg.d_qfea},
      gru_big_{"qst.gru_big", cfg.d_emb, cfg.d_s()},
      gru_s_{"qst.gru_s", cfg.d_s(), cfg.d_s()},
      dec_{"qst.dec", cfg.raw_feature_width + cfg.d_emb, cfg.d_s()} {
  Rng rng(seed);
  params_.add_uniform("qst.emb", {vocab_.size(), cfg_.d_emb}, rng, fan_in_bound(cfg_.d_emb));
  gru_q_.init(params_, rng);
  gru_big_.init(params_, rng);
  gru_s_.init(params_, rng);
  dec_.init(params_, rng);
  Linear{"qst.att_in", cfg_.raw_feature_width + cfg_.d_s(), cfg_.d_att, true, true}.init(params_, rng);
  Linear{"qst.att_out", cfg_.d_att, 1, true, true}.init(params_, rng);
  Linear{"qst.out", cfg_.d_s(), vocab_.size(), true, true}.init(params_, rng);
}

Var Questioner::run_gru(const VarMap& vm, const GruCell& cell, Tape& tape,
                        const std::vector<int>& tokens) const {
  if (tokens.empty()) throw std::invalid_argument("questioner: empty token sequence");
  Var emb = gather_rows(lookup(vm, "qst.emb"), tokens);
  Var h = cell.zero_state(tape);
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) h = cell.step(vm, row(emb, i), h);
  return h;
}

Var Questioner::encode_hierarchy(Tape& tape, const VarMap& vm, const std::vector<int>& q_tokens,
                                 const std::vector<std::pair<std::vector<int>, int>>& history) const {
  Var q_fea = run_gru(vm, gru_big_, tape, q_tokens);
  Var s = gru_s_.step(vm, q_fea, gru_s_.zero_state(tape));
  for (const auto& [sq_tokens, answer_token] : history) {
    Var sq_fea = run_gru(vm, gru_q_, tape, sq_tokens);
    Var a_emb = row(gather_rows(lookup(vm, "qst.emb"), {answer_token}), 0);
    s = gru_s_.step(vm, concat({sq_fea, a_emb}), s);
  }
  return s;
}

Questioner::DecoderState Questioner::init_decoder(Tape& tape, const VarMap& vm, const Var& s_t,
                                                  const RegionSet& regions, Rng* rng,
                                                  bool training) const {
  regions.validate();
  if (regions.features.cols() != cfg_.raw_feature_width)
    throw std::invalid_argument("questioner: region feature width mismatch");
  Var raw = tape.leaf(regions.features);
  Linear att_in{"qst.att_in", cfg_.raw_feature_width + cfg_.d_s(), cfg_.d_att, true, true};
  Linear att_out{"qst.att_out", cfg_.d_att, 1, true, true};
  std::vector<Var> scores;
  for (int i = 0; i < regions.count(); ++i) {
    Var hid = relu(att_in.apply(vm, concat({row(raw, i), s_t})));
    if (training && rng) hid = dropout(hid, 0.2, *rng, true);
    scores.push_back(att_out.apply(vm, hid));
  }
  Var alpha = softmax(concat(scores));
  return DecoderState{s_t, matvec(transpose(raw), alpha), 0};
}

Questioner::DecodeOut Questioner::decode_step(const VarMap& vm, const DecoderState& state,
                                              int prev_token) const {
  if (!state.hidden.valid()) throw std::logic_error("questioner: decoder state not initialized");
  Var prev_emb = row(gather_rows(lookup(vm, "qst.emb"), {prev_token}), 0);
  Var h = dec_.step(vm, concat({state.visual, prev_emb}), state.hidden);
  Var logits = Linear{"qst.out", cfg_.d_s(), vocab_.size(), true, true}.apply(vm, h);
  return DecodeOut{logits, softmax(logits), DecoderState{h, state.visual, state.step + 1}};
}

Var Questioner::nll_loss(Tape& tape, const VarMap& vm, const std::vector<int>& q_tokens,
                         const RegionSet& regions,
                         const std::vector<std::pair<std::vector<int>, int>>& gold_sqs,
                         int* unk_count, Rng* rng, bool training) const {
  Var loss = tape.leaf(Tensor::scalar(0.0));
  std::vector<std::pair<std::vector<int>, int>> history;
  for (size_t t = 0; t <= gold_sqs.size(); ++t) {
    Var s = encode_hierarchy(tape, vm, q_tokens, history);
    DecoderState state = init_decoder(tape, vm, s, regions, rng, training);
    std::vector<int> targets;
    if (t < gold_sqs.size()) {
      for (int id : gold_sqs[t].first) {
        if (id == Vocab::kUnk && unk_count) ++*unk_count;
        targets.push_back(id < 0 || id >= vocab_.size() ? Vocab::kUnk : id);
      }
      targets.push_back(Vocab::kEoq);
    } else {
      targets.push_back(Vocab::kStop);  // stop decision at round T+1
    }
    int prev = Vocab::kBos;
    for (int target : targets) {
      DecodeOut out = decode_step(vm, state, prev);
      loss = add(loss, cross_entropy_logits(out.logits, target));
      state = out.state;
      prev = target;
    }
    if (t < gold_sqs.size()) history.emplace_back(gold_sqs[t].first, gold_sqs[t].second);
  }
  return loss;
}

Dialogue Questioner::generate_sqs(const RegionSet& regions, const std::vector<int>& q_tokens,
                                  const OracleFn& oracle, int max_rounds) const {
  Dialogue d;
  std::vector<std::pair<std::vector<int>, int>> history;
  for (int round = 0; round < max_rounds; ++round) {
    Tape tape;
    VarMap vm = params_.lift(tape, false);
    Var s = encode_hierarchy(tape, vm, q_tokens, history);
    DecoderState state = init_decoder(tape, vm, s, regions);
    std::vector<int> tokens;
    int prev = Vocab::kBos;
    for (int step = 0; step < cfg_.max_len; ++step) {
      DecodeOut out = decode_step(vm, state, prev);
      int next = argmax(out.dist.value());
      state = out.state;
      if (step == 0 && next == Vocab::kStop) {
        d.stop_reason = "stop";
        return d;
      }
      if (next == Vocab::kEoq) break;
      tokens.push_back(next);
      prev = next;
    }
    std::optional<std::string> answer = oracle(vocab_.decode(tokens));
    if (!answer.has_value()) {
      d.stop_reason = "oracle_error";
      d.rounds.push_back(DialogueRound{tokens, ""});
      return d;
    }
    d.rounds.push_back(DialogueRound{tokens, *answer});
    history.emplace_back(tokens, vocab_.id(*answer));
  }
  d.stop_reason = "max_rounds";
  return d;
}

void Questioner::save(const std::string& path) const {
  std::map<std::string, std::string> meta;
  meta["model"] = "questioner";
  std::ostringstream cfg;
  cfg << cfg_.d_emb << ' ' << cfg_.d_qfea << ' ' << cfg_.d_att << ' ' << cfg_.raw_feature_width << ' '
      << cfg_.max_len << ' ' << cfg_.max_rounds << ' ' << cfg_.beam;
  meta["config"] = cfg.str();
  meta["vocab"] = vocab_.join();
  params_.save(path, meta);
}

Questioner Questioner::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParamStore ps = ParamStore::load(path, &meta);
  if (meta["model"] != "questioner") throw std::runtime_error("Questioner::load: wrong checkpoint kind");
  QuestionerConfig cfg;
  std::istringstream in(meta["config"]);
  in >> cfg.d_emb >> cfg.d_qfea >> cfg.d_att >> cfg.raw_feature_width >> cfg.max_len >>
      cfg.max_rounds >> cfg.beam;
  Questioner q(cfg, Vocab::from_join(meta["vocab"]), 0);
  q.params_ = std::move(ps);
  return q;
}

}  // namespace covqa::questioner
