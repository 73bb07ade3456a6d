// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "covqa/numcore/optim.hpp"

namespace covqa::harness {

using namespace covqa::numcore;

const oracle::Scene& Corpus::scene_of(int image_id) const {
  if (scene_index_.empty())
    for (size_t i = 0; i < scenes.size(); ++i) scene_index_[scenes[i].image_id] = i;
  auto it = scene_index_.find(image_id);
  if (it == scene_index_.end()) throw std::out_of_range("Corpus: unknown image id");
  return scenes[it->second];
}

const RegionSet& Corpus::regions_of(int image_id) const {
  auto it = region_cache_.find(image_id);
  if (it == region_cache_.end())
    it = region_cache_.emplace(image_id, scene_regions(scene_of(image_id), synth)).first;
  return it->second;
}

std::vector<int> Corpus::scene_ids() const {
  std::vector<int> ids;
  for (const auto& s : scenes) ids.push_back(s.image_id);
  return ids;
}

Corpus make_corpus(std::vector<oracle::Scene> scenes, std::vector<QaRecord> questions,
                   std::vector<sqsgen::SqsRecord> sqs, SyntheticConfig synth) {
  if (questions.size() != sqs.size())
    throw std::invalid_argument("make_corpus: question/SQS record counts differ");
  Corpus c;
  c.scenes = std::move(scenes);
  c.questions = std::move(questions);
  c.sqs = std::move(sqs);
  c.synth = std::move(synth);
  return c;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& all, int train_scenes) {
  if (train_scenes < 0 || train_scenes > static_cast<int>(all.scenes.size()))
    throw std::invalid_argument("split_corpus: bad split point");
  std::set<int> train_ids;
  for (int i = 0; i < train_scenes; ++i) train_ids.insert(all.scenes[static_cast<size_t>(i)].image_id);
  Corpus a, b;
  a.synth = b.synth = all.synth;
  for (const auto& s : all.scenes) (train_ids.count(s.image_id) ? a : b).scenes.push_back(s);
  for (size_t i = 0; i < all.questions.size(); ++i) {
    Corpus& dst = train_ids.count(all.questions[i].image_id) ? a : b;
    dst.questions.push_back(all.questions[i]);
    dst.sqs.push_back(all.sqs[i]);
  }
  return {std::move(a), std::move(b)};
}

Corpus build_synthetic_corpus(const SyntheticConfig& cfg) {
  cfg.validate();
  sqsgen::Lexicon lex;
  lex.add_nouns(cfg.labels);
  lex.add_attributes(cfg.colors);
  lex.add_attributes(cfg.sizes);
  Rng root(cfg.seed);
  std::vector<oracle::Scene> scenes;
  std::vector<QaRecord> questions;
  std::vector<sqsgen::SqsRecord> sqs;
  for (int i = 0; i < cfg.scenes; ++i) {
    Rng scene_rng = root.derive("scene/" + std::to_string(i));
    oracle::Scene scene = gen_scene(cfg, i, scene_rng);
    Rng q_rng = root.derive("questions/" + std::to_string(i));
    for (auto& qa : gen_questions(scene, cfg, q_rng)) {
      sqsgen::SqsRecord rec = sqsgen::build_sqs(qa.question, scene, lex);
      rec.answers = qa.answers;
      sqs.push_back(std::move(rec));
      questions.push_back(std::move(qa));
    }
    scenes.push_back(std::move(scene));
  }
  return make_corpus(std::move(scenes), std::move(questions), std::move(sqs), cfg);
}

namespace {

// gradient accumulation across a mini-batch, averaged on flush
struct GradBatch {
  std::map<std::string, Tensor> sums;
  int count = 0;

  void add(const VarMap& vm) {
    for (const auto& [name, var] : vm) {
      if (!var.tape()->grad_set(var.id())) continue;
      const Tensor& g = var.grad();
      auto it = sums.find(name);
      if (it == sums.end())
        sums.emplace(name, g);
      else
        for (int i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
    ++count;
  }

  std::map<std::string, Tensor> average() {
    std::map<std::string, Tensor> out;
    for (auto& [name, t] : sums) {
      Tensor avg = t;
      for (int i = 0; i < avg.size(); ++i) avg[i] /= count;
      out.emplace(name, std::move(avg));
    }
    return out;
  }

  void reset() {
    sums.clear();
    count = 0;
  }
};

double scheduled_lr(const TrainOptions& opt, int epoch) {
  int e = std::min(epoch, opt.schedule.max_epoch);
  return opt.schedule.at(e);
}

// generic early-stopped epoch loop over shuffled training indices
template <typename StepFn, typename EvalFn>
void run_training(ParamStore& params, size_t train_size, const TrainOptions& opt,
                  const StepFn& step_one, const EvalFn& val_metric, TrainLog* log) {
  Adamax optimizer;
  Rng shuffle_rng(opt.seed ^ 0x5eedULL);
  ParamStore best = params;
  double best_metric = -1e300;
  int best_epoch = -1, since_best = 0;
  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    double lr = scheduled_lr(opt, epoch);
    std::vector<int> order = shuffle_rng.permutation(static_cast<int>(train_size));
    GradBatch batch;
    for (int idx : order) {
      step_one(idx, batch, epoch);
      if (batch.count >= opt.batch) {
        auto grads = batch.average();
        optimizer.step(params, grads, [&](const std::string& name) {
          return name.rfind("enc.", 0) == 0 ? opt.encoder_lr : lr;
        });
        batch.reset();
      }
    }
    if (batch.count > 0) {
      auto grads = batch.average();
      optimizer.step(params, grads, [&](const std::string& name) {
        return name.rfind("enc.", 0) == 0 ? opt.encoder_lr : lr;
      });
      batch.reset();
    }
    double metric = val_metric();
    if (log) log->val_metric.push_back(metric);
    if (opt.verbose) std::printf("  epoch %d: val metric %.4f (lr %.2g)\n", epoch, metric, lr);
    if (metric > best_metric + 1e-12) {
      best_metric = metric;
      best = params;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }
  params = best;
  if (log) log->best_epoch = best_epoch;
}

std::pair<std::vector<int>, std::vector<int>> record_split(const Corpus& data, double val_fraction) {
  // validation = records of the last ceil(fraction * scenes) scenes
  int n_scenes = static_cast<int>(data.scenes.size());
  int n_val = std::max(1, static_cast<int>(n_scenes * val_fraction + 0.999999));
  std::set<int> val_ids;
  for (int i = n_scenes - n_val; i < n_scenes; ++i)
    val_ids.insert(data.scenes[static_cast<size_t>(i)].image_id);
  std::vector<int> train_idx, val_idx;
  for (int i = 0; i < static_cast<int>(data.questions.size()); ++i)
    (val_ids.count(data.questions[static_cast<size_t>(i)].image_id) ? val_idx : train_idx).push_back(i);
  return {train_idx, val_idx};
}

}  // namespace

oracle::LearnedOracle train_oracle(const Corpus& data, const oracle::LearnedOracleConfig& cfg,
                                   const Vocab& vocab, const TrainOptions& opt, TrainLog* log) {
  struct Sample {
    int image_id;
    std::vector<int> tokens;
    int target;
  };
  auto [train_idx, val_idx] = record_split(data, opt.val_fraction);
  std::vector<Sample> train, val;
  auto collect = [&](const std::vector<int>& idx, std::vector<Sample>& out) {
    for (int i : idx)
      for (const auto& item : data.sqs[static_cast<size_t>(i)].items)
        out.push_back(Sample{data.sqs[static_cast<size_t>(i)].image_id,
                             vocab.encode_text(item.sq, cfg.max_len),
                             item.answer == "yes" ? 0 : 1});
  };
  collect(train_idx, train);
  collect(val_idx, val);
  if (train.empty()) throw std::runtime_error("train_oracle: no sub-questions in the corpus");

  oracle::LearnedOracle model(cfg, vocab, opt.seed);
  Rng drop_rng(opt.seed ^ 0xd809ULL);

  run_training(
      model.params(), train.size(), opt,
      [&](int idx, GradBatch& batch, int) {
        const Sample& s = train[static_cast<size_t>(idx)];
        Tape tape;
        VarMap vm = model.params().lift(tape, true);
        Var loss = cross_entropy_logits(
            model.logits(tape, vm, s.tokens, data.regions_of(s.image_id), &drop_rng, true), s.target);
        tape.backward(loss);
        batch.add(vm);
      },
      [&] {
        int correct = 0;
        for (const auto& s : val) {
          auto ans = model.answer(s.tokens, data.regions_of(s.image_id));
          correct += (ans.answer == "yes" ? 0 : 1) == s.target;
        }
        return val.empty() ? 0.0 : static_cast<double>(correct) / val.size();
      },
      log);
  return model;
}

acvrm::Acvrm train_answerer(const Corpus& data, const acvrm::AcvrmConfig& cfg, const Vocab& vocab,
                            const AnswerVocab& answers, const TrainOptions& opt, bool use_sqs,
                            bool use_sub_loss, TrainLog* log) {
  auto [train_idx, val_idx] = record_split(data, opt.val_fraction);
  acvrm::Acvrm model(cfg, vocab, answers, opt.seed);
  Rng drop_rng(opt.seed ^ 0xacc3ULL);
  int skipped = 0;

  auto encode_sqs = [&](const sqsgen::SqsRecord& rec) {
    std::vector<std::vector<int>> sq_tokens;
    std::vector<int> sub_targets;
    if (use_sqs)
      for (const auto& item : rec.items) {
        sq_tokens.push_back(vocab.encode_text(item.sq, cfg.max_q_len));
        sub_targets.push_back(acvrm::sub_target_id(item.answer));
      }
    return std::make_pair(sq_tokens, sub_targets);
  };

  run_training(
      model.params(), train_idx.size(), opt,
      [&](int pos, GradBatch& batch, int) {
        int i = train_idx[static_cast<size_t>(pos)];
        const QaRecord& qa = data.questions[static_cast<size_t>(i)];
        int gold = answers.id(qa.answers.front());
        if (gold < 0) return;
        Tensor targets({answers.size()});
        targets[gold] = 1.0;
        auto [sq_tokens, sub_targets] = encode_sqs(data.sqs[static_cast<size_t>(i)]);
        try {
          Tape tape;
          VarMap vm = model.params().lift(tape, true);
          Var loss = model.loss(tape, vm, data.regions_of(qa.image_id),
                                vocab.encode_text(qa.question, cfg.max_q_len), sq_tokens, targets,
                                sub_targets, use_sub_loss, true, &drop_rng);
          tape.backward(loss);
          batch.add(vm);
        } catch (const std::runtime_error&) {
          ++skipped;  // fully masked attention row; skip the record
        }
      },
      [&] {
        double score = 0;
        int n = 0;
        for (int i : val_idx) {
          const QaRecord& qa = data.questions[static_cast<size_t>(i)];
          auto [sq_tokens, sub_targets] = encode_sqs(data.sqs[static_cast<size_t>(i)]);
          (void)sub_targets;
          try {
            auto pred = model.predict(data.regions_of(qa.image_id),
                                      vocab.encode_text(qa.question, cfg.max_q_len), sq_tokens);
            score += vqa_accuracy(pred.answer, qa.answers);
          } catch (const std::runtime_error&) {
          }
          ++n;
        }
        return n == 0 ? 0.0 : score / n;
      },
      log);
  if (log) log->skipped_records = skipped;
  return model;
}

questioner::Questioner train_questioner(const Corpus& data, const questioner::QuestionerConfig& cfg,
                                        const Vocab& vocab, const TrainOptions& opt, TrainLog* log) {
  auto [train_idx, val_idx] = record_split(data, opt.val_fraction);
  questioner::Questioner model(cfg, vocab, opt.seed);
  Rng drop_rng(opt.seed ^ 0x4357ULL);

  auto gold_of = [&](int i) {
    std::vector<std::pair<std::vector<int>, int>> gold;
    for (const auto& item : data.sqs[static_cast<size_t>(i)].items)
      gold.emplace_back(vocab.encode_text(item.sq, cfg.max_len), vocab.id(item.answer));
    return gold;
  };

  run_training(
      model.params(), train_idx.size(), opt,
      [&](int pos, GradBatch& batch, int) {
        int i = train_idx[static_cast<size_t>(pos)];
        const QaRecord& qa = data.questions[static_cast<size_t>(i)];
        Tape tape;
        VarMap vm = model.params().lift(tape, true);
        Var loss = model.nll_loss(tape, vm, vocab.encode_text(qa.question, cfg.max_len),
                                  data.regions_of(qa.image_id), gold_of(i), nullptr, &drop_rng, true);
        tape.backward(loss);
        batch.add(vm);
      },
      [&] {
        double nll = 0;
        int n = 0;
        for (int i : val_idx) {
          const QaRecord& qa = data.questions[static_cast<size_t>(i)];
          Tape tape;
          VarMap vm = model.params().lift(tape, false);
          nll += model.nll_loss(tape, vm, vocab.encode_text(qa.question, cfg.max_len),
                                data.regions_of(qa.image_id), gold_of(i))
                     .value()[0];
          ++n;
        }
        return n == 0 ? 0.0 : -nll / n;  // higher is better
      },
      log);
  return model;
}

std::vector<RecordResult> evaluate_answerer(const acvrm::Acvrm& model, const Corpus& data,
                                            const VariantOptions& opt) {
  std::vector<RecordResult> rows;
  Rng perturb_rng(opt.perturb_seed);
  const Vocab& vocab = model.vocab();
  for (size_t i = 0; i < data.questions.size(); ++i) {
    const QaRecord& qa = data.questions[i];
    const sqsgen::SqsRecord& rec = data.sqs[i];

    std::vector<const sqsgen::SqsItem*> items;
    for (const auto& item : rec.items) items.push_back(&item);
    if (opt.perturb == VariantOptions::Perturb::Shuffle) {
      std::vector<int> perm = perturb_rng.permutation(static_cast<int>(items.size()));
      std::vector<const sqsgen::SqsItem*> shuffled;
      for (int p : perm) shuffled.push_back(items[static_cast<size_t>(p)]);
      items = std::move(shuffled);
    } else if (opt.perturb == VariantOptions::Perturb::Drop50) {
      std::vector<const sqsgen::SqsItem*> kept;
      for (auto* item : items)
        if (!perturb_rng.bernoulli(0.5)) kept.push_back(item);
      items = std::move(kept);
    }

    std::vector<std::vector<int>> sq_tokens;
    if (opt.use_sqs)
      for (auto* item : items)
        sq_tokens.push_back(vocab.encode_text(item->sq, model.config().max_q_len));

    RecordResult row;
    row.image_id = qa.image_id;
    row.question = qa.question;
    row.qform = qa.qform;
    row.answer_type = qa.answer_type;
    row.gold = qa.answers.front();
    row.sqs_len = static_cast<int>(rec.items.size());
    try {
      auto pred = model.predict(data.regions_of(qa.image_id),
                                vocab.encode_text(qa.question, model.config().max_q_len), sq_tokens);
      row.prediction = pred.answer;
      row.score = vqa_accuracy(pred.answer, qa.answers);
    } catch (const std::runtime_error&) {
      row.error = true;
      row.prediction = "";
      row.score = 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

oracle::OracleEvalReport evaluate_oracle(const oracle::LearnedOracle& model, const Corpus& data) {
  oracle::OracleEvalReport report;
  for (const auto& rec : data.sqs)
    for (const auto& item : rec.items) {
      auto pred = model.answer(model.vocab().encode_text(item.sq, model.config().max_len),
                               data.regions_of(rec.image_id));
      report.add(item.type, item.answer, pred.answer);
    }
  return report;
}

QuestionerEval evaluate_questioner(
    const questioner::Questioner& model, const Corpus& data,
    const std::function<std::unique_ptr<oracle::OracleSession>(int image_id)>& oracle_for) {
  QuestionerEval eval;
  std::vector<std::vector<std::string>> candidates;
  std::vector<std::vector<std::vector<std::string>>> references;
  const Vocab& vocab = model.vocab();
  for (size_t i = 0; i < data.questions.size(); ++i) {
    const QaRecord& qa = data.questions[i];
    auto session = oracle_for(qa.image_id);
    auto dialogue = model.generate_sqs(
        data.regions_of(qa.image_id), vocab.encode_text(qa.question, model.config().max_len),
        [&](const std::string& sq) -> std::optional<std::string> {
          auto ans = session->answer(sq);
          if (!ans.ok) return std::nullopt;
          return ans.answer;
        },
        model.config().max_rounds);

    DialogueRecord dr;
    dr.image_id = qa.image_id;
    dr.question = qa.question;
    dr.stop_reason = dialogue.stop_reason;
    for (const auto& round : dialogue.rounds)
      dr.rounds.emplace_back(vocab.decode(round.sq_tokens), round.answer);
    eval.log.push_back(std::move(dr));
    ++eval.dialogues;

    const auto& gold = data.sqs[i].items;
    if (gold.empty()) continue;
    std::vector<std::vector<std::string>> refs;
    for (const auto& item : gold) refs.push_back(tokenize(item.sq));
    for (const auto& round : dialogue.rounds) {
      std::vector<std::string> cand = tokenize(vocab.decode(round.sq_tokens));
      if (cand.empty()) continue;
      candidates.push_back(std::move(cand));
      references.push_back(refs);
    }
  }
  if (!candidates.empty()) {
    for (int n = 1; n <= 3; ++n)
      eval.bleu_scores[static_cast<size_t>(n - 1)] = bleu(candidates, references, n);
    eval.has_bleu = true;
  }
  return eval;
}

void save_dialogues(const std::string& path, const std::vector<DialogueRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["question"] = r.question;
    nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
    for (const auto& [sq, ans] : r.rounds) {
      nlohmann::ordered_json jr;
      jr["sq"] = sq;
      jr["answer"] = ans;
      rounds.push_back(std::move(jr));
    }
    j["rounds"] = std::move(rounds);
    j["stop_reason"] = r.stop_reason;
    out << j.dump() << "\n";
  }
}

std::string majority_answer(const Corpus& train) {
  std::map<std::string, int> counts;
  for (const auto& qa : train.questions) ++counts[qa.answers.front()];
  std::string best;
  int best_count = -1;
  for (const auto& [answer, count] : counts)
    if (count > best_count) {
      best = answer;
      best_count = count;
    }
  return best;
}

}  // namespace covqa::harness
