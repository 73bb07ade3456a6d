// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "covqa/acvrm/acvrm.hpp"
#include "covqa/harness/config.hpp"
#include "covqa/harness/dataset_io.hpp"
#include "covqa/harness/metrics.hpp"
#include "covqa/harness/synthetic.hpp"
#include "covqa/oracle/oracle.hpp"
#include "covqa/questioner/questioner.hpp"
#include "covqa/sqsgen/sqsgen.hpp"

namespace covqa::harness {

// Aligned dataset views: questions[i] and sqs[i] describe the same record.
struct Corpus {
  std::vector<oracle::Scene> scenes;
  std::vector<QaRecord> questions;
  std::vector<sqsgen::SqsRecord> sqs;
  SyntheticConfig synth;

  const oracle::Scene& scene_of(int image_id) const;
  const RegionSet& regions_of(int image_id) const;
  std::vector<int> scene_ids() const;

 private:
  mutable std::map<int, size_t> scene_index_;
  mutable std::map<int, RegionSet> region_cache_;
};

Corpus make_corpus(std::vector<oracle::Scene> scenes, std::vector<QaRecord> questions,
                   std::vector<sqsgen::SqsRecord> sqs, SyntheticConfig synth);

// Splits by scene position: the first train_scenes scenes (and their records)
// form the first corpus, the rest the second.
std::pair<Corpus, Corpus> split_corpus(const Corpus& all, int train_scenes);

// Builds the full synthetic corpus (scenes, questions, rule-engine SQS).
Corpus build_synthetic_corpus(const SyntheticConfig& cfg);

struct TrainLog {
  std::vector<double> val_metric;  // one entry per epoch (higher is better)
  int best_epoch = -1;
  int skipped_records = 0;
};

oracle::LearnedOracle train_oracle(const Corpus& data, const oracle::LearnedOracleConfig& cfg,
                                   const Vocab& vocab, const TrainOptions& opt,
                                   TrainLog* log = nullptr);

acvrm::Acvrm train_answerer(const Corpus& data, const acvrm::AcvrmConfig& cfg, const Vocab& vocab,
                            const AnswerVocab& answers, const TrainOptions& opt, bool use_sqs,
                            bool use_sub_loss, TrainLog* log = nullptr);

questioner::Questioner train_questioner(const Corpus& data, const questioner::QuestionerConfig& cfg,
                                        const Vocab& vocab, const TrainOptions& opt,
                                        TrainLog* log = nullptr);

struct VariantOptions {
  bool use_sqs = true;
  enum class Perturb { None, Shuffle, Drop50 } perturb = Perturb::None;
  uint64_t perturb_seed = 0;
};

std::vector<RecordResult> evaluate_answerer(const acvrm::Acvrm& model, const Corpus& data,
                                            const VariantOptions& opt);

// Agreement of the learned oracle with the rule oracle over every SQ of the
// corpus, with per-type breakdown.
oracle::OracleEvalReport evaluate_oracle(const oracle::LearnedOracle& model, const Corpus& data);

struct DialogueRecord {
  int image_id = 0;
  std::string question;
  std::vector<std::pair<std::string, std::string>> rounds;  // (sq text, answer)
  std::string stop_reason;
};

struct QuestionerEval {
  std::array<double, 3> bleu_scores{0, 0, 0};
  bool has_bleu = false;
  int dialogues = 0;
  std::vector<DialogueRecord> log;
};

// Generates an SQS per record with the given oracle factory and scores the
// generated sub-questions against the dataset SQS (BLEU-1..3; records with
// empty gold sequences are skipped, each candidate scores against all gold
// sub-questions of its record).
QuestionerEval evaluate_questioner(
    const questioner::Questioner& model, const Corpus& data,
    const std::function<std::unique_ptr<oracle::OracleSession>(int image_id)>& oracle_for);

void save_dialogues(const std::string& path, const std::vector<DialogueRecord>& rows);

std::string majority_answer(const Corpus& train);

}  // namespace covqa::harness
