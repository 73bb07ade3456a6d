// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/harness/train.hpp"

namespace covqa::harness {

inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v = {"full", "wo-sub-loss", "wo-SQS", "shuffle",
                                             "random-drop-50"};
  return v;
}

// Trains (or loads a cached checkpoint for) the variant's model and
// evaluates it on the test corpus. shuffle and random-drop-50 reuse the full
// model with inference-time SQS perturbation. cache_dir may be empty to
// disable checkpoint reuse.
EvalReport run_ablation(const std::string& variant, const Corpus& train, const Corpus& test,
                        const acvrm::AcvrmConfig& cfg, const Vocab& vocab,
                        const AnswerVocab& answers, const TrainOptions& opt,
                        const std::string& cache_dir, const std::string& config_hash,
                        std::vector<RecordResult>* rows_out = nullptr);

// Average training-set frequency of each test SQ, reported per SQS-length
// bucket (the detail-statistics table field).
std::map<std::string, double> sq_train_frequency_by_bucket(const Corpus& train, const Corpus& test);

}  // namespace covqa::harness
