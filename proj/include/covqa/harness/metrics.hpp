// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace covqa::harness {

// Standard VQA consensus score min(matches/3, 1). Records with one gold
// answer (the synthetic corpus) score exact-match {0, 1}.
double vqa_accuracy(const std::string& prediction, const std::vector<std::string>& gold);

// Corpus BLEU in percent with modified n-gram precision, clipping against
// multiple references, and brevity penalty on the closest reference length
// (ties toward the shorter). Zero precision at any order gives 0.
double bleu(const std::vector<std::vector<std::string>>& candidates,
            const std::vector<std::vector<std::vector<std::string>>>& references, int max_n);

inline const char* sqs_bucket(int sqs_len) {
  switch (sqs_len) {
    case 0: return "0";
    case 1: return "1";
    case 2: return "2";
    default: return "3&4";
  }
}

// Per-record evaluation row; the report aggregates these.
struct RecordResult {
  int image_id = 0;
  std::string question;
  std::string qform;
  std::string answer_type;
  std::string prediction;
  std::string gold;
  double score = 0.0;
  int sqs_len = 0;
  bool error = false;
};

struct Bucket {
  int count = 0;
  double score_sum = 0.0;
  double accuracy() const { return count == 0 ? 0.0 : score_sum / count; }
};

struct EvalReport {
  std::string variant;
  uint64_t seed = 0;
  std::string config_hash;
  Bucket overall;
  std::map<std::string, Bucket> by_answer_type;  // Y/N, Num, Other buckets
  std::map<std::string, Bucket> by_qform;
  std::map<std::string, Bucket> by_sqs_bucket;          // SQS-0/1/2/3&4
  std::map<std::string, double> sq_train_freq_by_bucket;  // avg train frequency of SQs
  std::array<double, 3> bleu_scores{0, 0, 0};
  bool has_bleu = false;
  int errors = 0;

  void add(const RecordResult& r);
};

}  // namespace covqa::harness
