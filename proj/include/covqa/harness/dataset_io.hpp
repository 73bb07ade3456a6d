// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/acvrm/acvrm.hpp"
#include "covqa/harness/metrics.hpp"
#include "covqa/harness/synthetic.hpp"
#include "covqa/sqsgen/sqsgen.hpp"

namespace covqa::harness {

// Line-delimited JSON with stable field order throughout.

void save_scenes(const std::string& path, const std::vector<oracle::Scene>& scenes);
std::vector<oracle::Scene> load_scenes(const std::string& path);

void save_questions(const std::string& path, const std::vector<QaRecord>& records);
std::vector<QaRecord> load_questions(const std::string& path);

void save_sqs(const std::string& path, const std::vector<sqsgen::SqsRecord>& records);
std::vector<sqsgen::SqsRecord> load_sqs(const std::string& path);

// Manual-correction merge: an override replaces the record with the same
// (image_id, question).
void apply_overrides(std::vector<sqsgen::SqsRecord>& records,
                     const std::vector<sqsgen::SqsRecord>& overrides);

// Ingestion row for externally produced data: question text plus optional
// pre-tagged tokens (word/POS/dep triples).
struct IngestRecord {
  QaRecord qa;
  std::vector<sqsgen::TaggedToken> tagged;
  bool has_tags = false;
};
std::vector<IngestRecord> load_ingest(const std::string& path);

struct TraceRecord {
  int image_id = 0;
  std::string question;
  std::string prediction;
  std::string gold;
  acvrm::AnswerTrace trace;
};
void save_traces(const std::string& path, const std::vector<TraceRecord>& traces);

std::string report_to_json(const EvalReport& report);
void save_report(const std::string& path, const EvalReport& report);

void save_stats(const std::string& path, const sqsgen::DatasetStats& stats, uint64_t seed,
                const std::string& config_hash);

}  // namespace covqa::harness
