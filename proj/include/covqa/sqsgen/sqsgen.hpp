// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covqa/oracle/oracle.hpp"
#include "covqa/sqsgen/lexicon.hpp"

namespace covqa::sqsgen {

enum class ModKind { Adjective, Quantifier, PrepPhrase, Position, Action };

const char* mod_kind_name(ModKind k);

struct Modifier {
  ModKind kind;
  std::string value;   // adjective / count / preposition / side / participle
  std::string object;  // prep-phrase object entity
};

struct NounBlock {
  std::string head;  // singularized, never a filter-list word
  std::vector<Modifier> modifiers;
  int first_index = 0;
};

// Contiguous noun chunks with their modifier tuples; step-1 filter-list heads
// are dropped here. Prepositional links between adjacent blocks become
// PrepPhrase (or Position) modifiers on the subject block; a predicate
// adjective right after a block attaches to it.
std::vector<NounBlock> extract_noun_blocks(const Lexicon& lex, const std::vector<TaggedToken>& tagged);

// Step-4 filtering: drops abstract and non-substantive heads with their
// tuples, and prep tuples whose object is filtered.
std::vector<NounBlock> filter_abstract(const Lexicon& lex, std::vector<NounBlock> blocks);

// 0 no entity / 1 single bare entity / 2 entity & modifier / 3 multiple entities.
int classify_order(const std::vector<NounBlock>& blocks);

enum class QType { Existence, Verb, Attribute, Num, Prep };
const char* qtype_name(QType t);

struct MatchResult {
  QType type;
  std::vector<NounBlock> saved;  // nouns recovered by the pattern, with tuples
};

// Table-driven pattern matching for questions whose block extraction came up
// empty; patterns are tried in fixed order with first-match-wins.
std::optional<MatchResult> match_type(const Lexicon& lex, const std::vector<TaggedToken>& tagged);

struct SqsItem {
  std::string sq;
  oracle::SqType type;
  int order = 1;  // 1 existence, 2 tuple-derived
  std::string answer;
};

struct SqsRecord {
  int image_id = 0;
  std::string question;
  std::vector<std::string> answers;
  std::vector<SqsItem> items;  // sorted low-to-high order, at most 4
};

inline constexpr int kMaxSqs = 4;

// Full construction pipeline: tag, extract, filter, classify, instantiate
// templates low-to-high, synthesize answers from the scene. Order-0/1
// originals yield an empty sequence; order-2 originals yield only existence
// sub-questions; order-3 originals add tuple-derived order-2 sub-questions.
SqsRecord build_sqs(const std::string& question, const oracle::Scene& scene, const Lexicon& lex,
                    const oracle::GtOracleConfig& oracle_cfg = {});

// Real-data path: consumes externally produced tags instead of the lexicon tagger.
SqsRecord build_sqs_tagged(const std::string& question, const std::vector<TaggedToken>& tagged,
                           const oracle::Scene& scene, const Lexicon& lex,
                           const oracle::GtOracleConfig& oracle_cfg = {});

struct DatasetStats {
  int images = 0;
  int records = 0;
  int non_empty = 0;
  int total_sqs = 0;
  double avg_sq = 0.0;
  std::map<std::string, int> type_hist;
  std::map<std::string, int> answer_hist;
};

DatasetStats dataset_stats(const std::vector<SqsRecord>& records);

}  // namespace covqa::sqsgen
