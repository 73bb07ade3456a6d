// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "covqa/numcore/nn.hpp"
#include "covqa/oracle/scene.hpp"
#include "covqa/regions.hpp"
#include "covqa/vocab.hpp"

namespace covqa::oracle {

struct OracleAnswer {
  std::string answer;
  double confidence = 0.0;
  bool ok = true;
};

enum class SqType { Existence, Attribute, Prep, Number, Position };

const char* sq_type_name(SqType t);
std::optional<SqType> sq_type_from_name(const std::string& name);

// Structural parse of a template-generated sub-question.
struct ParsedSq {
  bool ok = false;
  SqType type = SqType::Existence;
  std::string entity;
  std::string entity2;     // prep object
  std::string attribute;   // existence-with-color or attribute templates
  std::string position;    // left | middle | right
  std::string preposition; // on | in
  int number = 0;
};

ParsedSq parse_sq(const std::string& text);

struct GtOracleConfig {
  double overlap_threshold = 0.5;  // intersection over the smaller box
};

// intersection area / min(area a, area b); 0 when disjoint.
double intersection_over_smaller(const geomattn::BoundingBox& a, const geomattn::BoundingBox& b);

// left / middle / right by box-center thirds of the canvas width.
std::string horizontal_third(const geomattn::BoundingBox& box, double canvas_w);

// Rule-based answer from scene truth; set semantics over objects.
// Unparseable questions produce an error answer with confidence 0.
OracleAnswer gt_answer(const ParsedSq& sq, const Scene& scene, const GtOracleConfig& cfg = {});
OracleAnswer gt_answer(const std::string& sq_text, const Scene& scene, const GtOracleConfig& cfg = {});

struct LearnedOracleConfig {
  int d_emb = 16;
  int d_hidden = 64;
  int d_att = 64;
  int raw_feature_width = 24;
  int max_len = 14;
  double dropout = 0.2;
};

// Simplified learned answerer: question-guided attention over regions, fused
// product, MLP over {yes, no}.
class LearnedOracle {
 public:
  LearnedOracle(LearnedOracleConfig cfg, Vocab vocab, uint64_t seed);

  const LearnedOracleConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  numcore::ParamStore& params() { return params_; }
  const numcore::ParamStore& params() const { return params_; }

  numcore::Var logits(numcore::Tape& tape, const numcore::VarMap& vm,
                      const std::vector<int>& sq_tokens, const RegionSet& regions,
                      numcore::Rng* rng = nullptr, bool training = false) const;

  OracleAnswer answer(const std::vector<int>& sq_tokens, const RegionSet& regions) const;

  void save(const std::string& path) const;
  static LearnedOracle load(const std::string& path);

 private:
  LearnedOracleConfig cfg_;
  Vocab vocab_;
  numcore::ParamStore params_;
  numcore::GruCell gru_;
};

// Pluggable per-image oracle: generation loops query it one sub-question at
// a time. Implementations are read-only after construction.
class OracleSession {
 public:
  virtual ~OracleSession() = default;
  virtual OracleAnswer answer(const std::string& sq_text) const = 0;
};

class GtOracleSession : public OracleSession {
 public:
  GtOracleSession(Scene scene, GtOracleConfig cfg = {}) : scene_(std::move(scene)), cfg_(cfg) {}
  OracleAnswer answer(const std::string& sq_text) const override {
    return gt_answer(sq_text, scene_, cfg_);
  }

 private:
  Scene scene_;
  GtOracleConfig cfg_;
};

class LearnedOracleSession : public OracleSession {
 public:
  LearnedOracleSession(const LearnedOracle* model, RegionSet regions)
      : model_(model), regions_(std::move(regions)) {}
  OracleAnswer answer(const std::string& sq_text) const override {
    return model_->answer(model_->vocab().encode_text(sq_text, model_->config().max_len), regions_);
  }

 private:
  const LearnedOracle* model_;
  RegionSet regions_;
};

// Accuracy and macro F1 over {yes, no}, overall and per SQ type.
struct OracleEvalReport {
  struct TypeStats {
    int total = 0, correct = 0;
    int tp_yes = 0, fp_yes = 0, fn_yes = 0;
    int tp_no = 0, fp_no = 0, fn_no = 0;
    double accuracy() const { return total == 0 ? 0.0 : double(correct) / total; }
    double macro_f1() const;
  };
  TypeStats overall;
  std::map<std::string, TypeStats> per_type;

  void add(SqType type, const std::string& gold, const std::string& predicted);
};

}  // namespace covqa::oracle
