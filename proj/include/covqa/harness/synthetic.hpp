// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/numcore/rng.hpp"
#include "covqa/oracle/scene.hpp"
#include "covqa/regions.hpp"
#include "covqa/vocab.hpp"

namespace covqa::harness {

struct SyntheticConfig {
  std::vector<std::string> labels = {"dog",    "cat",  "ball", "cup",   "table",
                                     "flower", "vase", "car",  "block", "chair"};
  std::vector<std::string> colors = {"red", "green", "blue", "yellow", "black", "white"};
  std::vector<std::string> sizes = {"big", "small"};
  int min_objects = 3, max_objects = 8;
  double canvas_w = 100, canvas_h = 100;
  double min_extent = 12, max_extent = 45;
  int feature_width = 24;
  int scenes = 500;
  int max_count_answer = 5;
  uint64_t seed = 0;

  int feature_payload() const {
    return static_cast<int>(labels.size() + colors.size() + sizes.size()) + 4;
  }
  void validate() const;
};

// Question/answer vocabularies derived from the config; deterministic order.
Vocab build_vocab(const SyntheticConfig& cfg);
AnswerVocab build_answers(const SyntheticConfig& cfg);

oracle::Scene gen_scene(const SyntheticConfig& cfg, int image_id, numcore::Rng& rng);

// Deterministic region encoding: label/color/size one-hots plus the
// normalized box, zero-padded to feature_width.
RegionSet scene_regions(const oracle::Scene& scene, const SyntheticConfig& cfg);

struct QaRecord {
  int image_id = 0;
  std::string question;
  std::vector<std::string> answers;  // synthetic scenes carry one gold answer
  std::string qform;        // existence|color_what|color_yn|size_yn|size_what|count_what|count_yn|prep|compare|position
  std::string answer_type;  // yes/no | number | other
};

// Template questions over scene truth (Table-6-style orders); every answer
// is computed from the annotation.
std::vector<QaRecord> gen_questions(const oracle::Scene& scene, const SyntheticConfig& cfg,
                                    numcore::Rng& rng);

std::string answer_type_of(const std::string& answer);

}  // namespace covqa::harness
