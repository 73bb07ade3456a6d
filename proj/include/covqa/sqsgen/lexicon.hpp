// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace covqa::sqsgen {

// Coarse tag set used by the decomposition patterns.
enum class Tag { Noun, Propn, Adj, Num, Det, Pron, Adp, Verb, Be, Vbg, Vbn, Other };

const char* tag_name(Tag t);
std::optional<Tag> tag_from_name(const std::string& name);

struct TaggedToken {
  std::string text;
  Tag tag = Tag::Noun;
  int head = -1;    // dependency head index, self for root (ingested, not produced)
  std::string dep;  // dependency relation label
};

// Closed-vocabulary tagger for the synthetic domain. Unknown words default
// to NOUN; plural forms of known nouns are recognized and singularized.
class Lexicon {
 public:
  Lexicon();

  void add_nouns(const std::vector<std::string>& nouns);
  void add_attributes(const std::vector<std::string>& attributes);  // tagged ADJ

  Tag tag_of(const std::string& word) const;
  std::string singularize(const std::string& noun) const;

  bool is_filtered(const std::string& noun) const;         // construction step-1 list
  bool is_abstract(const std::string& noun) const;         // step-4a
  bool is_non_substantive(const std::string& noun) const;  // step-4b + domain scaffold nouns
  bool is_position_word(const std::string& word) const;    // left / right / middle
  bool is_attribute(const std::string& word) const;        // colors and sizes

  // The word lists the construction steps pin down.
  static const std::vector<std::string>& step1_filter_list();
  static const std::vector<std::string>& abstract_list();
  static const std::vector<std::string>& non_substantive_list();

 private:
  std::map<std::string, Tag> tags_;
  std::set<std::string> nouns_;
  std::set<std::string> filtered_, abstract_, non_substantive_;
  std::set<std::string> attributes_, positions_;
};

std::vector<TaggedToken> tag(const Lexicon& lex, const std::vector<std::string>& words);

}  // namespace covqa::sqsgen
