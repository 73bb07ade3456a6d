// SPDX-License-Identifier: Apache-2.0
#include "covqa/sqsgen/lexicon.hpp"

#include <algorithm>
#include <cctype>

namespace covqa::sqsgen {

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::Noun: return "NOUN";
    case Tag::Propn: return "PROPN";
    case Tag::Adj: return "ADJ";
    case Tag::Num: return "NUM";
    case Tag::Det: return "DET";
    case Tag::Pron: return "PRON";
    case Tag::Adp: return "ADP";
    case Tag::Verb: return "VERB";
    case Tag::Be: return "BE";
    case Tag::Vbg: return "VBG";
    case Tag::Vbn: return "VBN";
    case Tag::Other: return "X";
  }
  return "X";
}

std::optional<Tag> tag_from_name(const std::string& name) {
  for (Tag t : {Tag::Noun, Tag::Propn, Tag::Adj, Tag::Num, Tag::Det, Tag::Pron, Tag::Adp, Tag::Verb,
                Tag::Be, Tag::Vbg, Tag::Vbn, Tag::Other})
    if (name == tag_name(t)) return t;
  if (name == "AUX") return Tag::Be;
  return std::nullopt;
}

const std::vector<std::string>& Lexicon::step1_filter_list() {
  static const std::vector<std::string> list = {"lots", "someone", "something", "you", "they", "it"};
  return list;
}

const std::vector<std::string>& Lexicon::abstract_list() {
  static const std::vector<std::string> list = {"direction", "design", "surface",
                                                "area",      "emotion", "skill"};
  return list;
}

const std::vector<std::string>& Lexicon::non_substantive_list() {
  static const std::vector<std::string> list = {"mode", "base", "day", "love", "name", "print", "piece"};
  return list;
}

Lexicon::Lexicon() {
  auto put = [&](Tag t, std::initializer_list<const char*> words) {
    for (const char* w : words) tags_[w] = t;
  };
  put(Tag::Be, {"is", "are", "was", "were", "am", "be", "been", "being", "do", "does", "did"});
  put(Tag::Det, {"a", "an", "the", "this", "that", "these", "those", "any", "some", "no", "only",
                 "many", "much", "every"});
  put(Tag::Pron, {"you", "they", "it", "i", "he", "she", "we", "there", "what", "which", "where",
                  "when", "why", "how", "who"});
  put(Tag::Adp, {"on", "in", "near", "at", "of", "to", "under", "above", "behind", "over", "by",
                 "with", "than", "from", "beside"});
  put(Tag::Num, {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                 "ten", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9"});
  put(Tag::Verb, {"see", "look", "have", "has", "hold", "run", "sit", "stand", "wear", "contain"});
  put(Tag::Vbg, {"running", "sitting", "standing", "holding", "wearing", "flying", "lying"});
  put(Tag::Vbn, {"parked", "painted", "broken", "placed"});

  // attributes (colors, sizes, comparatives)
  add_attributes({"red", "green", "blue", "yellow", "black", "white", "brown", "orange", "purple",
                  "pink", "gray", "big", "small", "large", "tall", "tiny", "huge", "little", "short"});
  for (const char* w : {"bigger", "smaller", "larger", "taller", "shorter", "similar", "same"})
    tags_[w] = Tag::Adj;

  // synthetic object vocabulary plus common nouns for the golden suite
  add_nouns({"dog",   "cat",   "ball",  "cup",    "table", "flower", "vase", "car",
             "block", "chair", "man",   "woman",  "tree",  "box",    "book", "bird",
             "plate", "lamp",  "shelf", "bottle", "toy",   "person", "food", "glass"});

  // pronoun-like and quantifier nouns the step-1 list filters
  for (const char* w : {"lots", "someone", "something", "anyone", "anything", "body"}) {
    tags_[w] = Tag::Noun;
    nouns_.insert(w);
  }
  for (const auto& w : step1_filter_list()) filtered_.insert(w);

  for (const auto& w : abstract_list()) {
    abstract_.insert(w);
    tags_[w] = Tag::Noun;
    nouns_.insert(w);
  }
  for (const auto& w : non_substantive_list()) {
    non_substantive_.insert(w);
    tags_[w] = Tag::Noun;
    nouns_.insert(w);
  }
  // question-scaffold nouns of this domain, filtered like the step-4b list
  for (const char* w : {"color", "size", "kind", "type", "time", "picture", "image", "photo",
                        "scene", "side", "thing", "way"}) {
    non_substantive_.insert(w);
    tags_[w] = Tag::Noun;
    nouns_.insert(w);
  }

  for (const char* w : {"left", "right", "middle"}) {
    positions_.insert(w);
    tags_[w] = Tag::Noun;
    nouns_.insert(w);
  }
}

void Lexicon::add_nouns(const std::vector<std::string>& nouns) {
  for (const auto& n : nouns) {
    tags_[n] = Tag::Noun;
    nouns_.insert(n);
  }
}

void Lexicon::add_attributes(const std::vector<std::string>& attributes) {
  for (const auto& a : attributes) {
    tags_[a] = Tag::Adj;
    attributes_.insert(a);
  }
}

Tag Lexicon::tag_of(const std::string& word) const {
  auto it = tags_.find(word);
  if (it != tags_.end()) return it->second;
  // plural of a known noun
  if (word.size() > 1 && word.back() == 's') {
    auto base = tags_.find(word.substr(0, word.size() - 1));
    if (base != tags_.end() && base->second == Tag::Noun) return Tag::Noun;
  }
  return Tag::Noun;  // unknown words default NOUN
}

std::string Lexicon::singularize(const std::string& noun) const {
  if (nouns_.count(noun)) return noun;
  if (noun.size() > 1 && noun.back() == 's') {
    std::string base = noun.substr(0, noun.size() - 1);
    if (nouns_.count(base)) return base;
  }
  return noun;
}

bool Lexicon::is_filtered(const std::string& noun) const { return filtered_.count(noun) > 0; }
bool Lexicon::is_abstract(const std::string& noun) const { return abstract_.count(noun) > 0; }
bool Lexicon::is_non_substantive(const std::string& noun) const {
  return non_substantive_.count(noun) > 0;
}
bool Lexicon::is_position_word(const std::string& word) const { return positions_.count(word) > 0; }
bool Lexicon::is_attribute(const std::string& word) const { return attributes_.count(word) > 0; }

std::vector<TaggedToken> tag(const Lexicon& lex, const std::vector<std::string>& words) {
  if (words.empty()) return {};
  std::vector<TaggedToken> out;
  out.reserve(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    std::string lower;
    for (char c : words[i]) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    out.push_back(TaggedToken{lower, lex.tag_of(lower), static_cast<int>(i), "dep"});
  }
  return out;
}

}  // namespace covqa::sqsgen
