// SPDX-License-Identifier: Apache-2.0
#include "covqa/sqsgen/sqsgen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "covqa/vocab.hpp"

namespace covqa::sqsgen {

const char* mod_kind_name(ModKind k) {
  switch (k) {
    case ModKind::Adjective: return "adjective";
    case ModKind::Quantifier: return "quantifier";
    case ModKind::PrepPhrase: return "prep";
    case ModKind::Position: return "position";
    case ModKind::Action: return "action";
  }
  return "?";
}

const char* qtype_name(QType t) {
  switch (t) {
    case QType::Existence: return "Existence";
    case QType::Verb: return "Verb";
    case QType::Attribute: return "Attribute";
    case QType::Num: return "Num";
    case QType::Prep: return "Prep";
  }
  return "?";
}

namespace {

bool nounish(Tag t) { return t == Tag::Noun || t == Tag::Propn; }
bool verbish(Tag t) { return t == Tag::Verb || t == Tag::Vbg || t == Tag::Vbn; }
bool glueish(Tag t) { return t == Tag::Det || t == Tag::Pron || t == Tag::Adp; }

std::optional<int> as_count(const std::string& w) {
  if (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::stoi(w);
  static const std::map<std::string, int> words = {
      {"zero", 0}, {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4},  {"five", 5},
      {"six", 6},  {"seven", 7}, {"eight", 8}, {"nine", 9},  {"ten", 10}};
  auto it = words.find(w);
  if (it != words.end()) return it->second;
  return std::nullopt;
}

struct RawBlock {
  NounBlock block;
  int last_index = 0;
  bool position_word = false;
};

}  // namespace

std::vector<NounBlock> extract_noun_blocks(const Lexicon& lex, const std::vector<TaggedToken>& tagged) {
  int n = static_cast<int>(tagged.size());
  std::vector<RawBlock> raws;
  int i = 0;
  while (i < n) {
    int start = i;
    int j = i;
    if (tagged[static_cast<size_t>(j)].tag == Tag::Det) ++j;
    std::vector<Modifier> pending;
    while (j < n &&
           (tagged[static_cast<size_t>(j)].tag == Tag::Adj || tagged[static_cast<size_t>(j)].tag == Tag::Num)) {
      const auto& t = tagged[static_cast<size_t>(j)];
      pending.push_back(Modifier{t.tag == Tag::Adj ? ModKind::Adjective : ModKind::Quantifier, t.text, ""});
      ++j;
    }
    if (j < n && nounish(tagged[static_cast<size_t>(j)].tag)) {
      int head_at = j;
      while (j + 1 < n && nounish(tagged[static_cast<size_t>(j + 1)].tag)) ++j, ++head_at;
      RawBlock rb;
      rb.block.head = lex.singularize(tagged[static_cast<size_t>(head_at)].text);
      rb.block.modifiers = std::move(pending);
      rb.block.first_index = start;
      rb.last_index = j;
      rb.position_word = lex.is_position_word(rb.block.head);
      ++j;
      // predicate adjective right after the block, not opening another block
      if (j < n && tagged[static_cast<size_t>(j)].tag == Tag::Adj &&
          (j + 1 >= n || (!nounish(tagged[static_cast<size_t>(j + 1)].tag) &&
                          tagged[static_cast<size_t>(j + 1)].tag != Tag::Adj &&
                          tagged[static_cast<size_t>(j + 1)].tag != Tag::Num))) {
        rb.block.modifiers.push_back(Modifier{ModKind::Adjective, tagged[static_cast<size_t>(j)].text, ""});
        rb.last_index = j;
        ++j;
      }
      raws.push_back(std::move(rb));
      i = j;
    } else {
      i = start + 1;
    }
  }

  // prepositional links between adjacent blocks: gap is ADP or VERB-ish + ADP
  for (size_t b = 0; b + 1 < raws.size(); ++b) {
    int lo = raws[b].last_index + 1;
    int hi = raws[b + 1].block.first_index - 1;
    int span = hi - lo + 1;
    std::string prep;
    if (span == 1 && tagged[static_cast<size_t>(lo)].tag == Tag::Adp) {
      prep = tagged[static_cast<size_t>(lo)].text;
    } else if (span == 2 && verbish(tagged[static_cast<size_t>(lo)].tag) &&
               tagged[static_cast<size_t>(lo + 1)].tag == Tag::Adp) {
      prep = tagged[static_cast<size_t>(lo + 1)].text;
    }
    if (prep.empty()) continue;
    if (raws[b + 1].position_word)
      raws[b].block.modifiers.push_back(Modifier{ModKind::Position, raws[b + 1].block.head, ""});
    else
      raws[b].block.modifiers.push_back(Modifier{ModKind::PrepPhrase, prep, raws[b + 1].block.head});
  }

  std::vector<NounBlock> out;
  for (auto& rb : raws) {
    if (rb.position_word) continue;
    if (lex.is_filtered(rb.block.head)) continue;
    auto& mods = rb.block.modifiers;
    mods.erase(std::remove_if(mods.begin(), mods.end(),
                              [&](const Modifier& m) {
                                return m.kind == ModKind::PrepPhrase && lex.is_filtered(m.object);
                              }),
               mods.end());
    out.push_back(std::move(rb.block));
  }
  return out;
}

std::vector<NounBlock> filter_abstract(const Lexicon& lex, std::vector<NounBlock> blocks) {
  auto bad = [&](const std::string& w) { return lex.is_abstract(w) || lex.is_non_substantive(w); };
  blocks.erase(std::remove_if(blocks.begin(), blocks.end(),
                              [&](const NounBlock& b) { return bad(b.head); }),
               blocks.end());
  for (auto& b : blocks)
    b.modifiers.erase(std::remove_if(b.modifiers.begin(), b.modifiers.end(),
                                     [&](const Modifier& m) {
                                       return m.kind == ModKind::PrepPhrase && bad(m.object);
                                     }),
                      b.modifiers.end());
  return blocks;
}

int classify_order(const std::vector<NounBlock>& blocks) {
  std::set<std::string> entities;
  bool modified = false;
  for (const auto& b : blocks) {
    entities.insert(b.head);
    modified = modified || !b.modifiers.empty();
  }
  if (entities.empty()) return 0;
  if (entities.size() >= 2) return 3;
  return modified ? 2 : 1;
}

namespace {

// Table-pattern matchers over the tag sequence, anchored at both ends.
struct Cursor {
  const std::vector<TaggedToken>* t;
  int i = 0;
  int n() const { return static_cast<int>(t->size()); }
  const TaggedToken& tok(int k) const { return (*t)[static_cast<size_t>(k)]; }
  bool done() const { return i >= n(); }
};

void skip_glue(Cursor& c) {
  while (!c.done() && glueish(c.tok(c.i).tag)) ++c.i;
}

// consumes a maximal NOUN/PROPN run, returning the last (head) text
std::optional<std::string> noun_run(Cursor& c, const Lexicon& lex) {
  if (c.done() || !nounish(c.tok(c.i).tag)) return std::nullopt;
  int head = c.i;
  while (c.i < c.n() && nounish(c.tok(c.i).tag)) head = c.i++;
  return lex.singularize(c.tok(head).text);
}

bool lit_do_you_see(Cursor& c) {
  if (c.i + 2 < c.n() && c.tok(c.i).text == "do" && c.tok(c.i + 1).text == "you" &&
      c.tok(c.i + 2).text == "see") {
    c.i += 3;
    return true;
  }
  return false;
}

std::vector<NounBlock> saved_entities(const Lexicon& lex, const std::vector<std::string>& nouns) {
  std::vector<NounBlock> out;
  int idx = 0;
  for (const auto& nword : nouns) {
    if (lex.is_filtered(nword)) continue;
    out.push_back(NounBlock{nword, {}, idx++});
  }
  return out;
}

}  // namespace

std::optional<MatchResult> match_type(const Lexicon& lex, const std::vector<TaggedToken>& tagged) {
  if (tagged.empty()) return std::nullopt;

  // Existence: (do you see)? [DET|PRON|ADP]* [NOUN|PROPN]* NOUN
  {
    Cursor c{&tagged};
    lit_do_you_see(c);
    skip_glue(c);
    auto head = noun_run(c, lex);
    if (head && c.done()) return MatchResult{QType::Existence, {}};  // no extra processing
  }
  // Verb: existence shape plus a participle
  {
    Cursor c{&tagged};
    lit_do_you_see(c);
    skip_glue(c);
    auto head = noun_run(c, lex);
    if (head && !c.done() && (c.tok(c.i).tag == Tag::Vbg || c.tok(c.i).tag == Tag::Vbn)) {
      std::string participle = c.tok(c.i).text;
      ++c.i;
      if (c.done()) {
        auto saved = saved_entities(lex, {*head});
        if (!saved.empty()) saved[0].modifiers.push_back(Modifier{ModKind::Action, participle, ""});
        return MatchResult{QType::Verb, saved};
      }
    }
  }
  // Attribute: BE [DET|PRON|ADP]* [NOUN|PROPN]* NOUN? ADJ?
  {
    Cursor c{&tagged};
    if (c.tok(0).tag == Tag::Be) {
      ++c.i;
      skip_glue(c);
      auto head = noun_run(c, lex);
      std::string adj;
      if (!c.done() && c.tok(c.i).tag == Tag::Adj) {
        adj = c.tok(c.i).text;
        ++c.i;
      }
      if (c.done()) {
        std::vector<NounBlock> saved = head ? saved_entities(lex, {*head}) : std::vector<NounBlock>{};
        if (!saved.empty() && !adj.empty())
          saved[0].modifiers.push_back(Modifier{ModKind::Adjective, adj, ""});
        return MatchResult{QType::Attribute, saved};
      }
    }
  }
  // Num: BE [DET|PRON|ADP]* NUM NOUN NOUN*
  {
    Cursor c{&tagged};
    if (c.tok(0).tag == Tag::Be) {
      ++c.i;
      skip_glue(c);
      if (!c.done() && c.tok(c.i).tag == Tag::Num) {
        std::string num = c.tok(c.i).text;
        ++c.i;
        auto head = noun_run(c, lex);
        if (head && c.done()) {
          auto saved = saved_entities(lex, {*head});
          if (!saved.empty()) saved[0].modifiers.push_back(Modifier{ModKind::Quantifier, num, ""});
          return MatchResult{QType::Num, saved};
        }
      }
    }
  }
  // Prep: BE [DET|PRON|ADP]* [NOUN|PROPN]* NOUN VERB? ADP DET NOUN NOUN*
  {
    Cursor c{&tagged};
    if (c.tok(0).tag == Tag::Be) {
      ++c.i;
      skip_glue(c);
      auto subject = noun_run(c, lex);
      if (subject) {
        if (!c.done() && verbish(c.tok(c.i).tag)) ++c.i;
        if (!c.done() && c.tok(c.i).tag == Tag::Adp) {
          std::string prep = c.tok(c.i).text;
          ++c.i;
          if (!c.done() && c.tok(c.i).tag == Tag::Det) {
            ++c.i;
            auto object = noun_run(c, lex);
            if (object && c.done()) {
              std::vector<NounBlock> saved;
              if (!lex.is_filtered(*subject)) {
                NounBlock s{*subject, {}, 0};
                if (lex.is_position_word(*object))
                  s.modifiers.push_back(Modifier{ModKind::Position, *object, ""});
                else
                  s.modifiers.push_back(Modifier{ModKind::PrepPhrase, prep, *object});
                saved.push_back(std::move(s));
              }
              if (!lex.is_position_word(*object) && !lex.is_filtered(*object))
                saved.push_back(NounBlock{*object, {}, 1});
              return MatchResult{QType::Prep, saved};
            }
          }
        }
      }
    }
  }
  return std::nullopt;
}

namespace {

std::optional<SqsItem> instantiate(const Lexicon& lex, const std::string& head, const Modifier& m) {
  switch (m.kind) {
    case ModKind::Adjective:
      if (!lex.is_attribute(m.value)) return std::nullopt;  // comparatives have no template
      return SqsItem{"Is the " + head + " " + m.value + "?", oracle::SqType::Attribute, 2, ""};
    case ModKind::Quantifier: {
      auto n = as_count(m.value);
      if (!n) return std::nullopt;
      if (*n == 1) return SqsItem{"Is there only one " + head + "?", oracle::SqType::Number, 2, ""};
      return SqsItem{"Are there " + std::to_string(*n) + " " + head + "s?", oracle::SqType::Number, 2, ""};
    }
    case ModKind::PrepPhrase:
      if (m.value != "on" && m.value != "in") return std::nullopt;  // only templated preps
      return SqsItem{"Is there any " + head + " " + m.value + " the " + m.object + "?",
                     oracle::SqType::Prep, 2, ""};
    case ModKind::Position:
      if (m.value == "middle")
        return SqsItem{"Is the " + head + " in the middle?", oracle::SqType::Position, 2, ""};
      return SqsItem{"Is the " + head + " on the " + m.value + "?", oracle::SqType::Position, 2, ""};
    case ModKind::Action:
      return std::nullopt;  // no Verb-type template; the existence SQ already covers the entity
  }
  return std::nullopt;
}

}  // namespace

SqsRecord build_sqs_tagged(const std::string& question, const std::vector<TaggedToken>& tagged,
                           const oracle::Scene& scene, const Lexicon& lex,
                           const oracle::GtOracleConfig& oracle_cfg) {
  SqsRecord rec;
  rec.image_id = scene.image_id;
  rec.question = question;

  std::vector<NounBlock> blocks = extract_noun_blocks(lex, tagged);
  if (blocks.empty()) {
    if (auto m = match_type(lex, tagged)) blocks = std::move(m->saved);
  }
  blocks = filter_abstract(lex, blocks);
  int order = classify_order(blocks);
  if (order <= 1) return rec;

  std::vector<SqsItem> items;
  for (const auto& b : blocks)
    items.push_back(SqsItem{"Is there any " + b.head + "?", oracle::SqType::Existence, 1, ""});
  if (order == 3) {
    for (const auto& b : blocks)
      for (const auto& m : b.modifiers)
        if (auto item = instantiate(lex, b.head, m)) items.push_back(std::move(*item));
  }

  std::stable_sort(items.begin(), items.end(),
                   [](const SqsItem& a, const SqsItem& b) { return a.order < b.order; });
  std::set<std::string> seen;
  for (auto& item : items) {
    if (static_cast<int>(rec.items.size()) >= kMaxSqs) break;
    if (!seen.insert(item.sq).second) continue;
    item.answer = oracle::gt_answer(item.sq, scene, oracle_cfg).answer;
    rec.items.push_back(std::move(item));
  }
  return rec;
}

SqsRecord build_sqs(const std::string& question, const oracle::Scene& scene, const Lexicon& lex,
                    const oracle::GtOracleConfig& oracle_cfg) {
  return build_sqs_tagged(question, tag(lex, tokenize(question)), scene, lex, oracle_cfg);
}

DatasetStats dataset_stats(const std::vector<SqsRecord>& records) {
  DatasetStats s;
  std::set<int> images;
  for (const auto& r : records) {
    images.insert(r.image_id);
    ++s.records;
    if (!r.items.empty()) ++s.non_empty;
    for (const auto& item : r.items) {
      ++s.total_sqs;
      ++s.type_hist[oracle::sq_type_name(item.type)];
      ++s.answer_hist[item.answer];
    }
  }
  s.images = static_cast<int>(images.size());
  s.avg_sq = s.records == 0 ? 0.0 : static_cast<double>(s.total_sqs) / s.records;
  return s;
}

}  // namespace covqa::sqsgen
