// SPDX-License-Identifier: Apache-2.0
#include "covqa/oracle/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace covqa::oracle {

using namespace covqa::numcore;

const char* sq_type_name(SqType t) {
  switch (t) {
    case SqType::Existence: return "existence";
    case SqType::Attribute: return "attribute";
    case SqType::Prep: return "prep";
    case SqType::Number: return "number";
    case SqType::Position: return "position";
  }
  return "?";
}

std::optional<SqType> sq_type_from_name(const std::string& name) {
  for (SqType t : {SqType::Existence, SqType::Attribute, SqType::Prep, SqType::Number, SqType::Position})
    if (name == sq_type_name(t)) return t;
  return std::nullopt;
}

namespace {

std::string singular(const std::string& w) {
  if (w.size() > 1 && w.back() == 's') return w.substr(0, w.size() - 1);
  return w;
}

std::optional<int> parse_count(const std::string& w) {
  if (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::stoi(w);
  static const std::map<std::string, int> words = {
      {"zero", 0}, {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4},
      {"five", 5}, {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}};
  auto it = words.find(w);
  if (it != words.end()) return it->second;
  return std::nullopt;
}

}  // namespace

ParsedSq parse_sq(const std::string& text) {
  ParsedSq sq;
  std::vector<std::string> t = tokenize(text);
  auto is = [&](size_t i, const char* w) { return t[i] == w; };

  // "is the X on the left/right" | "is the X in the middle"
  if (t.size() == 6 && is(0, "is") && is(1, "the") && is(4, "the") &&
      ((is(3, "on") && (t[5] == "left" || t[5] == "right")) || (is(3, "in") && t[5] == "middle"))) {
    sq.ok = true;
    sq.type = SqType::Position;
    sq.entity = t[2];
    sq.position = t[5];
    return sq;
  }
  // "is there any X on/in the Y"
  if (t.size() == 7 && is(0, "is") && is(1, "there") && is(2, "any") && (t[4] == "on" || t[4] == "in") &&
      is(5, "the")) {
    sq.ok = true;
    sq.type = SqType::Prep;
    sq.entity = t[3];
    sq.preposition = t[4];
    sq.entity2 = t[6];
    return sq;
  }
  // "is there only one X"
  if (t.size() == 5 && is(0, "is") && is(1, "there") && is(2, "only") && is(3, "one")) {
    sq.ok = true;
    sq.type = SqType::Number;
    sq.entity = t[4];
    sq.number = 1;
    return sq;
  }
  // "are there N Xs"
  if (t.size() == 4 && is(0, "are") && is(1, "there")) {
    if (auto n = parse_count(t[2])) {
      sq.ok = true;
      sq.type = SqType::Number;
      sq.number = *n;
      sq.entity = singular(t[3]);
      return sq;
    }
  }
  // "is there any C X" (existence with attribute)
  if (t.size() == 5 && is(0, "is") && is(1, "there") && is(2, "any")) {
    sq.ok = true;
    sq.type = SqType::Existence;
    sq.attribute = t[3];
    sq.entity = t[4];
    return sq;
  }
  // "is there any X"
  if (t.size() == 4 && is(0, "is") && is(1, "there") && is(2, "any")) {
    sq.ok = true;
    sq.type = SqType::Existence;
    sq.entity = t[3];
    return sq;
  }
  // "are there Xs"
  if (t.size() == 3 && is(0, "are") && is(1, "there")) {
    sq.ok = true;
    sq.type = SqType::Existence;
    sq.entity = singular(t[2]);
    return sq;
  }
  // "is the X A"
  if (t.size() == 4 && is(0, "is") && is(1, "the")) {
    sq.ok = true;
    sq.type = SqType::Attribute;
    sq.entity = t[2];
    sq.attribute = t[3];
    return sq;
  }
  return sq;
}

double intersection_over_smaller(const geomattn::BoundingBox& a, const geomattn::BoundingBox& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  double smaller = std::min(a.w * a.h, b.w * b.h);
  return smaller <= 0 ? 0.0 : inter / smaller;
}

std::string horizontal_third(const geomattn::BoundingBox& box, double canvas_w) {
  double cx = (box.x + box.w / 2.0) / canvas_w;
  if (cx < 1.0 / 3.0) return "left";
  if (cx <= 2.0 / 3.0) return "middle";
  return "right";
}

OracleAnswer gt_answer(const ParsedSq& sq, const Scene& scene, const GtOracleConfig& cfg) {
  if (!sq.ok) return OracleAnswer{"", 0.0, false};
  auto has_attr = [](const SceneObject& o, const std::string& a) {
    return o.color == a || o.size == a;
  };
  auto matches = [&](const SceneObject& o) {
    return o.label == sq.entity && (sq.attribute.empty() || has_attr(o, sq.attribute));
  };
  bool yes = false;
  switch (sq.type) {
    case SqType::Existence:
      yes = std::any_of(scene.objects.begin(), scene.objects.end(), matches);
      break;
    case SqType::Attribute:
      yes = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
        return o.label == sq.entity && has_attr(o, sq.attribute);
      });
      break;
    case SqType::Prep:
      for (const auto& a : scene.objects) {
        if (a.label != sq.entity) continue;
        for (const auto& b : scene.objects)
          if (b.label == sq.entity2 &&
              intersection_over_smaller(a.box, b.box) >= cfg.overlap_threshold) {
            yes = true;
            break;
          }
        if (yes) break;
      }
      break;
    case SqType::Number: {
      int count = 0;
      for (const auto& o : scene.objects)
        if (o.label == sq.entity) ++count;
      yes = count == sq.number;
      break;
    }
    case SqType::Position:
      yes = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
        return o.label == sq.entity && horizontal_third(o.box, scene.canvas_w) == sq.position;
      });
      break;
  }
  return OracleAnswer{yes ? "yes" : "no", 1.0, true};
}

OracleAnswer gt_answer(const std::string& sq_text, const Scene& scene, const GtOracleConfig& cfg) {
  return gt_answer(parse_sq(sq_text), scene, cfg);
}

LearnedOracle::LearnedOracle(LearnedOracleConfig cfg, Vocab vocab, uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)), gru_{"orc.gru", cfg.d_emb, cfg.d_hidden} {
  Rng rng(seed);
  params_.add_uniform("orc.emb", {vocab_.size(), cfg_.d_emb}, rng, fan_in_bound(cfg_.d_emb));
  gru_.init(params_, rng);
  Linear{"orc.att_in", cfg_.raw_feature_width + cfg_.d_hidden, cfg_.d_att, true, true}.init(params_, rng);
  Linear{"orc.att_out", cfg_.d_att, 1, true, true}.init(params_, rng);
  Linear{"orc.hv", cfg_.raw_feature_width, cfg_.d_att, true, true}.init(params_, rng);
  Linear{"orc.hq", cfg_.d_hidden, cfg_.d_att, true, true}.init(params_, rng);
  Linear{"orc.l1", cfg_.d_att, cfg_.d_att, true, true}.init(params_, rng);
  Linear{"orc.l2", cfg_.d_att, 2, true, true}.init(params_, rng);
}

Var LearnedOracle::logits(Tape& tape, const VarMap& vm, const std::vector<int>& sq_tokens,
                          const RegionSet& regions, Rng* rng, bool training) const {
  regions.validate();
  if (regions.features.cols() != cfg_.raw_feature_width)
    throw std::invalid_argument("LearnedOracle: region feature width mismatch");
  std::vector<int> toks;
  for (int id : sq_tokens)
    if (id != Vocab::kPad) toks.push_back(id);
  if (toks.empty()) throw std::invalid_argument("LearnedOracle: empty sub-question");
  if (static_cast<int>(toks.size()) > cfg_.max_len) toks.resize(static_cast<size_t>(cfg_.max_len));

  auto drop = [&](Var x) { return (training && rng) ? dropout(x, cfg_.dropout, *rng, true) : x; };

  Var emb = gather_rows(lookup(vm, "orc.emb"), toks);
  Var q = gru_.zero_state(tape);
  for (int i = 0; i < static_cast<int>(toks.size()); ++i) q = gru_.step(vm, row(emb, i), q);

  Var raw = tape.leaf(regions.features);
  Linear att_in{"orc.att_in", cfg_.raw_feature_width + cfg_.d_hidden, cfg_.d_att, true, true};
  Linear att_out{"orc.att_out", cfg_.d_att, 1, true, true};
  std::vector<Var> scores;
  for (int i = 0; i < regions.count(); ++i)
    scores.push_back(att_out.apply(vm, drop(relu(att_in.apply(vm, concat({row(raw, i), q}))))));
  Var alpha = softmax(concat(scores));
  Var pooled = matvec(transpose(raw), alpha);
  Var h = mul(relu(Linear{"orc.hv", cfg_.raw_feature_width, cfg_.d_att, true, true}.apply(vm, pooled)),
              Linear{"orc.hq", cfg_.d_hidden, cfg_.d_att, true, true}.apply(vm, q));
  Var hidden = drop(relu(Linear{"orc.l1", cfg_.d_att, cfg_.d_att, true, true}.apply(vm, h)));
  return Linear{"orc.l2", cfg_.d_att, 2, true, true}.apply(vm, hidden);
}

OracleAnswer LearnedOracle::answer(const std::vector<int>& sq_tokens, const RegionSet& regions) const {
  Tape tape;
  VarMap vm = params_.lift(tape, false);
  Var l = logits(tape, vm, sq_tokens, regions);
  Var p = softmax(l);
  int best = argmax(p.value());
  return OracleAnswer{best == 0 ? "yes" : "no", p.value()[best], true};
}

void LearnedOracle::save(const std::string& path) const {
  std::map<std::string, std::string> meta;
  meta["model"] = "oracle";
  std::ostringstream cfg;
  cfg << cfg_.d_emb << ' ' << cfg_.d_hidden << ' ' << cfg_.d_att << ' ' << cfg_.raw_feature_width
      << ' ' << cfg_.max_len << ' ' << cfg_.dropout;
  meta["config"] = cfg.str();
  meta["vocab"] = vocab_.join();
  params_.save(path, meta);
}

LearnedOracle LearnedOracle::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParamStore ps = ParamStore::load(path, &meta);
  if (meta["model"] != "oracle") throw std::runtime_error("LearnedOracle::load: wrong checkpoint kind");
  LearnedOracleConfig cfg;
  std::istringstream in(meta["config"]);
  in >> cfg.d_emb >> cfg.d_hidden >> cfg.d_att >> cfg.raw_feature_width >> cfg.max_len >> cfg.dropout;
  LearnedOracle model(cfg, Vocab::from_join(meta["vocab"]), 0);
  model.params_ = std::move(ps);
  return model;
}

double OracleEvalReport::TypeStats::macro_f1() const {
  auto f1 = [](int tp, int fp, int fn) {
    double denom = 2.0 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * tp / denom;
  };
  return 0.5 * (f1(tp_yes, fp_yes, fn_yes) + f1(tp_no, fp_no, fn_no));
}

void OracleEvalReport::add(SqType type, const std::string& gold, const std::string& predicted) {
  auto update = [&](TypeStats& s) {
    ++s.total;
    if (gold == predicted) ++s.correct;
    if (predicted == "yes") {
      gold == "yes" ? ++s.tp_yes : ++s.fp_yes;
    } else if (gold == "yes") {
      ++s.fn_yes;
    }
    if (predicted == "no") {
      gold == "no" ? ++s.tp_no : ++s.fp_no;
    } else if (gold == "no") {
      ++s.fn_no;
    }
  };
  update(overall);
  update(per_type[sq_type_name(type)]);
}

}  // namespace covqa::oracle
