// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "covqa/oracle/oracle.hpp"

namespace covqa::harness {

using oracle::Scene;
using oracle::SceneObject;

void SyntheticConfig::validate() const {
  if (labels.empty() || colors.empty() || sizes.empty())
    throw std::invalid_argument("SyntheticConfig: empty vocabulary");
  if (feature_width < feature_payload())
    throw std::invalid_argument("SyntheticConfig: feature_width smaller than the encoded payload");
  if (min_objects < 1 || max_objects < min_objects)
    throw std::invalid_argument("SyntheticConfig: bad objects-per-scene range");
  for (const auto& l : labels)
    if (!l.empty() && l.back() == 's')
      throw std::invalid_argument("SyntheticConfig: labels must not end in 's' (plural forms are derived)");
}

Vocab build_vocab(const SyntheticConfig& cfg) {
  std::vector<std::string> words = {"is",   "are",  "there", "a",    "an",    "the",  "any",  "only",
                                    "in",   "on",   "what",  "how",  "many",  "much", "of",   "than",
                                    "one",  "color", "size",  "picture", "left", "right", "middle",
                                    "bigger", "smaller", "yes", "no"};
  for (const auto& l : cfg.labels) {
    words.push_back(l);
    words.push_back(l + "s");
  }
  for (const auto& c : cfg.colors) words.push_back(c);
  for (const auto& s : cfg.sizes) words.push_back(s);
  for (int i = 0; i <= 9; ++i) words.push_back(std::to_string(i));
  return Vocab(words);
}

AnswerVocab build_answers(const SyntheticConfig& cfg) {
  std::vector<std::string> answers = {"yes", "no"};
  for (const auto& c : cfg.colors) answers.push_back(c);
  for (const auto& s : cfg.sizes) answers.push_back(s);
  for (int i = 0; i <= cfg.max_count_answer; ++i) answers.push_back(std::to_string(i));
  return AnswerVocab(std::move(answers));
}

Scene gen_scene(const SyntheticConfig& cfg, int image_id, numcore::Rng& rng) {
  cfg.validate();
  Scene scene;
  scene.image_id = image_id;
  scene.canvas_w = cfg.canvas_w;
  scene.canvas_h = cfg.canvas_h;
  int n = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.label = cfg.labels[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(cfg.labels.size()) - 1))];
    o.color = cfg.colors[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(cfg.colors.size()) - 1))];
    o.size = cfg.sizes[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(cfg.sizes.size()) - 1))];
    double w = rng.uniform(cfg.min_extent, cfg.max_extent);
    double h = rng.uniform(cfg.min_extent, cfg.max_extent);
    o.box = geomattn::BoundingBox{rng.uniform(0, cfg.canvas_w - w), rng.uniform(0, cfg.canvas_h - h), w, h};
    scene.objects.push_back(std::move(o));
  }
  return scene;
}

RegionSet scene_regions(const Scene& scene, const SyntheticConfig& cfg) {
  int m = static_cast<int>(scene.objects.size());
  if (m == 0) throw std::invalid_argument("scene_regions: empty scene");
  RegionSet rs;
  rs.features = numcore::Tensor({m, cfg.feature_width});
  int nl = static_cast<int>(cfg.labels.size());
  int nc = static_cast<int>(cfg.colors.size());
  int ns = static_cast<int>(cfg.sizes.size());
  for (int i = 0; i < m; ++i) {
    const SceneObject& o = scene.objects[static_cast<size_t>(i)];
    auto hot = [&](const std::vector<std::string>& vocab, const std::string& v, int offset) {
      auto it = std::find(vocab.begin(), vocab.end(), v);
      if (it == vocab.end()) throw std::invalid_argument("scene_regions: value outside vocabulary: " + v);
      rs.features.at(i, offset + static_cast<int>(it - vocab.begin())) = 1.0;
    };
    hot(cfg.labels, o.label, 0);
    hot(cfg.colors, o.color, nl);
    hot(cfg.sizes, o.size, nl + nc);
    rs.features.at(i, nl + nc + ns + 0) = o.box.x / cfg.canvas_w;
    rs.features.at(i, nl + nc + ns + 1) = o.box.y / cfg.canvas_h;
    rs.features.at(i, nl + nc + ns + 2) = o.box.w / cfg.canvas_w;
    rs.features.at(i, nl + nc + ns + 3) = o.box.h / cfg.canvas_h;
    rs.boxes.push_back(o.box);
  }
  return rs;
}

std::string answer_type_of(const std::string& answer) {
  if (answer == "yes" || answer == "no") return "yes/no";
  if (!answer.empty() && std::all_of(answer.begin(), answer.end(),
                                     [](unsigned char c) { return std::isdigit(c); }))
    return "number";
  return "other";
}

namespace {

std::vector<std::string> present_labels(const Scene& scene) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& o : scene.objects)
    if (seen.insert(o.label).second) out.push_back(o.label);
  return out;
}

int label_count(const Scene& scene, const std::string& label) {
  int c = 0;
  for (const auto& o : scene.objects)
    if (o.label == label) ++c;
  return c;
}

// unique attribute value across a label's objects, or empty
std::string unique_attr(const Scene& scene, const std::string& label, bool color) {
  std::string value;
  for (const auto& o : scene.objects) {
    if (o.label != label) continue;
    const std::string& v = color ? o.color : o.size;
    if (value.empty())
      value = v;
    else if (value != v)
      return "";
  }
  return value;
}

bool any_with_attr(const Scene& scene, const std::string& label, const std::string& attr) {
  for (const auto& o : scene.objects)
    if (o.label == label && (o.color == attr || o.size == attr)) return true;
  return false;
}

double max_area(const Scene& scene, const std::string& label) {
  double best = 0;
  for (const auto& o : scene.objects)
    if (o.label == label) best = std::max(best, o.box.w * o.box.h);
  return best;
}

bool any_overlap(const Scene& scene, const std::string& l1, const std::string& l2, double thr) {
  for (const auto& a : scene.objects) {
    if (a.label != l1) continue;
    for (const auto& b : scene.objects)
      if (b.label == l2 && oracle::intersection_over_smaller(a.box, b.box) >= thr) return true;
  }
  return false;
}

bool any_in_third(const Scene& scene, const std::string& label, const std::string& side) {
  for (const auto& o : scene.objects)
    if (o.label == label && oracle::horizontal_third(o.box, scene.canvas_w) == side) return true;
  return false;
}

}  // namespace

std::vector<QaRecord> gen_questions(const Scene& scene, const SyntheticConfig& cfg, numcore::Rng& rng) {
  std::vector<QaRecord> out;
  std::vector<std::string> present = present_labels(scene);
  std::vector<std::string> absent;
  for (const auto& l : cfg.labels)
    if (std::find(present.begin(), present.end(), l) == present.end()) absent.push_back(l);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(v.size()) - 1))];
  };
  auto push = [&](std::string q, std::string a, std::string form) {
    out.push_back(QaRecord{scene.image_id, std::move(q), {a}, std::move(form), answer_type_of(a)});
  };

  push("is there a " + pick(present), "yes", "existence");
  if (!absent.empty()) push("is there a " + pick(absent), "no", "existence");

  {
    std::string l = pick(present);
    std::string c = rng.bernoulli(0.5) ? pick(cfg.colors) : unique_attr(scene, l, true);
    if (c.empty()) c = pick(cfg.colors);
    push("is the " + l + " " + c, any_with_attr(scene, l, c) ? "yes" : "no", "color_yn");
  }
  {
    std::string l = pick(present);
    std::string c = unique_attr(scene, l, true);
    if (!c.empty()) push("what color is the " + l, c, "color_what");
  }
  {
    std::string l = pick(present);
    std::string s = pick(cfg.sizes);
    push("is the " + l + " " + s, any_with_attr(scene, l, s) ? "yes" : "no", "size_yn");
  }
  {
    std::string l = pick(present);
    std::string s = unique_attr(scene, l, false);
    if (!s.empty()) push("what size is the " + l, s, "size_what");
  }
  {
    std::string l = pick(present);
    int count = label_count(scene, l);
    if (count <= cfg.max_count_answer)
      push("how many " + l + "s are there", std::to_string(count), "count_what");
  }
  {
    std::string l = pick(present);
    int count = label_count(scene, l);
    int asked = count;
    if (rng.bernoulli(0.5)) asked += rng.bernoulli(0.5) ? 1 : -1;
    asked = std::clamp(asked, 1, cfg.max_count_answer);
    push("are there " + std::to_string(asked) + " " + l + "s in the picture",
         asked == count ? "yes" : "no", "count_yn");
  }
  for (int rep = 0; rep < 2 && present.size() >= 2; ++rep) {
    std::string l1 = pick(present), l2 = pick(present);
    if (l1 == l2) continue;
    push("is the " + l1 + " on the " + l2, any_overlap(scene, l1, l2, 0.5) ? "yes" : "no", "prep");
  }
  if (present.size() >= 2) {
    std::string l1 = pick(present), l2 = pick(present);
    if (l1 != l2)
      push("is the " + l1 + " bigger than the " + l2,
           max_area(scene, l1) > max_area(scene, l2) ? "yes" : "no", "compare");
  }
  {
    std::string l = pick(present);
    const char* sides[3] = {"left", "right", "middle"};
    std::string side = sides[rng.uniform_int(0, 2)];
    std::string q = side == "middle" ? "is the " + l + " in the middle" : "is the " + l + " on the " + side;
    push(std::move(q), any_in_third(scene, l, side) ? "yes" : "no", "position");
  }
  return out;
}

}  // namespace covqa::harness
