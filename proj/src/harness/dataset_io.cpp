// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/dataset_io.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace covqa::harness {

using ordered_json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::vector<ordered_json> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ordered_json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(ordered_json::parse(line));
  }
  return rows;
}

ordered_json round6(double v) { return v; }

}  // namespace

void save_scenes(const std::string& path, const std::vector<oracle::Scene>& scenes) {
  auto out = open_out(path);
  for (const auto& s : scenes) {
    ordered_json j;
    j["image_id"] = s.image_id;
    j["canvas_w"] = s.canvas_w;
    j["canvas_h"] = s.canvas_h;
    ordered_json objs = ordered_json::array();
    for (const auto& o : s.objects) {
      ordered_json jo;
      jo["label"] = o.label;
      jo["color"] = o.color;
      jo["size"] = o.size;
      jo["x"] = o.box.x;
      jo["y"] = o.box.y;
      jo["w"] = o.box.w;
      jo["h"] = o.box.h;
      objs.push_back(std::move(jo));
    }
    j["objects"] = std::move(objs);
    out << j.dump() << "\n";
  }
}

std::vector<oracle::Scene> load_scenes(const std::string& path) {
  std::vector<oracle::Scene> scenes;
  for (const auto& j : read_lines(path)) {
    oracle::Scene s;
    s.image_id = j.at("image_id").get<int>();
    s.canvas_w = j.at("canvas_w").get<double>();
    s.canvas_h = j.at("canvas_h").get<double>();
    for (const auto& jo : j.at("objects")) {
      oracle::SceneObject o;
      o.label = jo.at("label").get<std::string>();
      o.color = jo.at("color").get<std::string>();
      o.size = jo.at("size").get<std::string>();
      o.box = geomattn::BoundingBox{jo.at("x").get<double>(), jo.at("y").get<double>(),
                                    jo.at("w").get<double>(), jo.at("h").get<double>()};
      s.objects.push_back(std::move(o));
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_questions(const std::string& path, const std::vector<QaRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    ordered_json j;
    j["image_id"] = r.image_id;
    j["question"] = r.question;
    j["answers"] = r.answers;
    j["qform"] = r.qform;
    j["answer_type"] = r.answer_type;
    out << j.dump() << "\n";
  }
}

std::vector<QaRecord> load_questions(const std::string& path) {
  std::vector<QaRecord> records;
  for (const auto& j : read_lines(path)) {
    QaRecord r;
    r.image_id = j.at("image_id").get<int>();
    r.question = j.at("question").get<std::string>();
    r.answers = j.at("answers").get<std::vector<std::string>>();
    r.qform = j.at("qform").get<std::string>();
    r.answer_type = j.at("answer_type").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

void save_sqs(const std::string& path, const std::vector<sqsgen::SqsRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    ordered_json j;
    j["image_id"] = r.image_id;
    j["question"] = r.question;
    j["answers"] = r.answers;
    ordered_json items = ordered_json::array();
    for (const auto& item : r.items) {
      ordered_json ji;
      ji["sq"] = item.sq;
      ji["type"] = oracle::sq_type_name(item.type);
      ji["order"] = item.order;
      ji["answer"] = item.answer;
      items.push_back(std::move(ji));
    }
    j["sqs"] = std::move(items);
    out << j.dump() << "\n";
  }
}

std::vector<sqsgen::SqsRecord> load_sqs(const std::string& path) {
  std::vector<sqsgen::SqsRecord> records;
  for (const auto& j : read_lines(path)) {
    sqsgen::SqsRecord r;
    r.image_id = j.at("image_id").get<int>();
    r.question = j.at("question").get<std::string>();
    r.answers = j.at("answers").get<std::vector<std::string>>();
    for (const auto& ji : j.at("sqs")) {
      sqsgen::SqsItem item;
      item.sq = ji.at("sq").get<std::string>();
      auto type = oracle::sq_type_from_name(ji.at("type").get<std::string>());
      if (!type) throw std::runtime_error("load_sqs: unknown sq type");
      item.type = *type;
      item.order = ji.at("order").get<int>();
      item.answer = ji.at("answer").get<std::string>();
      r.items.push_back(std::move(item));
    }
    records.push_back(std::move(r));
  }
  return records;
}

void apply_overrides(std::vector<sqsgen::SqsRecord>& records,
                     const std::vector<sqsgen::SqsRecord>& overrides) {
  std::map<std::pair<int, std::string>, const sqsgen::SqsRecord*> index;
  for (const auto& o : overrides) index[{o.image_id, o.question}] = &o;
  for (auto& r : records) {
    auto it = index.find({r.image_id, r.question});
    if (it != index.end()) r = *it->second;
  }
}

std::vector<IngestRecord> load_ingest(const std::string& path) {
  std::vector<IngestRecord> records;
  for (const auto& j : read_lines(path)) {
    IngestRecord r;
    r.qa.image_id = j.at("image_id").get<int>();
    r.qa.question = j.at("question").get<std::string>();
    if (j.contains("answers")) r.qa.answers = j.at("answers").get<std::vector<std::string>>();
    if (j.contains("tokens")) {
      r.has_tags = true;
      for (const auto& jt : j.at("tokens")) {
        sqsgen::TaggedToken t;
        t.text = jt.at("word").get<std::string>();
        auto tag = sqsgen::tag_from_name(jt.at("pos").get<std::string>());
        t.tag = tag.value_or(sqsgen::Tag::Noun);
        if (jt.contains("head")) t.head = jt.at("head").get<int>();
        if (jt.contains("dep")) t.dep = jt.at("dep").get<std::string>();
        r.tagged.push_back(std::move(t));
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_traces(const std::string& path, const std::vector<TraceRecord>& traces) {
  auto out = open_out(path);
  for (const auto& t : traces) {
    ordered_json j;
    j["image_id"] = t.image_id;
    j["question"] = t.question;
    j["prediction"] = t.prediction;
    j["gold"] = t.gold;
    ordered_json steps = ordered_json::array();
    for (const auto& s : t.trace.steps) {
      ordered_json js;
      js["sq"] = s.sq;
      js["answer"] = s.given_answer;
      js["predicted"] = s.predicted_answer;
      js["top2"] = std::vector<int>{s.top2[0], s.top2[1]};
      ordered_json deg = ordered_json::array();
      for (double d : s.in_degree) deg.push_back(round6(d));
      js["in_degree"] = std::move(deg);
      steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    j["fusion_top2"] = std::vector<int>{t.trace.fusion_top2[0], t.trace.fusion_top2[1]};
    ordered_json fat = ordered_json::array();
    for (double d : t.trace.fusion_attention) fat.push_back(round6(d));
    j["fusion_attention"] = std::move(fat);
    out << j.dump() << "\n";
  }
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  j["variant"] = report.variant;
  j["seed"] = report.seed;
  j["config_hash"] = report.config_hash;
  j["total"] = report.overall.count;
  j["accuracy"] = report.overall.accuracy();
  j["errors"] = report.errors;
  auto buckets = [](const std::map<std::string, Bucket>& m) {
    ordered_json out;
    for (const auto& [k, b] : m) {
      ordered_json jb;
      jb["count"] = b.count;
      jb["accuracy"] = b.accuracy();
      out[k] = std::move(jb);
    }
    return out;
  };
  j["by_answer_type"] = buckets(report.by_answer_type);
  j["by_qform"] = buckets(report.by_qform);
  j["by_sqs_bucket"] = buckets(report.by_sqs_bucket);
  if (!report.sq_train_freq_by_bucket.empty()) {
    ordered_json f;
    for (const auto& [k, v] : report.sq_train_freq_by_bucket) f[k] = v;
    j["avg_sq_train_freq_by_bucket"] = std::move(f);
  }
  if (report.has_bleu) {
    j["bleu1"] = report.bleu_scores[0];
    j["bleu2"] = report.bleu_scores[1];
    j["bleu3"] = report.bleu_scores[2];
  }
  return j.dump(2);
}

void save_report(const std::string& path, const EvalReport& report) {
  auto out = open_out(path);
  out << report_to_json(report) << "\n";
}

void save_stats(const std::string& path, const sqsgen::DatasetStats& stats, uint64_t seed,
                const std::string& config_hash) {
  ordered_json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["images"] = stats.images;
  j["qa_pairs"] = stats.records;
  j["non_empty_sqs"] = stats.non_empty;
  j["total_sqs"] = stats.total_sqs;
  j["avg_sq"] = stats.avg_sq;
  ordered_json th;
  for (const auto& [k, v] : stats.type_hist) th[k] = v;
  j["sq_type_hist"] = std::move(th);
  ordered_json ah;
  for (const auto& [k, v] : stats.answer_hist) ah[k] = v;
  j["sq_answer_hist"] = std::move(ah);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace covqa::harness
