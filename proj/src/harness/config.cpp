// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "covqa/numcore/rng.hpp"

namespace covqa::harness {

Config Config::defaults() {
  Config c;
  auto& kv = c.kv_;
  kv["seed"] = "0";
  kv["synthetic.scenes"] = "500";
  kv["synthetic.min_objects"] = "3";
  kv["synthetic.max_objects"] = "8";
  kv["synthetic.feature_width"] = "24";
  kv["synthetic.canvas"] = "100";
  kv["model.d_q"] = "64";
  kv["model.d_v"] = "64";
  kv["model.gvr_heads"] = "4";
  kv["model.gvr_k"] = "5";
  kv["model.enc_layers"] = "2";
  kv["model.enc_heads"] = "4";
  kv["model.enc_ff"] = "128";
  kv["model.max_q_len"] = "14";
  kv["model.max_rounds"] = "4";
  kv["model.dropout"] = "0.2";
  kv["model.classifier_dropout"] = "0.5";
  kv["model.geo_eps"] = "1e-3";
  kv["model.wavelength_scale"] = "1";
  kv["model.wavelength_progression"] = "1000";
  kv["questioner.d_emb"] = "16";
  kv["questioner.d_qfea"] = "32";
  kv["questioner.d_att"] = "32";
  kv["oracle.d_emb"] = "16";
  kv["oracle.d_hidden"] = "64";
  kv["oracle.d_att"] = "64";
  kv["train.max_epochs"] = "18";
  kv["train.batch"] = "32";
  kv["train.patience"] = "3";
  kv["train.val_fraction"] = "0.1";
  kv["train.encoder_lr"] = "1e-3";
  kv["train.base_lr"] = "5e-4";
  kv["train.peak_lr"] = "2e-3";
  kv["train.warmup_epochs"] = "4";
  kv["train.decay_start"] = "14";
  kv["train.decay_every"] = "2";
  kv["train.decay_factor"] = "0.2";
  return c;
}

Config Config::paper_preset() {
  Config c = defaults();
  auto& kv = c.kv_;
  // full-scale dimensions as published; not trainable at desk scale
  kv["model.d_q"] = "768";
  kv["model.d_v"] = "768";
  kv["model.gvr_heads"] = "8";
  kv["model.gvr_k"] = "15";
  kv["synthetic.feature_width"] = "2048";
  kv["questioner.d_emb"] = "300";
  kv["questioner.d_qfea"] = "1024";
  kv["questioner.d_att"] = "1024";
  kv["oracle.d_emb"] = "300";
  kv["oracle.d_hidden"] = "1024";
  kv["oracle.d_att"] = "1024";
  kv["train.batch"] = "256";
  kv["train.encoder_lr"] = "5e-5";
  return c;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw std::runtime_error("Config: bad line " + std::to_string(lineno) + " in " + path);
      continue;
    }
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("Config: empty key at line " + std::to_string(lineno));
    kv_[key] = value;
  }
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string Config::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw std::out_of_range("Config: unknown key " + key);
  return it->second;
}

double Config::num(const std::string& key) const { return std::stod(str(key)); }
int Config::integer(const std::string& key) const { return std::stoi(str(key)); }
uint64_t Config::u64(const std::string& key) const { return std::stoull(str(key)); }

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string Config::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(numcore::fnv1a64(canonical())));
  return buf;
}

SyntheticConfig Config::synthetic() const {
  SyntheticConfig s;
  s.scenes = integer("synthetic.scenes");
  s.min_objects = integer("synthetic.min_objects");
  s.max_objects = integer("synthetic.max_objects");
  s.feature_width = integer("synthetic.feature_width");
  s.canvas_w = s.canvas_h = num("synthetic.canvas");
  s.seed = u64("seed");
  return s;
}

acvrm::AcvrmConfig Config::acvrm_config() const {
  acvrm::AcvrmConfig a;
  a.d_q = integer("model.d_q");
  a.d_v = integer("model.d_v");
  a.gvr_heads = integer("model.gvr_heads");
  a.gvr_k = integer("model.gvr_k");
  a.enc_layers = integer("model.enc_layers");
  a.enc_heads = integer("model.enc_heads");
  a.enc_ff = integer("model.enc_ff");
  a.max_q_len = integer("model.max_q_len");
  a.raw_feature_width = integer("synthetic.feature_width");
  a.max_rounds = integer("model.max_rounds");
  a.dropout = num("model.dropout");
  a.classifier_dropout = num("model.classifier_dropout");
  a.geo_eps = num("model.geo_eps");
  a.wavelength_scale = num("model.wavelength_scale");
  a.wavelength_progression = num("model.wavelength_progression");
  return a;
}

questioner::QuestionerConfig Config::questioner_config() const {
  questioner::QuestionerConfig q;
  q.d_emb = integer("questioner.d_emb");
  q.d_qfea = integer("questioner.d_qfea");
  q.d_att = integer("questioner.d_att");
  q.raw_feature_width = integer("synthetic.feature_width");
  q.max_len = integer("model.max_q_len");
  q.max_rounds = integer("model.max_rounds");
  return q;
}

oracle::LearnedOracleConfig Config::oracle_config() const {
  oracle::LearnedOracleConfig o;
  o.d_emb = integer("oracle.d_emb");
  o.d_hidden = integer("oracle.d_hidden");
  o.d_att = integer("oracle.d_att");
  o.raw_feature_width = integer("synthetic.feature_width");
  o.max_len = integer("model.max_q_len");
  o.dropout = num("model.dropout");
  return o;
}

TrainOptions Config::train_options() const {
  TrainOptions t;
  t.max_epochs = integer("train.max_epochs");
  t.batch = integer("train.batch");
  t.patience = integer("train.patience");
  t.val_fraction = num("train.val_fraction");
  t.encoder_lr = num("train.encoder_lr");
  t.schedule.base_lr = num("train.base_lr");
  t.schedule.peak_lr = num("train.peak_lr");
  t.schedule.warmup_epochs = integer("train.warmup_epochs");
  t.schedule.decay_start = integer("train.decay_start");
  t.schedule.decay_every = integer("train.decay_every");
  t.schedule.decay_factor = num("train.decay_factor");
  t.schedule.max_epoch = std::max(integer("train.max_epochs"), integer("train.decay_start"));
  t.seed = u64("seed");
  return t;
}

}  // namespace covqa::harness
