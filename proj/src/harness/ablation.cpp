// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/ablation.hpp"

#include <filesystem>
#include <stdexcept>

namespace covqa::harness {

namespace {

acvrm::Acvrm trained_model(const std::string& train_variant, const Corpus& train,
                           const acvrm::AcvrmConfig& cfg, const Vocab& vocab,
                           const AnswerVocab& answers, const TrainOptions& opt,
                           const std::string& cache_dir) {
  std::string path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    path = cache_dir + "/answerer-" + train_variant + ".ckpt";
    if (std::filesystem::exists(path)) return acvrm::Acvrm::load(path);
  }
  bool use_sqs = train_variant != "wo-SQS";
  bool use_sub_loss = train_variant == "full";
  acvrm::Acvrm model = train_answerer(train, cfg, vocab, answers, opt, use_sqs, use_sub_loss);
  if (!path.empty()) model.save(path);
  return model;
}

}  // namespace

EvalReport run_ablation(const std::string& variant, const Corpus& train, const Corpus& test,
                        const acvrm::AcvrmConfig& cfg, const Vocab& vocab,
                        const AnswerVocab& answers, const TrainOptions& opt,
                        const std::string& cache_dir, const std::string& config_hash,
                        std::vector<RecordResult>* rows_out) {
  VariantOptions vopt;
  std::string train_variant = "full";
  if (variant == "full") {
  } else if (variant == "wo-sub-loss") {
    train_variant = "wo-sub-loss";
  } else if (variant == "wo-SQS") {
    train_variant = "wo-SQS";
    vopt.use_sqs = false;
  } else if (variant == "shuffle") {
    vopt.perturb = VariantOptions::Perturb::Shuffle;
    vopt.perturb_seed = opt.seed ^ 0x5huffleULL;
  } else if (variant == "random-drop-50") {
    vopt.perturb = VariantOptions::Perturb::Drop50;
    vopt.perturb_seed = opt.seed ^ 0xd60bULL;
  } else {
    throw std::invalid_argument("run_ablation: unknown variant " + variant);
  }

  acvrm::Acvrm model = trained_model(train_variant, train, cfg, vocab, answers, opt, cache_dir);
  std::vector<RecordResult> rows = evaluate_answerer(model, test, vopt);

  EvalReport report;
  report.variant = variant;
  report.seed = opt.seed;
  report.config_hash = config_hash;
  report.sq_train_freq_by_bucket = sq_train_frequency_by_bucket(train, test);
  for (const auto& row : rows) report.add(row);
  if (rows_out) *rows_out = std::move(rows);
  return report;
}

std::map<std::string, double> sq_train_frequency_by_bucket(const Corpus& train, const Corpus& test) {
  std::map<std::string, int> freq;
  for (const auto& rec : train.sqs)
    for (const auto& item : rec.items) ++freq[item.sq];
  std::map<std::string, std::pair<long long, long long>> acc;  // bucket -> (freq sum, sq count)
  for (const auto& rec : test.sqs) {
    auto& slot = acc[sqs_bucket(static_cast<int>(rec.items.size()))];
    for (const auto& item : rec.items) {
      auto it = freq.find(item.sq);
      slot.first += it == freq.end() ? 0 : it->second;
      slot.second += 1;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [bucket, slot] : acc)
    out[bucket] = slot.second == 0 ? 0.0 : static_cast<double>(slot.first) / slot.second;
  return out;
}

}  // namespace covqa::harness
