// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "covqa/acvrm/acvrm.hpp"
#include "covqa/harness/synthetic.hpp"
#include "covqa/numcore/optim.hpp"
#include "covqa/oracle/oracle.hpp"
#include "covqa/questioner/questioner.hpp"

namespace covqa::harness {

struct TrainOptions {
  int max_epochs = 18;
  int batch = 32;
  int patience = 3;  // early stopping on validation accuracy
  double val_fraction = 0.1;
  double encoder_lr = 1e-3;  // fixed rate for transformer-encoder parameters
  numcore::LrSchedule schedule;
  uint64_t seed = 0;
  bool verbose = false;
};

// Flat key=value configuration with file merge and CLI overrides. The desk
// preset is the default; the paper preset records full-scale dimensions.
class Config {
 public:
  static Config defaults();
  static Config paper_preset();

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  uint64_t u64(const std::string& key) const;

  std::string canonical() const;  // sorted key=value lines
  std::string hash() const;       // fnv-1a of the canonical form, hex

  SyntheticConfig synthetic() const;
  acvrm::AcvrmConfig acvrm_config() const;
  questioner::QuestionerConfig questioner_config() const;
  oracle::LearnedOracleConfig oracle_config() const;
  TrainOptions train_options() const;

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace covqa::harness
