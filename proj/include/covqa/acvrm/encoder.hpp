// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covqa/numcore/nn.hpp"
#include "covqa/vocab.hpp"

namespace covqa::acvrm {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;  // paper 768
  int layers = 2;
  int heads = 4;
  int d_ff = 128;
  int max_len = 14;
  double dropout = 0.2;
};

// Bidirectional transformer encoder with sinusoidal positions and mean
// pooling over non-pad positions. Pad columns are masked out of attention.
class QuestionEncoder {
 public:
  QuestionEncoder() = default;
  QuestionEncoder(EncoderConfig cfg, std::string prefix);

  void init(numcore::ParamStore& ps, numcore::Rng& rng) const;

  const EncoderConfig& config() const { return cfg_; }

  numcore::Var encode(const numcore::VarMap& vm, numcore::Tape& tape, const std::vector<int>& tokens,
                      numcore::Rng* rng = nullptr, bool training = false) const;

 private:
  numcore::Tensor positional(int len) const;

  EncoderConfig cfg_;
  std::string prefix_;
};

}  // namespace covqa::acvrm
