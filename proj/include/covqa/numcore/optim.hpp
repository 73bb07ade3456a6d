// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>

#include "covqa/numcore/params.hpp"

namespace covqa::numcore {

// Warm-up then step-decay schedule. Warmup interpolates base_lr -> peak_lr
// linearly per epoch; epochs in [warmup_epochs, decay_start] return peak_lr
// exactly; afterwards the rate is multiplied by decay_factor once per
// decay_every epochs.
struct LrSchedule {
  double base_lr = 5e-4;
  double peak_lr = 2e-3;
  int warmup_epochs = 4;
  int decay_start = 14;
  int decay_every = 2;
  double decay_factor = 0.2;
  int max_epoch = 18;

  double at(int epoch) const;
};

struct AdamaxConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adamax: m = b1*m + (1-b1)*g; u = max(b2*u, |g|);
// p -= lr/(1-b1^t) * m / max(u, eps).
class Adamax {
 public:
  explicit Adamax(AdamaxConfig cfg = {}) : cfg_(cfg) {}

  const AdamaxConfig& config() const { return cfg_; }
  long step_count() const { return step_; }

  using LrOf = std::function<double(const std::string&)>;

  void step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr);
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads, const LrOf& lr_of);

 private:
  AdamaxConfig cfg_;
  long step_ = 0;
  std::map<std::string, Tensor> m_, u_;
};

}  // namespace covqa::numcore
