// SPDX-License-Identifier: Apache-2.0
#include "covqa/numcore/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace covqa::numcore {

double LrSchedule::at(int epoch) const {
  if (epoch < 0 || epoch > max_epoch) throw std::out_of_range("LrSchedule: epoch out of range");
  if (epoch < warmup_epochs)
    return base_lr + (peak_lr - base_lr) * static_cast<double>(epoch) / warmup_epochs;
  if (epoch <= decay_start) return peak_lr;
  int steps = (epoch - decay_start - 1) / decay_every + 1;
  double lr = peak_lr;
  for (int i = 0; i < steps; ++i) lr *= decay_factor;
  return lr;
}

void Adamax::step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr) {
  step(params, grads, [lr](const std::string&) { return lr; });
}

void Adamax::step(ParamStore& params, const std::map<std::string, Tensor>& grads, const LrOf& lr_of) {
  ++step_;
  double bias = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  for (auto& [name, p] : params.all()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(p)) throw std::logic_error("Adamax: gradient shape mismatch for " + name);
    Tensor& m = m_.try_emplace(name, Tensor(p.shape())).first->second;
    Tensor& u = u_.try_emplace(name, Tensor(p.shape())).first->second;
    double lr = lr_of(name);
    for (int i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      u[i] = std::max(cfg_.beta2 * u[i], std::abs(g[i]));
      double denom = std::max(u[i], cfg_.eps);
      if (denom == 0.0) {
        if (m[i] == 0.0) continue;
        throw std::runtime_error("Adamax: zero infinity-norm with zero epsilon");
      }
      p[i] -= lr / bias * m[i] / denom;
    }
  }
}

}  // namespace covqa::numcore
