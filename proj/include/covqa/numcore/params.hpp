// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "covqa/numcore/rng.hpp"
#include "covqa/numcore/tape.hpp"

namespace covqa::numcore {

using VarMap = std::map<std::string, Var>;

// Named parameter tensors. Iteration order is lexicographic, which keeps
// checkpoints and optimizer traversal deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<int> shape);
  Tensor& add_uniform(const std::string& name, std::vector<int> shape, Rng& rng, double bound);
  Tensor& add_full(const std::string& name, std::vector<int> shape, double v);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  size_t count() const { return params_.size(); }

  std::map<std::string, Tensor>& all() { return params_; }
  const std::map<std::string, Tensor>& all() const { return params_; }

  // Copies every parameter onto the tape as a leaf.
  VarMap lift(Tape& tape, bool requires_grad) const;

  // Versioned structured-text checkpoint ("covqa-checkpoint v1"). Values are
  // printed with %.17g so doubles round-trip exactly. No timestamps: the same
  // store always serializes to the same bytes.
  void save(const std::string& path, const std::map<std::string, std::string>& meta = {}) const;
  static ParamStore load(const std::string& path, std::map<std::string, std::string>* meta = nullptr);

 private:
  std::map<std::string, Tensor> params_;
};

Var lookup(const VarMap& vm, const std::string& name);

}  // namespace covqa::numcore
