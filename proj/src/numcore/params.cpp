// SPDX-License-Identifier: Apache-2.0
#include "covqa/numcore/params.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace covqa::numcore {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (has(name)) throw std::logic_error("ParamStore: duplicate parameter " + name);
  return params_[name] = Tensor(std::move(shape));
}

Tensor& ParamStore::add_uniform(const std::string& name, std::vector<int> shape, Rng& rng, double bound) {
  Tensor& t = add(name, std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor& ParamStore::add_full(const std::string& name, std::vector<int> shape, double v) {
  Tensor& t = add(name, std::move(shape));
  for (double& x : t.data()) x = v;
  return t;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
  return it->second;
}

VarMap ParamStore::lift(Tape& tape, bool requires_grad) const {
  VarMap vm;
  for (const auto& [name, tensor] : params_) vm.emplace(name, tape.leaf(tensor, requires_grad));
  return vm;
}

void ParamStore::save(const std::string& path, const std::map<std::string, std::string>& meta) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ParamStore: cannot open " + path + " for writing");
  out << "covqa-checkpoint v1\n";
  for (const auto& [k, v] : meta) {
    if (k.find('\t') != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("ParamStore: meta must not contain tabs/newlines");
    out << "meta\t" << k << "\t" << v << "\n";
  }
  for (const auto& [name, t] : params_) {
    out << "tensor\t" << name << "\t" << t.ndim();
    for (int d : t.shape()) out << "\t" << d;
    out << "\n";
    const auto& data = t.data();
    for (size_t i = 0; i < data.size(); ++i) {
      if (i) out << ' ';
      out << fmt_double(data[i]);
    }
    out << "\n";
  }
  out << "end\n";
  if (!out) throw std::runtime_error("ParamStore: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path, std::map<std::string, std::string>* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ParamStore: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "covqa-checkpoint v1")
    throw std::runtime_error("ParamStore: bad header in " + path);
  ParamStore ps;
  while (std::getline(in, line)) {
    if (line == "end") return ps;
    std::istringstream ls(line);
    std::string kind;
    std::getline(ls, kind, '\t');
    if (kind == "meta") {
      std::string k, v;
      std::getline(ls, k, '\t');
      std::getline(ls, v);
      if (meta) (*meta)[k] = v;
      continue;
    }
    if (kind != "tensor") throw std::runtime_error("ParamStore: unexpected record '" + kind + "'");
    std::string name, field;
    std::getline(ls, name, '\t');
    std::getline(ls, field, '\t');
    int ndim = std::stoi(field);
    std::vector<int> shape;
    long long total = 1;
    for (int i = 0; i < ndim; ++i) {
      std::getline(ls, field, '\t');
      shape.push_back(std::stoi(field));
      total *= shape.back();
    }
    if (!std::getline(in, line)) throw std::runtime_error("ParamStore: missing data for " + name);
    std::istringstream ds(line);
    std::vector<double> data;
    data.reserve(static_cast<size_t>(total));
    double v;
    while (ds >> v) data.push_back(v);
    if (static_cast<long long>(data.size()) != total)
      throw std::runtime_error("ParamStore: value count mismatch for " + name);
    ps.params_[name] = Tensor(std::move(shape), std::move(data));
  }
  throw std::runtime_error("ParamStore: truncated checkpoint " + path);
}

Var lookup(const VarMap& vm, const std::string& name) {
  auto it = vm.find(name);
  if (it == vm.end()) throw std::out_of_range("VarMap: missing " + name);
  return it->second;
}

}  // namespace covqa::numcore
