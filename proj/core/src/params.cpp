// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/params.hpp"

#include <stdexcept>

#include "adcrnn/error.hpp"

namespace adcrnn {

Parameter& ParamStore::add(const std::string& name, Shape shape) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw std::invalid_argument("duplicate parameter name: " + name);
  it->second.value = Tensor(shape);
  it->second.grad = Tensor(std::move(shape));
  return it->second;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    else p.grad.fill(0.0);
  }
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params_) out.emplace(name, p.value);
  return out;
}

void ParamStore::restore(const std::map<std::string, Tensor>& values) {
  if (values.size() != params_.size()) {
    throw DataError("parameter count mismatch: expected " + std::to_string(params_.size()) +
                    ", got " + std::to_string(values.size()));
  }
  for (auto& [name, p] : params_) {
    auto it = values.find(name);
    if (it == values.end()) throw DataError("missing parameter: " + name);
    if (it->second.shape() != p.value.shape()) {
      throw DataError("shape mismatch for " + name + ": expected " + shape_str(p.value.shape()) +
                      ", got " + shape_str(it->second.shape()));
    }
    p.value = it->second;
  }
}

}  // namespace adcrnn
