// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "adcrnn/tensor.hpp"

namespace adcrnn {

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;
};

/// Named parameter store. Iteration order is lexicographic by name, which
/// makes checkpoints and optimizer traversal deterministic.
class ParamStore {
 public:
  /// Registers a zero-initialized parameter. Throws if the name exists.
  Parameter& add(const std::string& name, Shape shape);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;
  std::vector<std::string> names() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Copies of all parameter values, keyed by name.
  std::map<std::string, Tensor> snapshot() const;
  /// Overwrites values from a snapshot; names and shapes must match exactly.
  void restore(const std::map<std::string, Tensor>& values);

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace adcrnn
