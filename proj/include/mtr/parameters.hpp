// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mtr/dense_array.hpp"

namespace mtr {

// Ordered collection of named trainable arrays. Order is insertion order and is
// what checkpoints, optimizers, and gradient checks iterate over.
class ParameterSet {
 public:
  void add(const std::string& name, DenseArray value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const DenseArray& get(const std::string& name) const;
  DenseArray& get_mut(const std::string& name);
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<DenseArray> values_;
  std::map<std::string, std::size_t> index_;
};

// Gradient per parameter name, same shapes as the ParameterSet it came from.
using Gradients = std::map<std::string, DenseArray>;

}  // namespace mtr
