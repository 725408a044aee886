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
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/dense_array.hpp"
#include "mtr/parameters.hpp"

namespace mtr {

// Handle to a node on a Tape. Only meaningful together with the tape that
// produced it.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Reverse-mode gradient tape over DenseArray values.
//
// Nodes are appended in evaluation order, so walking them by descending id is
// a reverse topological order; backward() visits every gradient-carrying node
// exactly once. A tape is single-owner and must not be shared across threads.
// A tape built with record_gradients=false keeps forward values only and is
// what evaluation uses.
class Tape {
 public:
  // Receives the tape and the id of the node whose adjoint is being propagated.
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseArray value);
  // Leaf bound to params[name]. Repeated requests return the same node.
  Var parameter(const ParameterSet& params, const std::string& name);

  // Appends an op node. `backward` is dropped when no input carries gradient.
  // Throws NonFiniteValue if the forward value contains NaN/Inf.
  Var record(std::string_view op, DenseArray value, std::initializer_list<Var> inputs,
             Backward backward);

  const DenseArray& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool recording() const { return recording_; }

  // Gradient buffer of a node; zeros when nothing has flowed into it.
  const DenseArray& grad(Var v);
  void accumulate_grad(Var v, const DenseArray& g);
  // Mutable buffer for kernels that scatter into a gradient directly.
  DenseArray& grad_buffer(Var v);

  // Seeds d(root)/d(root) = 1 and propagates. root must be a 1x1 value.
  void backward(Var root);

  // Gradient of the last backward() per parameter; unused parameters get
  // exact zeros.
  Gradients parameter_gradients(const ParameterSet& params) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::string_view op_name(Var v) const { return nodes_.at(v.id).op; }
  // Node ids in the order the last backward() visited them.
  const std::vector<std::size_t>& backward_order() const { return order_; }

 private:
  struct Node {
    std::string op;
    DenseArray value;
    DenseArray grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> param_nodes_;
  std::vector<std::size_t> order_;
  bool recording_;
};

// Test hook: when set, the adjoint flowing into every node produced by the
// named op is scaled by 1.5 during backward(). Used to prove that gradient
// checks catch a corrupted derivative. Pass an empty string to clear.
void set_adjoint_fault(std::string op);
const std::string& adjoint_fault();

}  // namespace mtr
