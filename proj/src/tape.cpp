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

#include "mtr/tape.hpp"

#include "mtr/error.hpp"

namespace mtr {
namespace {

std::string& fault_slot() {
  static std::string op;
  return op;
}

}  // namespace

void set_adjoint_fault(std::string op) { fault_slot() = std::move(op); }
const std::string& adjoint_fault() { return fault_slot(); }

Var Tape::constant(DenseArray value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(const ParameterSet& params, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return Var{it->second};
  }
  Node node;
  node.op = "parameter";
  node.value = params.get(name);
  node.requires_grad = recording_;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  param_nodes_.emplace(name, id);
  return Var{id};
}

Var Tape::record(std::string_view op, DenseArray value, std::initializer_list<Var> inputs,
                 Backward backward) {
  if (!value.all_finite()) {
    throw NonFiniteValue("non-finite output from op '" + std::string(op) + "'");
  }
  bool needs = false;
  if (recording_) {
    for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  }
  Node node;
  node.op = std::string(op);
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

DenseArray& Tape::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id);
  if (!node.has_grad) {
    node.grad = DenseArray(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

const DenseArray& Tape::grad(Var v) { return grad_buffer(v); }

void Tape::accumulate_grad(Var v, const DenseArray& g) {
  if (!nodes_.at(v.id).requires_grad) return;
  grad_buffer(v).accumulate(g);
}

void Tape::backward(Var root) {
  if (!recording_) throw Error("backward() on a forward-only tape");
  const Node& r = nodes_.at(root.id);
  if (r.value.size() != 1) {
    throw ShapeMismatch("backward root must be scalar, got " + r.value.shape_string());
  }
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad = DenseArray();
  }
  order_.clear();
  grad_buffer(root).fill(1.0);

  const std::string& fault = adjoint_fault();
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.has_grad || !node.backward) continue;
    if (!fault.empty() && node.op == fault) {
      for (double& g : node.grad.values()) g *= 1.5;
    }
    order_.push_back(i);
    node.backward(*this, i);
  }
}

Gradients Tape::parameter_gradients(const ParameterSet& params) const {
  Gradients out;
  for (const auto& name : params.names()) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && nodes_[it->second].has_grad) {
      out.emplace(name, nodes_[it->second].grad);
    } else {
      out.emplace(name, DenseArray(params.get(name).shape(), 0.0));
    }
  }
  return out;
}

}  // namespace mtr
