// Copyright 2026 The OmniTraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMNITRAJ__NUMERICS__TAPE_HPP_
#define OMNITRAJ__NUMERICS__TAPE_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "omnitraj/numerics/tensor.hpp"

namespace omnitraj::numerics
{

class Tape;

/// Handle to a value recorded on a Tape.
struct Var
{
  Tape * tape = nullptr;
  std::int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor & value() const;
  const Shape & shape() const { return value().shape(); }
};

/**
 * @brief Reverse-mode gradient recorder.
 *
 * Nodes are appended in evaluation order, which is a topological order of the graph;
 * backward() walks them once in reverse. Node storage is a deque so references to earlier
 * values stay valid while new nodes are appended.
 */
class Tape
{
public:
  using Backward = std::function<void(Tape &, std::int32_t)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }
  Var leaf(Tensor value) { return push(std::move(value), true, nullptr); }

  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward)
  {
    bool needs = false;
    for (const auto & p : parents) {
      needs = needs || nodes_.at(static_cast<std::size_t>(p.id)).requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  Var record(Tensor value, const std::vector<Var> & parents, Backward backward)
  {
    bool needs = false;
    for (const auto & p : parents) {
      needs = needs || nodes_.at(static_cast<std::size_t>(p.id)).requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Tensor & value(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  bool requires_grad(std::int32_t id) const
  {
    return nodes_.at(static_cast<std::size_t>(id)).requires_grad;
  }

  /// Gradient accumulator of a node, allocated (zero) on first access.
  std::vector<double> & grad(std::int32_t id)
  {
    auto & n = nodes_.at(static_cast<std::size_t>(id));
    if (n.grad.empty()) {
      n.grad.assign(n.value.values().size(), 0.0);
    }
    return n.grad;
  }

  bool has_grad(std::int32_t id) const { return !nodes_.at(static_cast<std::size_t>(id)).grad.empty(); }

  /// Gradient of the last backward() with respect to v; zeros if v did not influence it.
  Tensor gradient(Var v) const
  {
    const auto & n = nodes_.at(static_cast<std::size_t>(v.id));
    if (n.grad.empty()) {
      return Tensor(n.value.shape());
    }
    return Tensor(n.value.shape(), n.grad);
  }

  void backward(Var loss)
  {
    if (loss.tape != this) {
      throw ContractError("backward: loss recorded on a different tape");
    }
    if (value(loss.id).size() != 1) {
      throw ContractError(
        "backward: loss must be scalar, got shape " + shape_str(value(loss.id).shape()));
    }
    for (auto & n : nodes_) {
      n.grad.clear();
    }
    grad(loss.id)[0] = 1.0;
    for (std::int32_t id = static_cast<std::int32_t>(nodes_.size()) - 1; id >= 0; --id) {
      auto & n = nodes_[static_cast<std::size_t>(id)];
      if (n.backward && !n.grad.empty()) {
        n.backward(*this, id);
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node
  {
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward)
  {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  std::deque<Node> nodes_;
};

inline const Tensor & Var::value() const { return tape->value(id); }

/// Named learnable parameters. Ordered by name so iteration is deterministic.
class ParamStore
{
public:
  void set(const std::string & name, Tensor value) { params_[name] = std::move(value); }
  bool contains(const std::string & name) const { return params_.count(name) != 0; }
  const Tensor & get(const std::string & name) const
  {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw ContractError("unknown parameter '" + name + "'");
    }
    return it->second;
  }
  Tensor & get(const std::string & name)
  {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw ContractError("unknown parameter '" + name + "'");
    }
    return it->second;
  }
  const std::map<std::string, Tensor> & all() const { return params_; }
  std::map<std::string, Tensor> & all() { return params_; }
  std::size_t size() const { return params_.size(); }

  std::int64_t scalar_count() const
  {
    std::int64_t n = 0;
    for (const auto & [_, t] : params_) {
      n += t.size();
    }
    return n;
  }

  friend bool operator==(const ParamStore & a, const ParamStore & b) { return a.params_ == b.params_; }

private:
  std::map<std::string, Tensor> params_;
};

/**
 * @brief Lazily places parameters on a tape as gradient-requiring leaves.
 *
 * Only parameters actually requested during a forward pass appear on the tape; all others
 * report a zero gradient.
 */
class ParamBinding
{
public:
  ParamBinding(Tape & tape, const ParamStore & store) : tape_(&tape), store_(&store) {}

  Var operator()(const std::string & name)
  {
    auto it = bound_.find(name);
    if (it != bound_.end()) {
      return it->second;
    }
    Var v = tape_->leaf(store_->get(name));
    bound_.emplace(name, v);
    return v;
  }

  Tape & tape() { return *tape_; }
  const ParamStore & store() const { return *store_; }

  /// Gradients for every parameter in the store, zero for unbound ones.
  std::map<std::string, Tensor> gradients() const
  {
    std::map<std::string, Tensor> out;
    for (const auto & [name, value] : store_->all()) {
      auto it = bound_.find(name);
      out.emplace(name, it == bound_.end() ? Tensor(value.shape()) : tape_->gradient(it->second));
    }
    return out;
  }

private:
  Tape * tape_;
  const ParamStore * store_;
  std::map<std::string, Var> bound_;
};

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__TAPE_HPP_
