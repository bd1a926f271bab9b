// Copyright 2026 The masksdm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASKSDM_NUMERICS_TAPE_H_
#define MASKSDM_NUMERICS_TAPE_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "masksdm/tensor.h"

namespace masksdm::numerics {

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records a computation graph in creation order; Backward() walks it once in
// reverse. A tape is single-threaded. When constructed with
// `record_gradients = false` no backward rules are stored (inference).
class Tape {
 public:
  // Receives the gradient of the loss with respect to the node's output.
  using BackwardFn = std::function<void(const Tensor& output_grad)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Tensor value);
  Var Parameter(Tensor value);

  // Adds an op output. The backward rule is kept only if gradients are being
  // recorded and some input requires a gradient.
  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  bool recording() const { return record_; }
  const Tensor& value(const Var& v) const { return nodes_[v.id()].value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  // Id the next recorded node will receive.
  std::size_t next_id() const { return nodes_.size(); }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of `v`, zero-initialized on first access.
  Tensor& grad(const Var& v);

  // Populates gradients of every node reachable from `loss`, which must be
  // 1 x 1. Gradients accumulate across calls until ZeroGrad().
  void Backward(const Var& loss);
  void ZeroGrad();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var Push(Tensor value, bool requires_grad, BackwardFn backward);

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace masksdm::numerics

#endif  // MASKSDM_NUMERICS_TAPE_H_
