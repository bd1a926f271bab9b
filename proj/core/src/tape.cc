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

#include "masksdm/tape.h"

#include <cassert>

#include "masksdm/error.h"

namespace masksdm::numerics {

const Tensor& Var::value() const { return tape_->value(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::Push(Tensor value, bool requires_grad, BackwardFn backward) {
  assert(value.AllFinite() && "non-finite value recorded on tape");
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Constant(Tensor value) { return Push(std::move(value), false, nullptr); }

Var Tape::Parameter(Tensor value) {
  return Push(std::move(value), record_, nullptr);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.valid() && v.requires_grad()) needs = true;
  }
  needs = needs && record_;
  return Push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Var Tape::Record(Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.valid() && v.requires_grad()) needs = true;
  }
  needs = needs && record_;
  return Push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Tensor& Tape::grad(const Var& v) {
  Node& node = nodes_[v.id()];
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Tensor::ZerosLike(node.value);
  }
  return node.grad;
}

void Tape::Backward(const Var& loss) {
  if (loss.value().rows() != 1 || loss.value().cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "Backward needs a scalar loss, got " + loss.value().ShapeString());
  }
  if (!requires_grad(loss)) return;
  grad(loss)[0] += 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    // Rules only touch gradients of earlier nodes; nodes_ is not resized.
    node.backward(node.grad);
  }
}

void Tape::ZeroGrad() {
  for (auto& node : nodes_) node.grad = Tensor();
}

}  // namespace masksdm::numerics
