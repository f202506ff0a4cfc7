// Copyright 2026 The Contrast Authors.
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

#include "contrast/tensor.hpp"

#include <atomic>
#include <sstream>

#include "contrast/errors.hpp"

namespace contrast {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};
thread_local Tape* current_tape = nullptr;

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor() : storage_(std::make_shared<TensorStorage>()) {}

Tensor::Tensor(Shape shape, double fill) : storage_(std::make_shared<TensorStorage>()) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  storage_->values.assign(shape_size(shape), fill);
  storage_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : storage_(std::make_shared<TensorStorage>()) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::cols() const {
  return storage_->shape.empty() ? 0 : storage_->shape.back();
}

std::size_t Tensor::rows() const {
  const std::size_t c = cols();
  return c == 0 ? 0 : size() / c;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string(shape()));
  return storage_->values[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  storage_->requires_grad = on;
  return *this;
}

void Tensor::zero_grad() { storage_->grad.assign(size(), 0.0); }

Tensor Tensor::clone() const {
  Tensor out;
  out.storage_->shape = storage_->shape;
  out.storage_->values = storage_->values;
  return out;
}

std::vector<double> Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.storage());
  if (it == grads_.end()) return std::vector<double>(leaf.size(), 0.0);
  return it->second;
}

bool Gradients::reached(const Tensor& leaf) const { return grads_.count(leaf.storage()) > 0; }

void Gradients::write_to(Tensor& leaf) const { leaf.mutable_grad() = of(leaf); }

Tape::Tape() : id_(next_tape_id++) {}

void Tape::clear() {
  nodes_.clear();
  adjoints_.clear();
}

void Tape::record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward) {
  TensorStorage* s = output.storage();
  s->requires_grad = true;
  s->tape_id = id_;
  s->slot = nodes_.size();
  nodes_.push_back(Node{output, std::move(inputs), std::move(backward)});
}

void Tape::accumulate(const Tensor& input, std::span<const double> grad) {
  TensorStorage* s = input.storage();
  if (!s->requires_grad) return;
  std::vector<double>* target = nullptr;
  if (s->tape_id == id_ && s->slot < adjoints_.size() && nodes_[s->slot].output.storage() == s) {
    target = &adjoints_[s->slot];
  } else {
    target = &sweep_->grads_[s];
  }
  if (target->empty()) {
    target->assign(grad.begin(), grad.end());
    return;
  }
  for (std::size_t i = 0; i < grad.size(); ++i) (*target)[i] += grad[i];
}

Gradients Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(loss.shape()));
  }
  Gradients result;
  TensorStorage* ls = loss.storage();
  if (!ls->requires_grad) return result;

  adjoints_.assign(nodes_.size(), {});
  sweep_ = &result;
  const std::vector<double> seed{1.0};
  accumulate(loss, seed);

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (adjoints_[i].empty()) continue;
    Node& node = nodes_[i];
    node.backward(adjoints_[i], *this);
    adjoints_[i].clear();
    adjoints_[i].shrink_to_fit();
  }
  sweep_ = nullptr;
  return result;
}

TapeScope::TapeScope(Tape& tape) : previous_(current_tape) { current_tape = &tape; }
TapeScope::~TapeScope() { current_tape = previous_; }

NoGradScope::NoGradScope() : previous_(current_tape) { current_tape = nullptr; }
NoGradScope::~NoGradScope() { current_tape = previous_; }

Tape* active_tape() { return current_tape; }

Gradients backward(const Tensor& loss, Tape& tape) { return tape.backward(loss); }

void backward(const Tensor& loss, Tape& tape, std::span<Tensor> leaves) {
  Gradients g = tape.backward(loss);
  for (auto& leaf : leaves) g.write_to(leaf);
}

}  // namespace contrast
