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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace contrast {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

struct TensorStorage {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  // Identity of the tape that produced this tensor (0 = leaf) and its node
  // index on that tape.
  std::uint64_t tape_id = 0;
  std::size_t slot = 0;
};

// Dense row-major tensor of doubles. Copies share storage; use clone() for
// a deep copy. Rank 1 and rank 2 are what the model needs; anything of
// higher rank is treated as rows of the last dimension.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t size() const { return storage_->values.size(); }
  // Last dimension; the "row width" for row-wise operations.
  std::size_t cols() const;
  // Number of rows of width cols().
  std::size_t rows() const;

  std::span<const double> values() const { return storage_->values; }
  std::span<double> mutable_values() { return storage_->values; }
  double operator[](std::size_t i) const { return storage_->values[i]; }
  double at(std::size_t r, std::size_t c) const { return storage_->values[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);

  bool has_grad() const { return !storage_->grad.empty(); }
  const std::vector<double>& grad() const { return storage_->grad; }
  std::vector<double>& mutable_grad() { return storage_->grad; }
  void zero_grad();

  // Deep copy with no tape history.
  Tensor clone() const;
  // Shares no storage and never records gradient.
  Tensor detach() const { return clone(); }

  TensorStorage* storage() const { return storage_.get(); }
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  std::shared_ptr<TensorStorage> storage_;
};

class Tape;

// Propagates the output adjoint into the inputs through Tape::accumulate.
using BackwardFn = std::function<void(std::span<const double> out_grad, Tape& tape)>;

// Gradients of one backward pass, keyed by leaf tensor. Tensors the loss
// does not reach read back as zeros.
class Gradients {
 public:
  std::vector<double> of(const Tensor& leaf) const;
  bool reached(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }

  // Copies into leaf.grad (overwriting).
  void write_to(Tensor& leaf) const;

 private:
  friend class Tape;
  std::unordered_map<const TensorStorage*, std::vector<double>> grads_;
};

// Records differentiable operations in execution order. Owned by one
// thread during a forward/backward pass.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return nodes_.size(); }
  void clear();

  void record(Tensor& output, std::vector<Tensor> inputs, BackwardFn backward);

  // Adds grad into the adjoint of input. No-op for inputs that do not
  // require gradient.
  void accumulate(const Tensor& input, std::span<const double> grad);

  // Reverse sweep from a scalar loss. The tape may be swept repeatedly;
  // every sweep starts from fresh adjoints.
  Gradients backward(const Tensor& loss);

 private:
  struct Node {
    Tensor output;
    std::vector<Tensor> inputs;
    BackwardFn backward;
  };

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> adjoints_;
  Gradients* sweep_ = nullptr;
};

// Makes a tape the recording target of the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Temporarily stops recording on the current thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Runs the reverse sweep and writes gradients into every requires_grad leaf
// in `leaves` (zeros for the ones the loss does not reach).
Gradients backward(const Tensor& loss, Tape& tape);
void backward(const Tensor& loss, Tape& tape, std::span<Tensor> leaves);

}  // namespace contrast
