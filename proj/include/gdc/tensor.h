// Copyright 2026 The GDC Lab Authors. All Rights Reserved.
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
// ============================================================================

// Dense rank-4 tensors (N, C, H, W; row-major) with define-by-run reverse
// mode differentiation. A Tensor is a cheap handle to an immutable node;
// copies share the node. Only the gradient slot of a node is mutated after
// creation, plus the values of leaf parameters between optimizer steps.

#ifndef GDC_TENSOR_H_
#define GDC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gdc {

struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string ToString() const;
};

namespace internal {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // Empty until the first accumulation.
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  // Returns the grad buffer, zero-filled on first use.
  std::vector<T>& MutableGrad();
};

}  // namespace internal

template <typename T>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<internal::Node<T>>;

  Tensor() = default;
  // Zero-filled tensor.
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor Full(Shape shape, T value, bool requires_grad = false);
  static Tensor Scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t numel() const { return shape().numel(); }
  std::span<const T> values() const;
  // Only leaves may be written (parameters updated by an optimizer).
  std::span<T> mutable_values();
  T item() const;
  T at(int64_t n, int64_t c, int64_t h, int64_t w) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  void ZeroGrad();
  const char* op() const;

  // Same values, no history.
  Tensor Detach() const;
  // Deep copy of the values into a new leaf.
  Tensor Clone(bool requires_grad = false) const;

  const NodePtr& node() const { return node_; }
  static Tensor FromNode(NodePtr node);

 private:
  NodePtr node_;
};

// Scope guard that disables graph recording on the current thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Builds the result node of an op. The node requires grad when recording is
// enabled and any input requires grad; |backward| is kept only in that case.
template <typename T>
Tensor<T> MakeResult(const char* op, Shape shape, std::vector<T> values,
                     std::vector<Tensor<T>> inputs,
                     std::function<void(internal::Node<T>&)> backward);

// Reverse sweep from a scalar loss. Populates grad on every reachable node
// that requires grad (gradients accumulate across calls until ZeroGrad).
template <typename T>
void Backward(const Tensor<T>& loss);

// Max relative disagreement between analytic and central-difference
// gradients over every coordinate of |inputs|:
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-3 * scale, 1e-12)
// where scale is the largest analytic magnitude over all inputs.
// Entries far below that scale are dominated by difference roundoff, so
// they are judged against it instead of against themselves.
// |f| must be scalar-valued. Only meaningful for Tensor<double>.
template <typename T>
double GradCheck(const std::function<Tensor<T>(std::span<const Tensor<T>>)>& f,
                 std::span<const Tensor<T>> inputs, double step);

template <typename To, typename From>
Tensor<To> Cast(const Tensor<From>& t, bool requires_grad = false);

}  // namespace gdc

#endif  // GDC_TENSOR_H_
