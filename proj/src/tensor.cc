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

#include "gdc/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "gdc/error.h"

namespace gdc {

std::string Shape::ToString() const {
  std::ostringstream os;
  os << "[" << n << "," << c << "," << h << "," << w << "]";
  return os.str();
}

namespace internal {

template <typename T>
std::vector<T>& Node<T>::MutableGrad() {
  if (grad.empty()) grad.assign(value.size(), T(0));
  return grad;
}

}  // namespace internal

namespace {

thread_local bool grad_enabled = true;

template <typename T>
void CheckShape(const Shape& shape, size_t size) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw DimensionError("negative dimension in shape " + shape.ToString());
  }
  if (static_cast<size_t>(shape.numel()) != size) {
    throw DimensionError("shape " + shape.ToString() + " does not match " +
                         std::to_string(size) + " values");
  }
}

}  // namespace

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<T>(std::max<int64_t>(shape.numel(), 0), T(0)),
             requires_grad) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  CheckShape<T>(shape, values.size());
  node_ = std::make_shared<internal::Node<T>>();
  node_->shape = shape;
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::Full(Shape shape, T value, bool requires_grad) {
  return Tensor(shape, std::vector<T>(shape.numel(), value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::Scalar(T value, bool requires_grad) {
  return Tensor({1, 1, 1, 1}, {value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::FromNode(NodePtr node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

template <typename T>
std::span<const T> Tensor<T>::values() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->value;
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
  if (!node_) throw ContractError("use of an undefined tensor");
  if (!node_->inputs.empty()) {
    throw ContractError(std::string("values of '") + node_->op +
                        "' result are immutable");
  }
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape().ToString());
  }
  return node_->value[0];
}

template <typename T>
T Tensor<T>::at(int64_t n, int64_t c, int64_t h, int64_t w) const {
  const Shape& s = shape();
  return node_->value[((n * s.c + c) * s.h + h) * s.w + w];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return node_ && !node_->grad.empty();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->grad;
}

template <typename T>
void Tensor<T>::ZeroGrad() {
  if (node_) node_->grad.clear();
}

template <typename T>
const char* Tensor<T>::op() const {
  return node_ ? node_->op : "undefined";
}

template <typename T>
Tensor<T> Tensor<T>::Detach() const {
  Tensor t;
  t.node_ = std::make_shared<internal::Node<T>>();
  t.node_->shape = shape();
  t.node_->value = node_->value;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::Clone(bool requires_grad) const {
  return Tensor(shape(), node_->value, requires_grad);
}

template <typename T>
Tensor<T> MakeResult(const char* op, Shape shape, std::vector<T> values,
                     std::vector<Tensor<T>> inputs,
                     std::function<void(internal::Node<T>&)> backward) {
  Tensor<T> out(shape, std::move(values));
  auto& node = *out.node();
  node.op = op;
  bool needs = false;
  if (grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node.requires_grad = true;
    node.backward = std::move(backward);
    node.inputs.reserve(inputs.size());
    for (auto& in : inputs) node.inputs.push_back(in.node());
  }
  return out;
}

template <typename T>
void Backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() requires a scalar loss, got " +
                        (loss.defined() ? loss.shape().ToString()
                                        : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  using NodeT = internal::Node<T>;
  // Iterative DFS producing a topological order (inputs before outputs).
  enum class Mark { kVisiting, kDone };
  std::unordered_map<const NodeT*, Mark> marks;
  std::vector<NodeT*> order;
  std::vector<std::pair<NodeT*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  marks[loss.node().get()] = Mark::kVisiting;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      NodeT* child = node->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = marks.find(child);
      if (it == marks.end()) {
        marks[child] = Mark::kVisiting;
        stack.emplace_back(child, 0);
      } else if (it->second == Mark::kVisiting) {
        throw InternalError("cycle detected in compute graph");
      }
    } else {
      marks[node] = Mark::kDone;
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->MutableGrad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <typename T>
double GradCheck(const std::function<Tensor<T>(std::span<const Tensor<T>>)>& f,
                 std::span<const Tensor<T>> inputs, double step) {
  std::vector<Tensor<T>> args(inputs.begin(), inputs.end());
  for (auto& a : args) a.ZeroGrad();
  Tensor<T> y = f(args);
  if (y.numel() != 1) throw ContractError("grad_check needs a scalar f");
  if (!std::isfinite(static_cast<double>(y.item()))) {
    throw NumericError("grad_check: non-finite function value");
  }
  Backward(y);

  double scale = 0.0;
  for (auto& a : args) {
    if (!a.has_grad()) continue;
    for (T g : a.grad()) scale = std::max(scale, std::abs(static_cast<double>(g)));
  }

  double worst = 0.0;
  NoGradGuard no_grad;
  for (auto& a : args) {
    std::vector<T> analytic(a.numel(), T(0));
    if (a.has_grad()) {
      auto g = a.grad();
      std::copy(g.begin(), g.end(), analytic.begin());
    }
    auto v = a.mutable_values();
    for (int64_t i = 0; i < a.numel(); ++i) {
      const T saved = v[i];
      v[i] = saved + static_cast<T>(step);
      const double fp = static_cast<double>(f(args).item());
      v[i] = saved - static_cast<T>(step);
      const double fm = static_cast<double>(f(args).item());
      v[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("grad_check: non-finite perturbed value");
      }
      const double numeric = (fp - fm) / (2.0 * step);
      const double an = static_cast<double>(analytic[i]);
      const double denom =
          std::max({std::abs(an), std::abs(numeric), 1e-3 * scale, 1e-12});
      worst = std::max(worst, std::abs(an - numeric) / denom);
    }
  }
  return worst;
}

template <typename To, typename From>
Tensor<To> Cast(const Tensor<From>& t, bool requires_grad) {
  auto v = t.values();
  return Tensor<To>(t.shape(), std::vector<To>(v.begin(), v.end()),
                    requires_grad);
}

template struct internal::Node<float>;
template struct internal::Node<double>;
template class Tensor<float>;
template class Tensor<double>;

#define GDC_INSTANTIATE(T)                                                   \
  template Tensor<T> MakeResult<T>(const char*, Shape, std::vector<T>,      \
                                   std::vector<Tensor<T>>,                  \
                                   std::function<void(internal::Node<T>&)>); \
  template void Backward<T>(const Tensor<T>&);                               \
  template double GradCheck<T>(                                              \
      const std::function<Tensor<T>(std::span<const Tensor<T>>)>&,           \
      std::span<const Tensor<T>>, double);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

template Tensor<float> Cast<float, double>(const Tensor<double>&, bool);
template Tensor<double> Cast<double, float>(const Tensor<float>&, bool);
template Tensor<float> Cast<float, float>(const Tensor<float>&, bool);
template Tensor<double> Cast<double, double>(const Tensor<double>&, bool);

}  // namespace gdc
