#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semtag/error.hpp"

namespace semtag::numerics {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

template <typename T>
class Tape;

// Dense row-major array with an optional gradient buffer. Copies share the
// underlying storage, so a parameter handed to an optimizer and to a model
// is one object. Use clone() for an independent copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    if (shape_size(shape) != data.size()) {
      throw DimensionError("tensor: shape " + shape_string(shape) + " does not hold " +
                           std::to_string(data.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
  }

  static Tensor filled(Shape shape, T value, bool requires_grad = false) {
    const auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor({1, 1}, {value}, requires_grad);
  }

  // 1×n row vector.
  static Tensor row(std::vector<T> values, bool requires_grad = false) {
    const auto n = values.size();
    return Tensor({1, n}, std::move(values), requires_grad);
  }

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t rows() const { return rank() == 2 ? impl_->shape[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? impl_->shape[1] : size(); }

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }

  T at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
  T flat(std::size_t i) const { return impl_->data.at(i); }
  T item() const {
    if (size() != 1) {
      throw ContractError("tensor: item() on non-scalar of shape " + shape_string(shape()));
    }
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  bool has_grad() const { return impl_->has_grad; }
  std::span<const T> grad() const {
    if (!impl_->has_grad) throw ContractError("tensor: gradient absent");
    return impl_->grad;
  }
  std::span<T> mutable_grad() {
    ensure_grad();
    return impl_->grad;
  }
  void ensure_grad() {
    if (!impl_->has_grad) {
      impl_->grad.assign(impl_->data.size(), T{0});
      impl_->has_grad = true;
    }
  }
  void zero_grad() {
    impl_->grad.assign(impl_->data.size(), T{0});
    impl_->has_grad = true;
  }
  void clear_grad() {
    impl_->grad.clear();
    impl_->has_grad = false;
  }

  std::optional<std::size_t> node_id() const { return impl_->node; }

  Tensor clone() const {
    Tensor copy(impl_->shape, impl_->data, impl_->requires_grad);
    if (impl_->has_grad) {
      copy.impl_->grad = impl_->grad;
      copy.impl_->has_grad = true;
    }
    return copy;
  }

  // Values only, no gradient tracking.
  Tensor detach() const { return Tensor(impl_->shape, impl_->data, false); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(impl_->data.begin(), impl_->data.end());
    return Tensor<U>(impl_->shape, std::move(out), impl_->requires_grad);
  }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::optional<std::size_t> node;
  };
  std::shared_ptr<Impl> impl_;

  friend class Tape<T>;
};

}  // namespace semtag::numerics
