#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semtag/numerics/tensor.hpp"

namespace semtag::numerics {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments are kept per registered parameter, in registration order.
template <typename T>
struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  AdamOptions options;

  AdamState() = default;
  AdamState(std::span<const Tensor<T>> params, AdamOptions opts);
};

// One bias-corrected Adam update. Every parameter must carry a gradient.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state);

}  // namespace semtag::numerics
