#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "semtag/numerics/tape.hpp"
#include "semtag/numerics/tensor.hpp"

namespace semtag::numerics {

template <typename T>
using ScalarFunction = std::function<Tensor<T>(Tape<T>&)>;

struct GradCheckOptions {
  double step = 1e-4;
  // When non-zero, at most this many coordinates per tensor are probed,
  // chosen by a seeded draw; 0 probes every coordinate.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

// max over probed coordinates of |analytic - central difference| / (|analytic| + 1e-8).
// f is re-evaluated with each coordinate of each tensor in `wrt` perturbed
// by ±step. Gradients of `wrt` are overwritten.
template <typename T>
double finite_difference_check(const ScalarFunction<T>& f, std::span<Tensor<T>> wrt,
                               const GradCheckOptions& options = {});

// 32-bit check: analytic gradients come from f32 at the float parameters;
// central differences are taken on f64 with wrt64 set to the same values
// (exact upcast). wrt32 and wrt64 must correspond index by index, and f32,
// f64 must compute the same function in their precisions.
double mixed_precision_check(const ScalarFunction<float>& f32, std::span<Tensor<float>> wrt32,
                             const ScalarFunction<double>& f64, std::span<Tensor<double>> wrt64,
                             const GradCheckOptions& options = {});

// Single-input convenience form.
template <typename T>
double finite_difference_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f,
                               Tensor<T> x, double h);

}  // namespace semtag::numerics
