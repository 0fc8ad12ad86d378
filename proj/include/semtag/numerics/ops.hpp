#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "semtag/numerics/tape.hpp"
#include "semtag/numerics/tensor.hpp"

// Differentiable primitives. All operate on rank-2 tensors (a vector is a
// 1×n row). Each records a node on the tape when any input requires grad.
namespace semtag::numerics::ops {

using Mask = std::vector<std::uint8_t>;

// (m×k)·(k×n) → m×n.
template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

// Same shape, or b a 1×n row broadcast over every row of a.
template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

// Elementwise product of equal shapes.
template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor);

// axis 0 stacks rows (equal column counts); axis 1 joins columns (equal rows).
template <typename T>
Tensor<T> concat(Tape<T>& tape, std::span<const Tensor<T>> parts, int axis);

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x);

// Softmax along each row over positions where mask is non-zero. Masked
// positions receive exactly 0. mask has one entry per column (shared by all
// rows) or one per element. An all-masked row is a DegenerateMaskError.
template <typename T>
Tensor<T> masked_softmax(Tape<T>& tape, const Tensor<T>& x, const Mask& mask);

// T×D → 1×D over rows whose mask entry is non-zero.
template <typename T>
Tensor<T> mean_over_time(Tape<T>& tape, const Tensor<T>& x, const Mask& mask);

// Ties resolve to the earliest row.
template <typename T>
Tensor<T> max_over_time(Tape<T>& tape, const Tensor<T>& x, const Mask& mask);

// Gathers table rows. Gradient is never accumulated into padding_row.
template <typename T>
Tensor<T> embedding_lookup(Tape<T>& tape, const Tensor<T>& table,
                           std::span<const std::size_t> indices,
                           std::size_t padding_row = static_cast<std::size_t>(-1));

// Rows [r0, r1) and columns [c0, c1).
template <typename T>
Tensor<T> slice(Tape<T>& tape, const Tensor<T>& x, std::size_t r0, std::size_t r1,
                std::size_t c0, std::size_t c1);

template <typename T>
Tensor<T> transpose(Tape<T>& tape, const Tensor<T>& x);

// Sum of all elements → 1×1.
template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x);

// −log softmax(logits)[target] for a 1×K logit row → 1×1.
template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::size_t target);

// Row-wise softmax without tracking; for turning logits into probabilities.
template <typename T>
std::vector<T> softmax_values(std::span<const T> logits);

}  // namespace semtag::numerics::ops
