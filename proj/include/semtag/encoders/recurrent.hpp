#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "semtag/numerics/ops.hpp"
#include "semtag/numerics/rng.hpp"
#include "semtag/numerics/tape.hpp"

namespace semtag::encoders {

using numerics::Tape;
using numerics::Tensor;

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
};

template <typename T>
using ParameterList = std::vector<NamedTensor<T>>;

// Xavier-uniform weights, zero biases.
template <typename T>
Tensor<T> xavier(numerics::Rng& rng, std::size_t fan_in, std::size_t fan_out);

// Gate order i, f, g, o. W is D×4H, U is H×4H, b is 1×4H.
template <typename T>
struct LstmCell {
  Tensor<T> W, U, b;

  LstmCell() = default;
  LstmCell(std::size_t input_dim, std::size_t hidden, numerics::Rng& rng);
  std::size_t hidden() const { return U.rows(); }
  std::size_t input_dim() const { return W.rows(); }

  // Runs over the rows of `projected` (= X·W + b, precomputed for all rows)
  // listed in `positions`, in the given order. Returns one 1×H state per
  // listed position.
  std::vector<Tensor<T>> run(Tape<T>& tape, const Tensor<T>& projected,
                             const std::vector<std::size_t>& positions) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

// Gate order r, z, n. n = tanh(x·Wn + bn + r ⊙ (h·Un)); h' = n + z ⊙ (h - n).
template <typename T>
struct GruCell {
  Tensor<T> W, U, b;

  GruCell() = default;
  GruCell(std::size_t input_dim, std::size_t hidden, numerics::Rng& rng);
  std::size_t hidden() const { return U.rows(); }
  std::size_t input_dim() const { return W.rows(); }

  std::vector<Tensor<T>> run(Tape<T>& tape, const Tensor<T>& projected,
                             const std::vector<std::size_t>& positions) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct DirectionalStates {
  std::vector<std::size_t> positions;  // live rows, ascending
  std::vector<Tensor<T>> forward;      // aligned with positions
  std::vector<Tensor<T>> backward;     // aligned with positions
};

// Forward and backward passes of one cell type over the unmasked rows.
template <typename T, template <typename> class Cell>
struct Bidirectional {
  Cell<T> forward_cell;
  Cell<T> backward_cell;

  Bidirectional() = default;
  Bidirectional(std::size_t input_dim, std::size_t hidden, numerics::Rng& rng)
      : forward_cell(input_dim, hidden, rng), backward_cell(input_dim, hidden, rng) {}

  std::size_t hidden() const { return forward_cell.hidden(); }

  // Throws DegenerateMaskError when every row is masked.
  DirectionalStates<T> run(Tape<T>& tape, const Tensor<T>& seq, const numerics::ops::Mask& mask) const;

  // concat(final forward state, final backward state) → 1×2H.
  Tensor<T> final_states(Tape<T>& tape, const Tensor<T>& seq, const numerics::ops::Mask& mask) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const {
    forward_cell.collect(out, prefix + ".forward");
    backward_cell.collect(out, prefix + ".backward");
  }
};

template <typename T>
using BiLstm = Bidirectional<T, LstmCell>;
template <typename T>
using BiGru = Bidirectional<T, GruCell>;

}  // namespace semtag::encoders
