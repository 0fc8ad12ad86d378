#include "semtag/encoders/recurrent.hpp"

#include <cmath>

namespace semtag::encoders {

namespace ops = numerics::ops;

template <typename T>
Tensor<T> xavier(numerics::Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<T> v(fan_in * fan_out);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>({fan_in, fan_out}, std::move(v), true);
}

template <typename T>
LstmCell<T>::LstmCell(std::size_t input_dim, std::size_t hidden, numerics::Rng& rng)
    : W(xavier<T>(rng, input_dim, 4 * hidden)),
      U(xavier<T>(rng, hidden, 4 * hidden)),
      b(Tensor<T>::zeros({1, 4 * hidden}, true)) {}

template <typename T>
std::vector<Tensor<T>> LstmCell<T>::run(Tape<T>& tape, const Tensor<T>& projected,
                                        const std::vector<std::size_t>& positions) const {
  const std::size_t H = hidden();
  auto h = Tensor<T>::zeros({1, H});
  auto c = Tensor<T>::zeros({1, H});
  std::vector<Tensor<T>> states;
  states.reserve(positions.size());
  for (auto t : positions) {
    auto pre = ops::add(tape, ops::slice(tape, projected, t, t + 1, 0, 4 * H), ops::matmul(tape, h, U));
    auto i = ops::sigmoid(tape, ops::slice(tape, pre, 0, 1, 0, H));
    auto f = ops::sigmoid(tape, ops::slice(tape, pre, 0, 1, H, 2 * H));
    auto g = ops::tanh(tape, ops::slice(tape, pre, 0, 1, 2 * H, 3 * H));
    auto o = ops::sigmoid(tape, ops::slice(tape, pre, 0, 1, 3 * H, 4 * H));
    c = ops::add(tape, ops::mul(tape, f, c), ops::mul(tape, i, g));
    h = ops::mul(tape, o, ops::tanh(tape, c));
    states.push_back(h);
  }
  return states;
}

template <typename T>
void LstmCell<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".W", W, true});
  out.push_back({prefix + ".U", U, true});
  out.push_back({prefix + ".b", b, true});
}

template <typename T>
GruCell<T>::GruCell(std::size_t input_dim, std::size_t hidden, numerics::Rng& rng)
    : W(xavier<T>(rng, input_dim, 3 * hidden)),
      U(xavier<T>(rng, hidden, 3 * hidden)),
      b(Tensor<T>::zeros({1, 3 * hidden}, true)) {}

template <typename T>
std::vector<Tensor<T>> GruCell<T>::run(Tape<T>& tape, const Tensor<T>& projected,
                                       const std::vector<std::size_t>& positions) const {
  const std::size_t H = hidden();
  auto h = Tensor<T>::zeros({1, H});
  std::vector<Tensor<T>> states;
  states.reserve(positions.size());
  for (auto t : positions) {
    auto x = ops::slice(tape, projected, t, t + 1, 0, 3 * H);
    auto hu = ops::matmul(tape, h, U);
    auto r = ops::sigmoid(tape, ops::add(tape, ops::slice(tape, x, 0, 1, 0, H),
                                         ops::slice(tape, hu, 0, 1, 0, H)));
    auto z = ops::sigmoid(tape, ops::add(tape, ops::slice(tape, x, 0, 1, H, 2 * H),
                                         ops::slice(tape, hu, 0, 1, H, 2 * H)));
    auto n = ops::tanh(tape, ops::add(tape, ops::slice(tape, x, 0, 1, 2 * H, 3 * H),
                                      ops::mul(tape, r, ops::slice(tape, hu, 0, 1, 2 * H, 3 * H))));
    h = ops::add(tape, n, ops::mul(tape, z, ops::sub(tape, h, n)));
    states.push_back(h);
  }
  return states;
}

template <typename T>
void GruCell<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".W", W, true});
  out.push_back({prefix + ".U", U, true});
  out.push_back({prefix + ".b", b, true});
}

template <typename T, template <typename> class Cell>
DirectionalStates<T> Bidirectional<T, Cell>::run(Tape<T>& tape, const Tensor<T>& seq,
                                                  const ops::Mask& mask) const {
  if (mask.size() != seq.rows()) {
    throw DimensionError("recurrent: mask of length " + std::to_string(mask.size()) + " for " +
                         std::to_string(seq.rows()) + " rows");
  }
  DirectionalStates<T> out;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) out.positions.push_back(t);
  }
  if (out.positions.empty()) throw DegenerateMaskError("recurrent: every position is masked");
  auto fw_proj = ops::add(tape, ops::matmul(tape, seq, forward_cell.W), forward_cell.b);
  out.forward = forward_cell.run(tape, fw_proj, out.positions);
  std::vector<std::size_t> reversed(out.positions.rbegin(), out.positions.rend());
  auto bw_proj = ops::add(tape, ops::matmul(tape, seq, backward_cell.W), backward_cell.b);
  auto bw = backward_cell.run(tape, bw_proj, reversed);
  out.backward.assign(bw.rbegin(), bw.rend());
  return out;
}

template <typename T, template <typename> class Cell>
Tensor<T> Bidirectional<T, Cell>::final_states(Tape<T>& tape, const Tensor<T>& seq,
                                               const ops::Mask& mask) const {
  auto states = run(tape, seq, mask);
  const std::vector<Tensor<T>> parts{states.forward.back(), states.backward.front()};
  return ops::concat<T>(tape, parts, 1);
}

template Tensor<float> xavier(numerics::Rng&, std::size_t, std::size_t);
template Tensor<double> xavier(numerics::Rng&, std::size_t, std::size_t);
template struct LstmCell<float>;
template struct LstmCell<double>;
template struct GruCell<float>;
template struct GruCell<double>;
template struct Bidirectional<float, LstmCell>;
template struct Bidirectional<double, LstmCell>;
template struct Bidirectional<float, GruCell>;
template struct Bidirectional<double, GruCell>;

}  // namespace semtag::encoders
