#include "semtag/numerics/adam.hpp"

#include <cmath>
#include <string>

namespace semtag::numerics {

template <typename T>
AdamState<T>::AdamState(std::span<const Tensor<T>> params, AdamOptions opts) : options(opts) {
  if (!(opts.beta1 > 0 && opts.beta1 < 1 && opts.beta2 > 0 && opts.beta2 < 1)) {
    throw ContractError("adam: betas must lie in (0, 1)");
  }
  if (!(opts.learning_rate >= 0)) throw ContractError("adam: learning rate must be non-negative");
  for (const auto& p : params) {
    first_moment.emplace_back(p.size(), T{0});
    second_moment.emplace_back(p.size(), T{0});
  }
}

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (params.size() != state.first_moment.size()) {
    throw ContractError("adam: " + std::to_string(params.size()) + " parameters for state of " +
                        std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " has no gradient");
    }
    if (params[i].size() != state.first_moment[i].size()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " changed size");
    }
  }
  ++state.step;
  const auto& o = state.options;
  const double step = static_cast<double>(state.step);
  const T b1 = static_cast<T>(o.beta1);
  const T b2 = static_cast<T>(o.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(o.beta1, step));
  const T correction2 = static_cast<T>(1.0 - std::pow(o.beta2, step));
  const T lr = static_cast<T>(o.learning_rate);
  const T eps = static_cast<T>(o.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T{1} - b1) * g[j];
      v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
      const T m_hat = m[j] / correction1;
      const T v_hat = v[j] / correction2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::span<Tensor<float>>, AdamState<float>&);
template void adam_step(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace semtag::numerics
