#include "semtag/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "semtag/numerics/rng.hpp"

namespace semtag::numerics {
namespace {

template <typename T>
T evaluate(const ScalarFunction<T>& f) {
  Tape<T> tape;
  const auto out = f(tape);
  if (!out.defined() || out.size() != 1) {
    throw ContractError("finite_difference_check: function is not scalar-valued");
  }
  return out.data()[0];
}

template <typename T>
void seed_gradients(const ScalarFunction<T>& f, std::span<Tensor<T>> wrt) {
  for (auto& x : wrt) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  Tape<T> tape;
  const auto loss = f(tape);
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("finite_difference_check: function is not scalar-valued");
  }
  tape.backward(loss);
}

template <typename A, typename N>
double compare(std::span<Tensor<A>> analytic_wrt, const ScalarFunction<N>& f,
               std::span<Tensor<N>> wrt, const GradCheckOptions& options) {
  Rng rng(options.seed);
  const N h = static_cast<N>(options.step);
  double worst = 0.0;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto& x = wrt[k];
    const auto analytic = analytic_wrt[k].grad();
    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coordinates && coords.size() > options.max_coordinates) {
      rng.shuffle(coords);
      coords.resize(options.max_coordinates);
      std::sort(coords.begin(), coords.end());
    }
    auto values = x.mutable_data();
    for (auto i : coords) {
      const N saved = values[i];
      values[i] = saved + h;
      const double hi_x = values[i];
      const N up = evaluate(f);
      values[i] = saved - h;
      const double lo_x = values[i];
      const N down = evaluate(f);
      values[i] = saved;
      // Divide by the represented step, not 2h, so rounding of saved ± h cancels.
      const double numeric = (static_cast<double>(up) - static_cast<double>(down)) / (hi_x - lo_x);
      const double a = static_cast<double>(analytic[i]);
      worst = std::max(worst, std::abs(a - numeric) / (std::abs(a) + 1e-8));
    }
  }
  return worst;
}

}  // namespace

template <typename T>
double finite_difference_check(const ScalarFunction<T>& f, std::span<Tensor<T>> wrt,
                               const GradCheckOptions& options) {
  if (!(options.step > 0)) throw ContractError("finite_difference_check: step must be positive");
  seed_gradients(f, wrt);
  return compare<T, T>(wrt, f, wrt, options);
}

double mixed_precision_check(const ScalarFunction<float>& f32, std::span<Tensor<float>> wrt32,
                             const ScalarFunction<double>& f64, std::span<Tensor<double>> wrt64,
                             const GradCheckOptions& options) {
  if (!(options.step > 0)) throw ContractError("mixed_precision_check: step must be positive");
  if (wrt32.size() != wrt64.size()) {
    throw ContractError("mixed_precision_check: parameter lists differ in length");
  }
  for (std::size_t k = 0; k < wrt32.size(); ++k) {
    if (wrt32[k].shape() != wrt64[k].shape()) {
      throw ContractError("mixed_precision_check: shape mismatch at parameter " + std::to_string(k));
    }
    std::copy(wrt32[k].data().begin(), wrt32[k].data().end(), wrt64[k].mutable_data().begin());
  }
  seed_gradients(f32, wrt32);
  return compare<float, double>(wrt32, f64, wrt64, options);
}

template <typename T>
double finite_difference_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f,
                               Tensor<T> x, double h) {
  std::vector<Tensor<T>> wrt{x};
  return finite_difference_check<T>([&](Tape<T>& tape) { return f(tape, x); }, wrt,
                                    GradCheckOptions{h, 0, 0});
}

template double finite_difference_check(const ScalarFunction<float>&, std::span<Tensor<float>>,
                                        const GradCheckOptions&);
template double finite_difference_check(const ScalarFunction<double>&, std::span<Tensor<double>>,
                                        const GradCheckOptions&);
template double finite_difference_check(
    const std::function<Tensor<float>(Tape<float>&, const Tensor<float>&)>&, Tensor<float>, double);
template double finite_difference_check(
    const std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>&, Tensor<double>,
    double);

}  // namespace semtag::numerics
