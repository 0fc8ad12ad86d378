#include "semtag/numerics/ops.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace semtag::numerics {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::string_view primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::matmul: return "matmul";
    case Primitive::add: return "add";
    case Primitive::sub: return "sub";
    case Primitive::mul: return "elementwise-mul";
    case Primitive::scale: return "scale";
    case Primitive::concat: return "concat";
    case Primitive::tanh: return "tanh";
    case Primitive::sigmoid: return "sigmoid";
    case Primitive::masked_softmax: return "masked-softmax";
    case Primitive::mean_over_time: return "mean-over-time";
    case Primitive::max_over_time: return "max-over-time";
    case Primitive::embedding_lookup: return "embedding-lookup";
    case Primitive::slice: return "slice";
    case Primitive::transpose: return "transpose";
    case Primitive::sum: return "sum";
    case Primitive::cross_entropy: return "cross-entropy";
  }
  return "unknown";
}

}  // namespace semtag::numerics

namespace semtag::numerics::ops {
namespace {

template <typename T>
void require_matrix(Primitive kind, const Tensor<T>& x) {
  if (!x.defined() || x.rank() != 2) {
    throw DimensionError(std::string(primitive_name(kind)) + ": expected a matrix, got " +
                         (x.defined() ? shape_string(x.shape()) : std::string("<undefined>")));
  }
}

[[noreturn]] void mismatch(Primitive kind, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(primitive_name(kind)) + ": incompatible shapes " +
                       shape_string(a) + " and " + shape_string(b));
}

template <typename T>
void accumulate(Tensor<T>& target, std::span<const T> delta) {
  if (!target.requires_grad()) return;
  auto g = target.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void check_mask_rows(Primitive kind, const Mask& mask, std::size_t rows) {
  if (mask.size() != rows) {
    throw DimensionError(std::string(primitive_name(kind)) + ": mask of length " +
                         std::to_string(mask.size()) + " for " + std::to_string(rows) + " rows");
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(Primitive::matmul, a);
  require_matrix(Primitive::matmul, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch(Primitive::matmul, a.shape(), b.shape());
  std::vector<T> out(m * n, T{0});
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    T* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      if (av == T{0}) continue;
      const T* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return tape.record(Primitive::matmul, {a, b}, Tensor<T>({m, n}, std::move(out)),
                     [m, k, n](auto& node) {
                       auto& x = node.inputs[0];
                       auto& y = node.inputs[1];
                       const auto G = node.output.grad();
                       if (x.requires_grad()) {
                         const auto Y = y.data();
                         auto gx = x.mutable_grad();
                         for (std::size_t i = 0; i < m; ++i) {
                           const T* grow = G.data() + i * n;
                           for (std::size_t p = 0; p < k; ++p) {
                             const T* yrow = Y.data() + p * n;
                             T acc{0};
                             for (std::size_t j = 0; j < n; ++j) acc += grow[j] * yrow[j];
                             gx[i * k + p] += acc;
                           }
                         }
                       }
                       if (y.requires_grad()) {
                         const auto X = x.data();
                         auto gy = y.mutable_grad();
                         for (std::size_t i = 0; i < m; ++i) {
                           const T* grow = G.data() + i * n;
                           for (std::size_t p = 0; p < k; ++p) {
                             const T xv = X[i * k + p];
                             if (xv == T{0}) continue;
                             T* gyrow = gy.data() + p * n;
                             for (std::size_t j = 0; j < n; ++j) gyrow[j] += xv * grow[j];
                           }
                         }
                       }
                     });
}

namespace {

template <typename T>
Tensor<T> add_or_sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b, T sign,
                     Primitive kind) {
  require_matrix(kind, a);
  require_matrix(kind, b);
  const bool same = a.shape() == b.shape();
  const bool row_broadcast = !same && b.rows() == 1 && b.cols() == a.cols();
  if (!same && !row_broadcast) mismatch(kind, a.shape(), b.shape());
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(a.values());
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] += sign * B[same ? i * n + j : j];
    }
  }
  return tape.record(kind, {a, b}, Tensor<T>(a.shape(), std::move(out)),
                     [same, m, n, sign](auto& node) {
                       const auto G = node.output.grad();
                       accumulate(node.inputs[0], G);
                       auto& y = node.inputs[1];
                       if (!y.requires_grad()) return;
                       auto gy = y.mutable_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t j = 0; j < n; ++j) {
                           gy[same ? i * n + j : j] += sign * G[i * n + j];
                         }
                       }
                     });
}

}  // namespace

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return add_or_sub(tape, a, b, T{1}, Primitive::add);
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  return add_or_sub(tape, a, b, T{-1}, Primitive::sub);
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(Primitive::mul, a);
  require_matrix(Primitive::mul, b);
  if (a.shape() != b.shape()) mismatch(Primitive::mul, a.shape(), b.shape());
  std::vector<T> out(a.size());
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return tape.record(Primitive::mul, {a, b}, Tensor<T>(a.shape(), std::move(out)),
                     [](auto& node) {
                       const auto G = node.output.grad();
                       auto& x = node.inputs[0];
                       auto& y = node.inputs[1];
                       if (x.requires_grad()) {
                         auto gx = x.mutable_grad();
                         const auto Y = y.data();
                         for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += G[i] * Y[i];
                       }
                       if (y.requires_grad()) {
                         auto gy = y.mutable_grad();
                         const auto X = x.data();
                         for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += G[i] * X[i];
                       }
                     });
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& a, T factor) {
  require_matrix(Primitive::scale, a);
  std::vector<T> out(a.values());
  for (auto& v : out) v *= factor;
  return tape.record(Primitive::scale, {a}, Tensor<T>(a.shape(), std::move(out)),
                     [factor](auto& node) {
                       auto& x = node.inputs[0];
                       if (!x.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gx = x.mutable_grad();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * G[i];
                     });
}

template <typename T>
Tensor<T> concat(Tape<T>& tape, std::span<const Tensor<T>> parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ContractError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_matrix(Primitive::concat, p);
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      if (p.cols() != cols) mismatch(Primitive::concat, parts[0].shape(), p.shape());
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      if (p.rows() != rows) mismatch(Primitive::concat, parts[0].shape(), p.shape());
      cols += p.cols();
    }
  }
  std::vector<T> out;
  out.reserve(rows * cols);
  if (axis == 0) {
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      for (const auto& p : parts) {
        const auto d = p.data();
        const auto c = p.cols();
        out.insert(out.end(), d.begin() + r * c, d.begin() + (r + 1) * c);
      }
    }
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return tape.record(
      Primitive::concat, std::move(inputs), Tensor<T>({rows, cols}, std::move(out)),
      [axis, rows, cols](auto& node) {
        const auto G = node.output.grad();
        if (axis == 0) {
          std::size_t offset = 0;
          for (auto& p : node.inputs) {
            if (p.requires_grad()) accumulate(p, G.subspan(offset, p.size()));
            offset += p.size();
          }
          return;
        }
        std::size_t col0 = 0;
        for (auto& p : node.inputs) {
          const auto c = p.cols();
          if (p.requires_grad()) {
            auto gp = p.mutable_grad();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < c; ++j) gp[r * c + j] += G[r * cols + col0 + j];
            }
          }
          col0 += c;
        }
      });
}

template <typename T>
Tensor<T> tanh(Tape<T>& tape, const Tensor<T>& x) {
  require_matrix(Primitive::tanh, x);
  std::vector<T> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(X[i]);
  return tape.record(Primitive::tanh, {x}, Tensor<T>(x.shape(), std::move(out)),
                     [](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       const auto Y = node.output.data();
                       auto gi = in.mutable_grad();
                       for (std::size_t i = 0; i < gi.size(); ++i) {
                         gi[i] += G[i] * (T{1} - Y[i] * Y[i]);
                       }
                     });
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
  require_matrix(Primitive::sigmoid, x);
  std::vector<T> out(x.size());
  const auto X = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Split by sign so exp() never overflows.
    if (X[i] >= T{0}) {
      out[i] = T{1} / (T{1} + std::exp(-X[i]));
    } else {
      const T e = std::exp(X[i]);
      out[i] = e / (T{1} + e);
    }
  }
  return tape.record(Primitive::sigmoid, {x}, Tensor<T>(x.shape(), std::move(out)),
                     [](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       const auto Y = node.output.data();
                       auto gi = in.mutable_grad();
                       for (std::size_t i = 0; i < gi.size(); ++i) {
                         gi[i] += G[i] * Y[i] * (T{1} - Y[i]);
                       }
                     });
}

template <typename T>
Tensor<T> masked_softmax(Tape<T>& tape, const Tensor<T>& x, const Mask& mask) {
  require_matrix(Primitive::masked_softmax, x);
  const std::size_t m = x.rows(), n = x.cols();
  const bool per_column = mask.size() == n;
  if (!per_column && mask.size() != m * n) {
    throw DimensionError("masked-softmax: mask of length " + std::to_string(mask.size()) +
                         " for shape " + shape_string(x.shape()));
  }
  auto live = [&](std::size_t i, std::size_t j) {
    return mask[per_column ? j : i * n + j] != 0;
  };
  std::vector<T> out(m * n, T{0});
  const auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    T hi = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (live(i, j)) {
        hi = std::max(hi, X[i * n + j]);
        any = true;
      }
    }
    if (!any) {
      throw DegenerateMaskError("masked-softmax: row " + std::to_string(i) + " is fully masked");
    }
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      if (live(i, j)) {
        out[i * n + j] = std::exp(X[i * n + j] - hi);
        total += out[i * n + j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (live(i, j)) out[i * n + j] /= total;
    }
  }
  return tape.record(Primitive::masked_softmax, {x}, Tensor<T>(x.shape(), std::move(out)),
                     [m, n](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       const auto Y = node.output.data();
                       auto gi = in.mutable_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                         T dot{0};
                         for (std::size_t j = 0; j < n; ++j) dot += Y[i * n + j] * G[i * n + j];
                         // Masked entries have Y == 0 and so receive no gradient.
                         for (std::size_t j = 0; j < n; ++j) {
                           gi[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
                         }
                       }
                     });
}

template <typename T>
Tensor<T> mean_over_time(Tape<T>& tape, const Tensor<T>& x, const Mask& mask) {
  require_matrix(Primitive::mean_over_time, x);
  const std::size_t rows = x.rows(), d = x.cols();
  check_mask_rows(Primitive::mean_over_time, mask, rows);
  std::size_t count = 0;
  for (auto v : mask) count += v != 0;
  if (count == 0) throw DegenerateMaskError("mean-over-time: every position is masked");
  std::vector<T> out(d, T{0});
  const auto X = x.data();
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += X[t * d + j];
  }
  const T denom = static_cast<T>(count);
  for (auto& v : out) v /= denom;
  return tape.record(Primitive::mean_over_time, {x}, Tensor<T>({1, d}, std::move(out)),
                     [mask, rows, d, denom](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gi = in.mutable_grad();
                       for (std::size_t t = 0; t < rows; ++t) {
                         if (!mask[t]) continue;
                         for (std::size_t j = 0; j < d; ++j) gi[t * d + j] += G[j] / denom;
                       }
                     });
}

template <typename T>
Tensor<T> max_over_time(Tape<T>& tape, const Tensor<T>& x, const Mask& mask) {
  require_matrix(Primitive::max_over_time, x);
  const std::size_t rows = x.rows(), d = x.cols();
  check_mask_rows(Primitive::max_over_time, mask, rows);
  if (std::none_of(mask.begin(), mask.end(), [](auto v) { return v != 0; })) {
    throw DegenerateMaskError("max-over-time: every position is masked");
  }
  std::vector<std::size_t> argmax(d, rows);
  std::vector<T> out(d, T{0});
  const auto X = x.data();
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (argmax[j] == rows || X[t * d + j] > out[j]) {
        out[j] = X[t * d + j];
        argmax[j] = t;
      }
    }
  }
  return tape.record(Primitive::max_over_time, {x}, Tensor<T>({1, d}, std::move(out)),
                     [argmax = std::move(argmax), d](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gi = in.mutable_grad();
                       for (std::size_t j = 0; j < d; ++j) gi[argmax[j] * d + j] += G[j];
                     });
}

template <typename T>
Tensor<T> embedding_lookup(Tape<T>& tape, const Tensor<T>& table,
                           std::span<const std::size_t> indices, std::size_t padding_row) {
  require_matrix(Primitive::embedding_lookup, table);
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<T> out;
  out.reserve(indices.size() * d);
  const auto W = table.data();
  for (auto idx : indices) {
    if (idx >= vocab) {
      throw DimensionError("embedding-lookup: index " + std::to_string(idx) +
                           " out of range for table " + shape_string(table.shape()));
    }
    out.insert(out.end(), W.begin() + idx * d, W.begin() + (idx + 1) * d);
  }
  std::vector<std::size_t> saved(indices.begin(), indices.end());
  return tape.record(Primitive::embedding_lookup, {table},
                     Tensor<T>({saved.size(), d}, std::move(out)),
                     [saved, d, padding_row](auto& node) {
                       auto& tbl = node.inputs[0];
                       if (!tbl.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gt = tbl.mutable_grad();
                       for (std::size_t r = 0; r < saved.size(); ++r) {
                         if (saved[r] == padding_row) continue;
                         for (std::size_t j = 0; j < d; ++j) gt[saved[r] * d + j] += G[r * d + j];
                       }
                     });
}

template <typename T>
Tensor<T> slice(Tape<T>& tape, const Tensor<T>& x, std::size_t r0, std::size_t r1,
                std::size_t c0, std::size_t c1) {
  require_matrix(Primitive::slice, x);
  if (r0 > r1 || r1 > x.rows() || c0 > c1 || c1 > x.cols()) {
    throw DimensionError("slice: range [" + std::to_string(r0) + "," + std::to_string(r1) +
                         ")x[" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") outside " + shape_string(x.shape()));
  }
  const std::size_t n = x.cols(), w = c1 - c0;
  std::vector<T> out;
  out.reserve((r1 - r0) * w);
  const auto X = x.data();
  for (std::size_t r = r0; r < r1; ++r) {
    out.insert(out.end(), X.begin() + r * n + c0, X.begin() + r * n + c1);
  }
  return tape.record(Primitive::slice, {x}, Tensor<T>({r1 - r0, w}, std::move(out)),
                     [r0, r1, c0, n, w](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gi = in.mutable_grad();
                       for (std::size_t r = r0; r < r1; ++r) {
                         for (std::size_t j = 0; j < w; ++j) {
                           gi[r * n + c0 + j] += G[(r - r0) * w + j];
                         }
                       }
                     });
}

template <typename T>
Tensor<T> transpose(Tape<T>& tape, const Tensor<T>& x) {
  require_matrix(Primitive::transpose, x);
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<T> out(m * n);
  const auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = X[i * n + j];
  }
  return tape.record(Primitive::transpose, {x}, Tensor<T>({n, m}, std::move(out)),
                     [m, n](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const auto G = node.output.grad();
                       auto gi = in.mutable_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t j = 0; j < n; ++j) gi[i * n + j] += G[j * m + i];
                       }
                     });
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
  require_matrix(Primitive::sum, x);
  T total{0};
  for (auto v : x.data()) total += v;
  return tape.record(Primitive::sum, {x}, Tensor<T>::scalar(total), [](auto& node) {
    auto& in = node.inputs[0];
    if (!in.requires_grad()) return;
    const T g = node.output.grad()[0];
    for (auto& v : in.mutable_grad()) v += g;
  });
}

template <typename T>
std::vector<T> softmax_values(std::span<const T> logits) {
  std::vector<T> out(logits.size());
  if (logits.empty()) return out;
  const T hi = *std::max_element(logits.begin(), logits.end());
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

template <typename T>
Tensor<T> cross_entropy(Tape<T>& tape, const Tensor<T>& logits, std::size_t target) {
  require_matrix(Primitive::cross_entropy, logits);
  if (logits.rows() != 1 || target >= logits.cols()) {
    throw DimensionError("cross-entropy: target " + std::to_string(target) +
                         " invalid for logits " + shape_string(logits.shape()));
  }
  const auto L = logits.data();
  const T hi = *std::max_element(L.begin(), L.end());
  T total{0};
  for (auto v : L) total += std::exp(v - hi);
  const T lse = hi + std::log(total);
  return tape.record(Primitive::cross_entropy, {logits}, Tensor<T>::scalar(lse - L[target]),
                     [target](auto& node) {
                       auto& in = node.inputs[0];
                       if (!in.requires_grad()) return;
                       const T g = node.output.grad()[0];
                       const auto p = softmax_values<T>(in.data());
                       auto gi = in.mutable_grad();
                       for (std::size_t j = 0; j < gi.size(); ++j) {
                         gi[j] += g * (p[j] - (j == target ? T{1} : T{0}));
                       }
                     });
}

#define SEMTAG_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                                 \
  template Tensor<T> concat(Tape<T>&, std::span<const Tensor<T>>, int);                    \
  template Tensor<T> tanh(Tape<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sigmoid(Tape<T>&, const Tensor<T>&);                                  \
  template Tensor<T> masked_softmax(Tape<T>&, const Tensor<T>&, const Mask&);              \
  template Tensor<T> mean_over_time(Tape<T>&, const Tensor<T>&, const Mask&);              \
  template Tensor<T> max_over_time(Tape<T>&, const Tensor<T>&, const Mask&);               \
  template Tensor<T> embedding_lookup(Tape<T>&, const Tensor<T>&,                          \
                                      std::span<const std::size_t>, std::size_t);          \
  template Tensor<T> slice(Tape<T>&, const Tensor<T>&, std::size_t, std::size_t,           \
                           std::size_t, std::size_t);                                      \
  template Tensor<T> transpose(Tape<T>&, const Tensor<T>&);                                \
  template Tensor<T> sum(Tape<T>&, const Tensor<T>&);                                      \
  template Tensor<T> cross_entropy(Tape<T>&, const Tensor<T>&, std::size_t);               \
  template std::vector<T> softmax_values(std::span<const T>);

SEMTAG_INSTANTIATE_OPS(float)
SEMTAG_INSTANTIATE_OPS(double)

#undef SEMTAG_INSTANTIATE_OPS

}  // namespace semtag::numerics::ops
