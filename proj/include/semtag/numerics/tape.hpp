#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "semtag/numerics/tensor.hpp"

namespace semtag::numerics {

enum class Primitive {
  matmul,
  add,
  sub,
  mul,
  scale,
  concat,
  tanh,
  sigmoid,
  masked_softmax,
  mean_over_time,
  max_over_time,
  embedding_lookup,
  slice,
  transpose,
  sum,
  cross_entropy,
};

std::string_view primitive_name(Primitive kind);

// Records primitive applications in execution order. Because a node is only
// appended after its inputs exist, the node list is topologically sorted and
// backward() is a single reverse sweep.
template <typename T>
class Tape {
 public:
  struct Node {
    Primitive kind;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    // Reads output.grad() and accumulates into the inputs that require grad.
    std::function<void(Node&)> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  // Appends a node when any input requires grad; marks the output as
  // requiring grad in that case. Returns the output unchanged.
  Tensor<T> record(Primitive kind, std::vector<Tensor<T>> inputs, Tensor<T> output,
                   std::function<void(Node&)> backward) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return output;
    output.impl_->requires_grad = true;
    output.impl_->node = nodes_.size();
    nodes_.push_back(Node{kind, std::move(inputs), output, std::move(backward)});
    return output;
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }

  // Populates gradients of every requires_grad tensor reachable from loss.
  // Leaf gradients accumulate across calls until zeroed; intermediate
  // gradients are reset on every call.
  void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("backward: loss must be a scalar tensor, got shape " +
                          (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) return;
    const auto id = loss.node_id();
    if (!id || *id >= nodes_.size() || !nodes_[*id].output.same_storage(loss)) {
      throw ContractError("backward: loss was not recorded on this tape");
    }
    for (std::size_t i = 0; i <= *id; ++i) nodes_[i].output.zero_grad();
    nodes_[*id].output.mutable_grad()[0] = T{1};
    for (std::size_t i = *id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      n.backward(n);
    }
  }

  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace semtag::numerics
