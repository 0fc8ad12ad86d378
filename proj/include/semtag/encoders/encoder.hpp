#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semtag/encoders/recurrent.hpp"

namespace semtag::encoders {

enum class EncoderKind { bilstm, gru, han, pool_mean, pool_max, pool_meanmax, pool_bos };
enum class PoolStrategy { mean, max, meanmax, bos };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::han;
  std::size_t hidden_per_direction = 128;  // recurrent kinds only

  bool recurrent() const {
    return kind == EncoderKind::bilstm || kind == EncoderKind::gru || kind == EncoderKind::han;
  }
  bool pooling() const { return !recurrent(); }
  PoolStrategy strategy() const;
  // 2·hidden for recurrent kinds; input width (twice for meanmax) for pooling.
  std::size_t output_dim(std::size_t input_dim) const;
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

template <typename T>
struct EncodedSentence {
  Tensor<T> vector;                       // 1×output_dim
  std::optional<std::vector<T>> attention;  // one weight per input row (HAN only)
};

// Reduces rows of a sequence to one vector over unmasked positions.
// mean/max ignore masked rows, meanmax = [mean | max], bos returns row 0.
template <typename T>
Tensor<T> pool(Tape<T>& tape, const Tensor<T>& seq, const numerics::ops::Mask& mask,
               PoolStrategy strategy);

// Sentence-level attention over per-position states (masked rows ignored):
// u = tanh(states·W + b), α = masked-softmax(u·context), output = α·states.
template <typename T>
struct AttentionLayer {
  Tensor<T> W;        // A×A
  Tensor<T> b;        // 1×A
  Tensor<T> context;  // A×1

  AttentionLayer() = default;
  AttentionLayer(std::size_t dim, numerics::Rng& rng);

  // Returns the pooled 1×A vector and the 1×T attention row.
  std::pair<Tensor<T>, Tensor<T>> apply(Tape<T>& tape, const Tensor<T>& states,
                                        const numerics::ops::Mask& mask) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, std::size_t input_dim, numerics::Rng& rng);

  const EncoderConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return config_.output_dim(input_dim_); }

  // seq is T×input_dim; mask marks real tokens. An all-masked input is a
  // DegenerateMaskError.
  EncodedSentence<T> encode(Tape<T>& tape, const Tensor<T>& seq,
                            const numerics::ops::Mask& mask) const;

  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  EncoderConfig config_;
  std::size_t input_dim_ = 0;
  BiLstm<T> lstm_;
  BiGru<T> gru_;
  AttentionLayer<T> attention_;
};

}  // namespace semtag::encoders
