#include "semtag/encoders/encoder.hpp"

namespace semtag::encoders {

namespace ops = numerics::ops;

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::bilstm: return "bilstm";
    case EncoderKind::gru: return "gru";
    case EncoderKind::han: return "han";
    case EncoderKind::pool_mean: return "pool-mean";
    case EncoderKind::pool_max: return "pool-max";
    case EncoderKind::pool_meanmax: return "pool-meanmax";
    case EncoderKind::pool_bos: return "pool-bos";
  }
  return "han";
}

EncoderKind parse_encoder_kind(std::string_view s) {
  for (auto k : {EncoderKind::bilstm, EncoderKind::gru, EncoderKind::han, EncoderKind::pool_mean,
                 EncoderKind::pool_max, EncoderKind::pool_meanmax, EncoderKind::pool_bos}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown encoder kind '" + std::string(s) + "'");
}

PoolStrategy EncoderConfig::strategy() const {
  switch (kind) {
    case EncoderKind::pool_mean: return PoolStrategy::mean;
    case EncoderKind::pool_max: return PoolStrategy::max;
    case EncoderKind::pool_meanmax: return PoolStrategy::meanmax;
    case EncoderKind::pool_bos: return PoolStrategy::bos;
    default: throw ContractError("encoder: " + std::string(to_string(kind)) + " is not a pooling kind");
  }
}

std::size_t EncoderConfig::output_dim(std::size_t input_dim) const {
  if (recurrent()) return 2 * hidden_per_direction;
  return kind == EncoderKind::pool_meanmax ? 2 * input_dim : input_dim;
}

void EncoderConfig::validate() const {
  if (recurrent() && hidden_per_direction == 0) {
    throw ConfigError("encoder: hidden_per_direction must be positive");
  }
}

template <typename T>
Tensor<T> pool(Tape<T>& tape, const Tensor<T>& seq, const ops::Mask& mask, PoolStrategy strategy) {
  if (mask.size() != seq.rows()) {
    throw DimensionError("pool: mask of length " + std::to_string(mask.size()) + " for " +
                         std::to_string(seq.rows()) + " rows");
  }
  switch (strategy) {
    case PoolStrategy::mean: return ops::mean_over_time(tape, seq, mask);
    case PoolStrategy::max: return ops::max_over_time(tape, seq, mask);
    case PoolStrategy::meanmax: {
      const std::vector<Tensor<T>> parts{ops::mean_over_time(tape, seq, mask),
                                         ops::max_over_time(tape, seq, mask)};
      return ops::concat<T>(tape, parts, 1);
    }
    case PoolStrategy::bos:
      if (mask.empty() || !mask[0]) throw DegenerateMaskError("pool: [BOS] position is masked");
      return ops::slice(tape, seq, 0, 1, 0, seq.cols());
  }
  throw ContractError("pool: unknown strategy");
}

template <typename T>
AttentionLayer<T>::AttentionLayer(std::size_t dim, numerics::Rng& rng)
    : W(xavier<T>(rng, dim, dim)), b(Tensor<T>::zeros({1, dim}, true)) {
  std::vector<T> ctx(dim);
  for (auto& v : ctx) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  context = Tensor<T>({dim, 1}, std::move(ctx), true);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> AttentionLayer<T>::apply(Tape<T>& tape, const Tensor<T>& states,
                                                         const ops::Mask& mask) const {
  auto u = ops::tanh(tape, ops::add(tape, ops::matmul(tape, states, W), b));
  auto scores = ops::transpose(tape, ops::matmul(tape, u, context));
  auto alpha = ops::masked_softmax(tape, scores, mask);
  return {ops::matmul(tape, alpha, states), alpha};
}

template <typename T>
void AttentionLayer<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".W", W, true});
  out.push_back({prefix + ".b", b, true});
  out.push_back({prefix + ".context", context, true});
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, std::size_t input_dim, numerics::Rng& rng)
    : config_(config), input_dim_(input_dim) {
  config_.validate();
  const auto H = config_.hidden_per_direction;
  switch (config_.kind) {
    case EncoderKind::bilstm: lstm_ = BiLstm<T>(input_dim, H, rng); break;
    case EncoderKind::gru: gru_ = BiGru<T>(input_dim, H, rng); break;
    case EncoderKind::han:
      lstm_ = BiLstm<T>(input_dim, H, rng);
      attention_ = AttentionLayer<T>(2 * H, rng);
      break;
    default: break;
  }
}

template <typename T>
EncodedSentence<T> Encoder<T>::encode(Tape<T>& tape, const Tensor<T>& seq,
                                      const ops::Mask& mask) const {
  if (seq.cols() != input_dim_) {
    throw DimensionError("encoder: expected input width " + std::to_string(input_dim_) + ", got " +
                         numerics::shape_string(seq.shape()));
  }
  switch (config_.kind) {
    case EncoderKind::bilstm: return {lstm_.final_states(tape, seq, mask), std::nullopt};
    case EncoderKind::gru: return {gru_.final_states(tape, seq, mask), std::nullopt};
    case EncoderKind::han: {
      auto states = lstm_.run(tape, seq, mask);
      const std::size_t width = 2 * lstm_.hidden();
      const auto pad_row = Tensor<T>::zeros({1, width});
      std::vector<Tensor<T>> rows;
      rows.reserve(seq.rows());
      std::size_t live = 0;
      for (std::size_t t = 0; t < seq.rows(); ++t) {
        if (mask[t]) {
          const std::vector<Tensor<T>> pair{states.forward[live], states.backward[live]};
          rows.push_back(ops::concat<T>(tape, pair, 1));
          ++live;
        } else {
          rows.push_back(pad_row);
        }
      }
      auto stacked = ops::concat<T>(tape, rows, 0);
      auto [vec, alpha] = attention_.apply(tape, stacked, mask);
      return {vec, alpha.values()};
    }
    default: return {pool(tape, seq, mask, config_.strategy()), std::nullopt};
  }
}

template <typename T>
void Encoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  switch (config_.kind) {
    case EncoderKind::bilstm: lstm_.collect(out, prefix + ".bilstm"); break;
    case EncoderKind::gru: gru_.collect(out, prefix + ".gru"); break;
    case EncoderKind::han:
      lstm_.collect(out, prefix + ".bilstm");
      attention_.collect(out, prefix + ".attention");
      break;
    default: break;
  }
}

template Tensor<float> pool(Tape<float>&, const Tensor<float>&, const ops::Mask&, PoolStrategy);
template Tensor<double> pool(Tape<double>&, const Tensor<double>&, const ops::Mask&, PoolStrategy);
template struct AttentionLayer<float>;
template struct AttentionLayer<double>;
template class Encoder<float>;
template class Encoder<double>;

}  // namespace semtag::encoders
