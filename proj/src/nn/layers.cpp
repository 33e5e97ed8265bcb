#include "cmr/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace cmr::nn {

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw std::invalid_argument("d_model must be a positive multiple of n_heads");
  }
  if (!(dropout_rate >= Real(0) && dropout_rate < Real(1))) throw std::invalid_argument("dropout_rate must be in [0,1)");
  if (!(lambda_entail > Real(0))) throw std::invalid_argument("lambda_entail must be positive");
  if (max_sequence_length == 0) throw std::invalid_argument("max_sequence_length must be positive");
  if (d_ff == 0) throw std::invalid_argument("d_ff must be positive");
}

Tensor ParameterSet::add(const std::string& name, Shape shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor t = Tensor::zeros(std::move(shape), true);
  t.grad();
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return true;
  }
  return false;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& entry : entries_) n += entry.second.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& entry : entries_) entry.second.zero_grad();
}

void init_uniform(Tensor& t, Real bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-double(bound), double(bound));
  for (Real& v : t.values()) v = Real(dist(rng));
}

void init_normal(Tensor& t, Real stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, double(stddev));
  for (Real& v : t.values()) v = Real(dist(rng));
}

void init_constant(Tensor& t, Real value) {
  for (Real& v : t.values()) v = value;
}

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, bool with_bias) {
  weight = params.add(name + ".weight", {in, out});
  if (with_bias) bias = params.add(name + ".bias", {out});
}

void Linear::reset(Rng& rng) {
  const Real bound = Real(1) / std::sqrt(Real(weight.dim(0)));
  init_uniform(weight, bound, rng);
  if (bias.defined()) init_constant(bias, 0);
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::size_t width) {
  gain = params.add(name + ".gain", {width});
  shift = params.add(name + ".shift", {width});
  reset();
}

void LayerNorm::reset() {
  init_constant(gain, 1);
  init_constant(shift, 0);
}

MultiHeadSelfAttention::MultiHeadSelfAttention(ParameterSet& params, const std::string& name, std::size_t d_model,
                                               std::size_t n_heads)
    : query(params, name + ".query", d_model, d_model),
      key(params, name + ".key", d_model, d_model),
      value(params, name + ".value", d_model, d_model),
      output(params, name + ".output", d_model, d_model),
      heads(n_heads) {}

void MultiHeadSelfAttention::reset(Rng& rng) {
  query.reset(rng);
  key.reset(rng);
  value.reset(rng);
  output.reset(rng);
}

Tensor MultiHeadSelfAttention::operator()(const Tensor& x, const std::vector<bool>& mask) const {
  Tensor ctx = attention(query(x), key(x), value(x), heads, mask);
  return output(ctx);
}

TransformerLayer::TransformerLayer(ParameterSet& params, const std::string& name, const ModelConfig& config)
    : attention(params, name + ".attn", config.d_model, config.n_heads),
      attention_norm(params, name + ".attn_norm", config.d_model),
      ff_in(params, name + ".ff_in", config.d_model, config.d_ff),
      ff_out(params, name + ".ff_out", config.d_ff, config.d_model),
      ff_norm(params, name + ".ff_norm", config.d_model),
      dropout_rate(config.dropout_rate) {}

void TransformerLayer::reset(Rng& rng) {
  attention.reset(rng);
  attention_norm.reset();
  ff_in.reset(rng);
  ff_out.reset(rng);
  ff_norm.reset();
}

Tensor TransformerLayer::operator()(const Tensor& x, const std::vector<bool>& mask, const Mode& mode) const {
  if (x.rank() != 2 || x.dim(1) != attention.query.weight.dim(0)) {
    throw std::invalid_argument("transformer layer: input shape " + shape_str(x.shape()) + " does not match width " +
                                std::to_string(attention.query.weight.dim(0)));
  }
  if (mode.training && dropout_rate > 0 && mode.rng == nullptr) {
    throw std::invalid_argument("transformer layer: training mode needs an rng");
  }
  // Never drawn from outside training.
  static thread_local Rng unused;
  Rng& r = mode.rng != nullptr ? *mode.rng : unused;
  Tensor h = attention_norm(add(x, dropout(attention(x, mask), dropout_rate, mode.training, r)));
  Tensor f = ff_out(gelu(ff_in(h)));
  return ff_norm(add(h, dropout(f, dropout_rate, mode.training, r)));
}

TransformerStack::TransformerStack(ParameterSet& params, const std::string& name, const ModelConfig& config,
                                   std::size_t layers) {
  layers_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) layers_.emplace_back(params, name + "." + std::to_string(i), config);
}

void TransformerStack::reset(Rng& rng) {
  for (auto& layer : layers_) layer.reset(rng);
}

Tensor TransformerStack::operator()(Tensor x, const std::vector<bool>& mask, const Mode& mode) const {
  for (const auto& layer : layers_) x = layer(x, mask, mode);
  return x;
}

}  // namespace cmr::nn
