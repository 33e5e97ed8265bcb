#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cmr/nn/ops.hpp"
#include "cmr/nn/tensor.hpp"

namespace cmr::nn {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t n_encoder_layers = 2;
  std::size_t n_inter_layers = 2;  // L
  Real dropout_rate = Real(0.35);
  std::size_t max_sequence_length = 256;
  std::size_t vocab_size = 0;
  Real lambda_entail = Real(3.0);  // lambda

  // Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

// Named, ordered collection of trainable tensors.
class ParameterSet {
 public:
  Tensor add(const std::string& name, Shape shape);
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t total_size() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

void init_uniform(Tensor& t, Real bound, Rng& rng);
void init_normal(Tensor& t, Real stddev, Rng& rng);
void init_constant(Tensor& t, Real value);

// Forward-pass context. Dropout draws from rng only when training.
struct Mode {
  bool training = false;
  Rng* rng = nullptr;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, bool bias = true);
  void reset(Rng& rng);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }

  Tensor weight;  // {in, out}
  Tensor bias;    // {out}
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, std::size_t width);
  void reset();
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, shift); }

  Tensor gain;
  Tensor shift;
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterSet& params, const std::string& name, std::size_t d_model, std::size_t heads);
  void reset(Rng& rng);
  // mask[j] == false hides position j from every query.
  Tensor operator()(const Tensor& x, const std::vector<bool>& mask) const;

  Linear query, key, value, output;
  std::size_t heads = 1;
};

// Post-norm encoder block: LN(x + drop(attn(x))) then LN(h + drop(ffn(h))).
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParameterSet& params, const std::string& name, const ModelConfig& config);
  void reset(Rng& rng);
  Tensor operator()(const Tensor& x, const std::vector<bool>& mask, const Mode& mode) const;

  MultiHeadSelfAttention attention;
  LayerNorm attention_norm;
  Linear ff_in, ff_out;
  LayerNorm ff_norm;
  Real dropout_rate = 0;
};

class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(ParameterSet& params, const std::string& name, const ModelConfig& config, std::size_t layers);
  void reset(Rng& rng);
  Tensor operator()(Tensor x, const std::vector<bool>& mask, const Mode& mode) const;
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<TransformerLayer> layers_;
};

}  // namespace cmr::nn
