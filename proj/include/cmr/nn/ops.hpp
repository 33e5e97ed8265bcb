#pragma once

// Differentiable ops over row-major matrices. Unless noted, a "matrix" is a
// tensor of rank 2 and a "row vector" has shape {1, n} or {n}.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cmr/nn/tensor.hpp"

namespace cmr::nn {

using Rng = std::mt19937_64;

// Plain (non-recorded) helpers.
std::vector<Real> softmax(std::span<const Real> v);
Real cross_entropy(std::span<const Real> logits, std::size_t target);

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real s);
Tensor gelu(const Tensor& x);

// Reductions to a scalar tensor of shape {1}.
Tensor sum(const Tensor& x);
// sum_i weights[i] * terms[i]; every term must be a scalar tensor.
Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<Real>& weights);

// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x[n x in] * w[in x out] + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
Tensor transpose(const Tensor& x);

// Per-row layer normalization with learned gain and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = Real(1e-5));

// Inverted dropout: kept activations are scaled by 1/(1-p). Identity when
// training is false or p == 0.
Tensor dropout(const Tensor& x, Real p, bool training, Rng& rng);

// Rows table[ids[i]] -> {ids.size(), table.cols()}.
Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const Tensor& a, const Tensor& b);

Tensor softmax_rows(const Tensor& x);

// Scaled dot-product attention over `heads` heads of width d/heads.
// key_mask[j] == false removes key j for every query. Throws when every key is
// masked. Returns {n x d}.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 const std::vector<bool>& key_mask);

// Sum over rows of -log softmax(logits[r])[targets[r]], shape {1}.
Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets);

}  // namespace cmr::nn
