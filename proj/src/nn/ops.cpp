#include "cmr/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cmr/simd/kernels.hpp"

namespace cmr::nn {

namespace {

bool needs_grad(const Node& self, std::size_t i) {
  return self.inputs.size() > i && self.inputs[i] != nullptr && self.inputs[i]->requires_grad;
}

std::vector<Real>& input_grad(Node& self, std::size_t i) { return self.inputs[i]->ensure_grad(); }
const std::vector<Real>& input_value(const Node& self, std::size_t i) { return self.inputs[i]->value; }

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

// In-place stable softmax over one row; returns log-sum-exp.
Real softmax_inplace(Real* row, std::size_t n) {
  const Real m = simd::active().max(row, n);
  Real s = 0;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - m);
    s += row[j];
  }
  const Real inv = Real(1) / s;
  for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
  return m + std::log(s);
}

}  // namespace

std::vector<Real> softmax(std::span<const Real> v) {
  if (v.empty()) throw std::invalid_argument("softmax of an empty vector");
  for (Real x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("softmax input is not finite");
  }
  std::vector<Real> out(v.begin(), v.end());
  softmax_inplace(out.data(), out.size());
  return out;
}

Real cross_entropy(std::span<const Real> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw std::out_of_range("cross_entropy target " + std::to_string(target) + " out of range for " +
                            std::to_string(logits.size()) + " logits");
  }
  for (Real x : logits) {
    if (!std::isfinite(x)) throw std::invalid_argument("cross_entropy logits are not finite");
  }
  const Real m = *std::max_element(logits.begin(), logits.end());
  Real s = 0;
  for (Real x : logits) s += std::exp(x - m);
  return m + std::log(s) - logits[target];
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.values().begin(), a.values().end());
  simd::active().add(b.values().data(), out.data(), out.size());
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (needs_grad(self, i)) simd::active().add(self.grad.data(), input_grad(self, i).data(), self.grad.size());
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = input_value(self, 0);
    const auto& bv = input_value(self, 1);
    if (needs_grad(self, 0)) {
      auto& g = input_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (needs_grad(self, 1)) {
      auto& g = input_grad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, Real s) {
  std::vector<Real> out(a.values().begin(), a.values().end());
  simd::active().scale(s, out.data(), out.size());
  return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
    if (needs_grad(self, 0)) simd::active().axpy(s, self.grad.data(), input_grad(self, 0).data(), self.grad.size());
  });
}

Tensor gelu(const Tensor& x) {
  constexpr Real kInvSqrt2 = Real(1) / std::numbers::sqrt2_v<Real>;
  std::vector<Real> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Real v = x.values()[i];
    out[i] = Real(0.5) * v * (Real(1) + std::erf(v * kInvSqrt2));
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    if (!needs_grad(self, 0)) return;
    constexpr Real kInvSqrt2Pi = std::numbers::inv_sqrtpi_v<Real> / std::numbers::sqrt2_v<Real>;
    const auto& xv = input_value(self, 0);
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real v = xv[i];
      const Real cdf = Real(0.5) * (Real(1) + std::erf(v * kInvSqrt2));
      const Real pdf = kInvSqrt2Pi * std::exp(Real(-0.5) * v * v);
      g[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor sum(const Tensor& x) {
  Real s = 0;
  for (Real v : x.values()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (Real& v : g) v += self.grad[0];
  });
}

Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<Real>& weights) {
  if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: terms/weights size mismatch");
  Real s = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].numel() != 1) throw std::invalid_argument("weighted_sum: every term must be a scalar");
    s += weights[i] * terms[i].values()[0];
  }
  return make_result({1}, {s}, terms, [weights](Node& self) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (needs_grad(self, i)) input_grad(self, i)[0] += weights[i] * self.grad[0];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  std::vector<Real> out(m * n, Real(0));
  simd::gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    if (needs_grad(self, 0)) {
      simd::gemm_nt(self.grad.data(), input_value(self, 1).data(), input_grad(self, 0).data(), m, n, k);
    }
    if (needs_grad(self, 1)) {
      simd::gemm_tn(input_value(self, 0).data(), self.grad.data(), input_grad(self, 1).data(), m, k, n);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank2(x, "linear");
  require_rank2(w, "linear");
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != in) {
    throw std::invalid_argument("linear: input width " + std::to_string(in) + " vs weight " + shape_str(w.shape()));
  }
  if (bias.defined() && bias.numel() != out_dim) {
    throw std::invalid_argument("linear: bias size " + std::to_string(bias.numel()) + " vs " +
                                std::to_string(out_dim));
  }
  std::vector<Real> out(n * out_dim, Real(0));
  if (bias.defined()) {
    for (std::size_t i = 0; i < n; ++i) std::copy(bias.values().begin(), bias.values().end(), out.begin() + i * out_dim);
  }
  simd::gemm_nn(x.values().data(), w.values().data(), out.data(), n, in, out_dim);
  return make_result({n, out_dim}, std::move(out), {x, w, bias}, [n, in, out_dim](Node& self) {
    if (needs_grad(self, 0)) {
      simd::gemm_nt(self.grad.data(), input_value(self, 1).data(), input_grad(self, 0).data(), n, out_dim, in);
    }
    if (needs_grad(self, 1)) {
      simd::gemm_tn(input_value(self, 0).data(), self.grad.data(), input_grad(self, 1).data(), n, in, out_dim);
    }
    if (needs_grad(self, 2)) {
      auto& gb = input_grad(self, 2);
      for (std::size_t i = 0; i < n; ++i) simd::active().add(self.grad.data() + i * out_dim, gb.data(), out_dim);
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<Real> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values()[i * c + j];
  }
  return make_result({c, r}, std::move(out), {x}, [r, c](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require_rank2(x, "layer_norm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gamma.numel() != d || beta.numel() != d) throw std::invalid_argument("layer_norm: gain/shift width mismatch");
  std::vector<Real> xhat(n * d), inv_std(n), out(n * d);
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  for (std::size_t i = 0; i < n; ++i) {
    const Real* row = xv.data() + i * d;
    Real mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= Real(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= Real(d);
    inv_std[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (row[j] - mean) * inv_std[i];
      out[i * d + j] = gv[j] * xhat[i * d + j] + bv[j];
    }
  }
  return make_result({n, d}, std::move(out), {x, gamma, beta},
                     [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& gv = input_value(self, 1);
                       if (needs_grad(self, 1)) {
                         auto& gg = input_grad(self, 1);
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < d; ++j) gg[j] += self.grad[i * d + j] * xhat[i * d + j];
                       }
                       if (needs_grad(self, 2)) {
                         auto& gb = input_grad(self, 2);
                         for (std::size_t i = 0; i < n; ++i) simd::active().add(self.grad.data() + i * d, gb.data(), d);
                       }
                       if (!needs_grad(self, 0)) return;
                       auto& gx = input_grad(self, 0);
                       std::vector<Real> dxhat(d);
                       for (std::size_t i = 0; i < n; ++i) {
                         Real mean_d = 0, mean_dx = 0;
                         for (std::size_t j = 0; j < d; ++j) {
                           dxhat[j] = self.grad[i * d + j] * gv[j];
                           mean_d += dxhat[j];
                           mean_dx += dxhat[j] * xhat[i * d + j];
                         }
                         mean_d /= Real(d);
                         mean_dx /= Real(d);
                         for (std::size_t j = 0; j < d; ++j) {
                           gx[i * d + j] += inv_std[i] * (dxhat[j] - mean_d - xhat[i * d + j] * mean_dx);
                         }
                       }
                     });
}

Tensor dropout(const Tensor& x, Real p, bool training, Rng& rng) {
  if (p < Real(0) || p >= Real(1)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!training || p == Real(0)) return x;
  const Real keep_scale = Real(1) / (Real(1) - p);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Real> mask(x.numel());
  std::vector<Real> out(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = unif(rng) < double(p) ? Real(0) : keep_scale;
    out[i] = x.values()[i] * mask[i];
  }
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids) {
  require_rank2(table, "embedding");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw std::out_of_range("embedding id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(vocab) + " rows");
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
  }
  std::vector<Real> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(table.values().data() + rows[i] * d, d, out.begin() + i * d);
  }
  const std::size_t n = rows.size();
  return make_result({n, d}, std::move(out), {table}, [rows = std::move(rows), d](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) simd::active().add(self.grad.data() + i * d, g.data() + rows[i] * d, d);
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank2(x, "gather_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<Real> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) throw std::out_of_range("gather_rows index out of range");
    std::copy_n(x.values().data() + rows[i] * d, d, out.begin() + i * d);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const std::size_t m = idx.size();
  return make_result({m, d}, std::move(out), {x}, [idx = std::move(idx), d](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < idx.size(); ++i) simd::active().add(self.grad.data() + i * d, g.data() + idx[i] * d, d);
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  if (begin > end || end > x.dim(0)) throw std::out_of_range("slice_rows range out of bounds");
  const std::size_t d = x.dim(1);
  std::vector<Real> out(x.values().begin() + begin * d, x.values().begin() + end * d);
  return make_result({end - begin, d}, std::move(out), {x}, [begin, d](Node& self) {
    if (!needs_grad(self, 0)) return;
    simd::active().add(self.grad.data(), input_grad(self, 0).data() + begin * d, self.grad.size());
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows of nothing");
  const std::size_t d = parts.front().cols();
  std::size_t n = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.dim(1) != d) throw std::invalid_argument("concat_rows: width mismatch");
    n += p.dim(0);
  }
  std::vector<Real> out;
  out.reserve(n * d);
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result({n, d}, std::move(out), parts, [offsets = std::move(offsets)](Node& self) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (!needs_grad(self, i)) continue;
      auto& g = input_grad(self, i);
      simd::active().add(self.grad.data() + offsets[i], g.data(), g.size());
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (a.dim(0) != b.dim(0)) throw std::invalid_argument("concat_cols: row count mismatch");
  const std::size_t n = a.dim(0), da = a.dim(1), db = b.dim(1);
  std::vector<Real> out(n * (da + db));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.values().data() + i * da, da, out.begin() + i * (da + db));
    std::copy_n(b.values().data() + i * db, db, out.begin() + i * (da + db) + da);
  }
  return make_result({n, da + db}, std::move(out), {a, b}, [n, da, db](Node& self) {
    const std::size_t w = da + db;
    if (needs_grad(self, 0)) {
      auto& g = input_grad(self, 0);
      for (std::size_t i = 0; i < n; ++i) simd::active().add(self.grad.data() + i * w, g.data() + i * da, da);
    }
    if (needs_grad(self, 1)) {
      auto& g = input_grad(self, 1);
      for (std::size_t i = 0; i < n; ++i) simd::active().add(self.grad.data() + i * w + da, g.data() + i * db, db);
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank2(x, "softmax_rows");
  const std::size_t n = x.dim(0), c = x.dim(1);
  std::vector<Real> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < n; ++i) softmax_inplace(out.data() + i * c, c);
  return make_result({n, c}, out, {x}, [n, c, y = out](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Real* yr = y.data() + i * c;
      const Real* dy = self.grad.data() + i * c;
      const Real inner = simd::active().dot(dy, yr, c);
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += yr[j] * (dy[j] - inner);
    }
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 const std::vector<bool>& key_mask) {
  require_rank2(q, "attention");
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const std::size_t n = q.dim(0), d = q.dim(1);
  if (heads == 0 || d % heads != 0) throw std::invalid_argument("attention: width not divisible by heads");
  if (key_mask.size() != n) throw std::invalid_argument("attention: mask length mismatch");
  std::vector<std::size_t> keys;
  for (std::size_t j = 0; j < n; ++j) {
    if (key_mask[j]) keys.push_back(j);
  }
  if (keys.empty()) throw std::invalid_argument("attention: every position is masked");

  const std::size_t dh = d / heads;
  const Real inv_sqrt = Real(1) / std::sqrt(Real(dh));
  const std::size_t nk = keys.size();
  const auto& kt = simd::active();
  const Real* qv = q.values().data();
  const Real* kv = k.values().data();
  const Real* vv = v.values().data();

  // probs[h][i][jj] over kept keys only.
  std::vector<Real> probs(heads * n * nk);
  std::vector<Real> out(n * d, Real(0));
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      Real* p = probs.data() + (h * n + i) * nk;
      for (std::size_t jj = 0; jj < nk; ++jj) p[jj] = kt.dot(qv + i * d + off, kv + keys[jj] * d + off, dh) * inv_sqrt;
      softmax_inplace(p, nk);
      Real* o = out.data() + i * d + off;
      for (std::size_t jj = 0; jj < nk; ++jj) kt.axpy(p[jj], vv + keys[jj] * d + off, o, dh);
    }
  }

  return make_result(
      {n, d}, std::move(out), {q, k, v},
      [n, d, heads, dh, nk, inv_sqrt, keys = std::move(keys), probs = std::move(probs)](Node& self) {
        const auto& kt = simd::active();
        const Real* qv = input_value(self, 0).data();
        const Real* kv = input_value(self, 1).data();
        const Real* vv = input_value(self, 2).data();
        Real* gq = needs_grad(self, 0) ? input_grad(self, 0).data() : nullptr;
        Real* gk = needs_grad(self, 1) ? input_grad(self, 1).data() : nullptr;
        Real* gv = needs_grad(self, 2) ? input_grad(self, 2).data() : nullptr;
        std::vector<Real> dp(nk);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * dh;
          for (std::size_t i = 0; i < n; ++i) {
            const Real* p = probs.data() + (h * n + i) * nk;
            const Real* go = self.grad.data() + i * d + off;
            Real inner = 0;
            for (std::size_t jj = 0; jj < nk; ++jj) {
              if (gv != nullptr) kt.axpy(p[jj], go, gv + keys[jj] * d + off, dh);
              dp[jj] = kt.dot(go, vv + keys[jj] * d + off, dh);
              inner += p[jj] * dp[jj];
            }
            for (std::size_t jj = 0; jj < nk; ++jj) {
              const Real ds = p[jj] * (dp[jj] - inner) * inv_sqrt;
              if (gq != nullptr) kt.axpy(ds, kv + keys[jj] * d + off, gq + i * d + off, dh);
              if (gk != nullptr) kt.axpy(ds, qv + i * d + off, gk + keys[jj] * d + off, dh);
            }
          }
        }
      });
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets) {
  require_rank2(logits, "cross_entropy_rows");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (targets.size() != n) {
    throw std::invalid_argument("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for " +
                                std::to_string(n) + " rows");
  }
  std::vector<Real> probs(logits.values().begin(), logits.values().end());
  Real loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= c) throw std::out_of_range("cross_entropy_rows: target out of range");
    const Real lse = softmax_inplace(probs.data() + i * c, c);
    loss += lse - logits.values()[i * c + targets[i]];
  }
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return make_result({1}, {loss}, {logits}, [c, probs = std::move(probs), tgt = std::move(tgt)](Node& self) {
    if (!needs_grad(self, 0)) return;
    auto& g = input_grad(self, 0);
    const Real up = self.grad[0];
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += up * (probs[i * c + j] - (j == tgt[i] ? Real(1) : Real(0)));
    }
  });
}

}  // namespace cmr::nn
