// semivox/graph.cpp

// Copyright 2026  Semivox Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "semivox/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "semivox/kernels.hpp"

namespace semivox {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

NodeP Graph::make(Tensor v, bool needs_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->needs_grad = needs_grad;
  return n;
}

NodeP Graph::constant(Tensor v) { return make(std::move(v), false); }

NodeP Graph::leaf(Tensor v) { return make(std::move(v), true); }

NodeP Graph::matmul(NodeP a, NodeP b) {
  const std::size_t m = a->value.rows(), k = a->value.cols();
  check_shape(b->value.rows() == k, "matmul inner dim");
  const std::size_t n = b->value.cols();
  Tensor out({m, n});
  kernels::matmul(a->value.data.data(), b->value.data.data(), out.data.data(),
                  m, k, n);
  NodeP c = make(std::move(out), a->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  record([a, b, c, m, k, n] {
    if (a->needs_grad) {
      a->ensure_grad();
      Tensor da({m, k});
      kernels::matmul_bt(c->grad.data.data(), b->value.data.data(),
                         da.data.data(), m, n, k);
      for (std::size_t i = 0; i < da.numel(); ++i) a->grad.data[i] += da.data[i];
    }
    if (b->needs_grad) {
      b->ensure_grad();
      Tensor db({k, n});
      kernels::matmul_at(a->value.data.data(), c->grad.data.data(),
                         db.data.data(), k, m, n);
      for (std::size_t i = 0; i < db.numel(); ++i) b->grad.data[i] += db.data[i];
    }
  });
  return c;
}

NodeP Graph::matmul_nt(NodeP a, NodeP b) {
  const std::size_t m = a->value.rows(), k = a->value.cols();
  check_shape(b->value.cols() == k, "matmul_nt inner dim");
  const std::size_t n = b->value.rows();
  Tensor out({m, n});
  kernels::matmul_bt(a->value.data.data(), b->value.data.data(),
                     out.data.data(), m, k, n);
  NodeP c = make(std::move(out), a->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  record([a, b, c, m, k, n] {
    if (a->needs_grad) {
      a->ensure_grad();
      Tensor da({m, k});
      kernels::matmul(c->grad.data.data(), b->value.data.data(),
                      da.data.data(), m, n, k);
      for (std::size_t i = 0; i < da.numel(); ++i) a->grad.data[i] += da.data[i];
    }
    if (b->needs_grad) {
      b->ensure_grad();
      Tensor db({n, k});
      kernels::matmul_at(c->grad.data.data(), a->value.data.data(),
                         db.data.data(), n, m, k);
      for (std::size_t i = 0; i < db.numel(); ++i) b->grad.data[i] += db.data[i];
    }
  });
  return c;
}

NodeP Graph::add(NodeP a, NodeP b) {
  check_shape(a->value.same_shape(b->value), "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += b->value.data[i];
  NodeP c = make(std::move(out), a->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  record([a, b, c] {
    if (a->needs_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        a->grad.data[i] += c->grad.data[i];
    }
    if (b->needs_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        b->grad.data[i] += c->grad.data[i];
    }
  });
  return c;
}

NodeP Graph::sub(NodeP a, NodeP b) {
  check_shape(a->value.same_shape(b->value), "sub");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= b->value.data[i];
  NodeP c = make(std::move(out), a->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  record([a, b, c] {
    if (a->needs_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        a->grad.data[i] += c->grad.data[i];
    }
    if (b->needs_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        b->grad.data[i] -= c->grad.data[i];
    }
  });
  return c;
}

NodeP Graph::add_row_vector(NodeP x, NodeP v) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  check_shape(v->value.numel() == n, "add_row_vector width");
  Tensor out = x->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += v->value.data[j];
  NodeP c = make(std::move(out), x->needs_grad || v->needs_grad);
  if (!c->needs_grad) return c;
  record([x, v, c, m, n] {
    if (x->needs_grad) {
      x->ensure_grad();
      for (std::size_t i = 0; i < m * n; ++i) x->grad.data[i] += c->grad.data[i];
    }
    if (v->needs_grad) {
      v->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          v->grad.data[j] += c->grad.data[i * n + j];
    }
  });
  return c;
}

NodeP Graph::hadamard(NodeP a, NodeP b) {
  check_shape(a->value.same_shape(b->value), "hadamard");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= b->value.data[i];
  NodeP c = make(std::move(out), a->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  record([a, b, c] {
    if (a->needs_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        a->grad.data[i] += c->grad.data[i] * b->value.data[i];
    }
    if (b->needs_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < c->grad.numel(); ++i)
        b->grad.data[i] += c->grad.data[i] * a->value.data[i];
    }
  });
  return c;
}

NodeP Graph::scale(NodeP a, double s) { return affine(a, s, 0.0); }

NodeP Graph::affine(NodeP a, double mul, double add) {
  Tensor out = a->value;
  for (auto& x : out.data) x = mul * x + add;
  NodeP c = make(std::move(out), a->needs_grad);
  if (!c->needs_grad) return c;
  record([a, c, mul] {
    a->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i)
      a->grad.data[i] += mul * c->grad.data[i];
  });
  return c;
}

NodeP Graph::gelu(NodeP x) {
  Tensor out = x->value;
  for (auto& v : out.data) {
    v = v * 0.5 * (1.0 + std::erf(v * kInvSqrt2));
  }
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c] {
    x->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i) {
      const double v = x->value.data[i];
      const double phi = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      x->grad.data[i] += c->grad.data[i] * (phi + v * pdf);
    }
  });
  return c;
}

NodeP Graph::relu(NodeP x) {
  Tensor out = x->value;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c] {
    x->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i) {
      if (x->value.data[i] > 0.0) x->grad.data[i] += c->grad.data[i];
    }
  });
  return c;
}

NodeP Graph::log_el(NodeP x) {
  Tensor out = x->value;
  for (auto& v : out.data) v = std::log(v);
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c] {
    x->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i)
      x->grad.data[i] += c->grad.data[i] / x->value.data[i];
  });
  return c;
}

NodeP Graph::exp_el(NodeP x) {
  Tensor out = x->value;
  for (auto& v : out.data) v = std::exp(v);
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c] {
    x->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i)
      x->grad.data[i] += c->grad.data[i] * c->value.data[i];
  });
  return c;
}

NodeP Graph::layer_norm(NodeP x, NodeP gamma, NodeP beta, double eps) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  check_shape(gamma->value.numel() == n && beta->value.numel() == n,
              "layer_norm width");
  Tensor out({m, n});
  // keep normalized rows and inverse sigma for backward
  auto xhat = std::make_shared<Tensor>(Tensor({m, n}));
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = &x->value.data[i * n];
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xi[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (xi[j] - mu) * is;
      xhat->data[i * n + j] = xh;
      out.data[i * n + j] = gamma->value.data[j] * xh + beta->value.data[j];
    }
  }
  NodeP c = make(std::move(out),
                 x->needs_grad || gamma->needs_grad || beta->needs_grad);
  if (!c->needs_grad) return c;
  record([x, gamma, beta, c, xhat, inv_sigma, m, n] {
    for (std::size_t i = 0; i < m; ++i) {
      const double* dy = &c->grad.data[i * n];
      const double* xh = &xhat->data[i * n];
      if (gamma->needs_grad) {
        gamma->ensure_grad();
        for (std::size_t j = 0; j < n; ++j)
          gamma->grad.data[j] += dy[j] * xh[j];
      }
      if (beta->needs_grad) {
        beta->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) beta->grad.data[j] += dy[j];
      }
      if (x->needs_grad) {
        x->ensure_grad();
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double g = dy[j] * gamma->value.data[j];
          sum_g += g;
          sum_gx += g * xh[j];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          const double g = dy[j] * gamma->value.data[j];
          x->grad.data[i * n + j] +=
              (*inv_sigma)[i] * (g - inv_n * sum_g - xh[j] * inv_n * sum_gx);
        }
      }
    }
  });
  return c;
}

NodeP Graph::softmax_rows(NodeP x) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  Tensor out({m, n});
  kernels::softmax_rows(x->value.data.data(), out.data.data(), m, n);
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, m, n] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = &c->value.data[i * n];
      const double* dy = &c->grad.data[i * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j)
        x->grad.data[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
  return c;
}

NodeP Graph::log_softmax_rows(NodeP x) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  Tensor out({m, n});
  kernels::log_softmax_rows(x->value.data.data(), out.data.data(), m, n);
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, m, n] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = &c->value.data[i * n];
      const double* dy = &c->grad.data[i * n];
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += dy[j];
      for (std::size_t j = 0; j < n; ++j)
        x->grad.data[i * n + j] += dy[j] - std::exp(y[j]) * sum;
    }
  });
  return c;
}

NodeP Graph::conv1d(NodeP x, NodeP w, NodeP b, int stride) {
  const std::size_t t = x->value.rows(), ci = x->value.cols();
  check_shape(w->value.shape.size() == 3, "conv1d weight rank");
  const std::size_t co = w->value.shape[0];
  check_shape(w->value.shape[1] == ci, "conv1d in-channels");
  const std::size_t kernel = w->value.shape[2];
  check_shape(b->value.numel() == co, "conv1d bias");
  if (t < kernel) throw std::invalid_argument("conv1d: input shorter than kernel");
  const std::size_t t_out = (t - kernel) / static_cast<std::size_t>(stride) + 1;
  Tensor out({t_out, co});
  kernels::conv1d(x->value.data.data(), t, ci, w->value.data.data(), co,
                  kernel, static_cast<std::size_t>(stride),
                  b->value.data.data(), out.data.data(), t_out);
  NodeP c = make(std::move(out),
                 x->needs_grad || w->needs_grad || b->needs_grad);
  if (!c->needs_grad) return c;
  const auto ustride = static_cast<std::size_t>(stride);
  record([x, w, b, c, t, ci, co, kernel, ustride, t_out] {
    if (x->needs_grad) {
      x->ensure_grad();
      kernels::conv1d_grad_x(c->grad.data.data(), w->value.data.data(),
                             x->grad.data.data(), t, ci, co, kernel, ustride,
                             t_out);
    }
    if (w->needs_grad || b->needs_grad) {
      w->ensure_grad();
      b->ensure_grad();
      kernels::conv1d_grad_w(c->grad.data.data(), x->value.data.data(),
                             w->grad.data.data(),
                             b->needs_grad ? b->grad.data.data() : nullptr, t,
                             ci, co, kernel, ustride, t_out);
    }
  });
  return c;
}

NodeP Graph::slice_cols(NodeP x, std::size_t c0, std::size_t c1) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  check_shape(c0 < c1 && c1 <= n, "slice_cols range");
  const std::size_t w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j)
      out.data[i * w + j] = x->value.data[i * n + c0 + j];
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, m, n, c0, w] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j)
        x->grad.data[i * n + c0 + j] += c->grad.data[i * w + j];
  });
  return c;
}

NodeP Graph::concat_cols(const std::vector<NodeP>& parts) {
  check_shape(!parts.empty(), "concat_cols empty");
  const std::size_t m = parts[0]->value.rows();
  std::size_t n = 0;
  bool needs = false;
  for (const auto& p : parts) {
    check_shape(p->value.rows() == m, "concat_cols rows");
    n += p->value.cols();
    needs = needs || p->needs_grad;
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p->value.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out.data[i * n + off + j] = p->value.data[i * w + j];
    off += w;
  }
  NodeP c = make(std::move(out), needs);
  if (!c->needs_grad) return c;
  auto parts_copy = parts;
  record([parts_copy, c, m, n] {
    std::size_t off = 0;
    for (const auto& p : parts_copy) {
      const std::size_t w = p->value.cols();
      if (p->needs_grad) {
        p->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j)
            p->grad.data[i * w + j] += c->grad.data[i * n + off + j];
      }
      off += w;
    }
  });
  return c;
}

NodeP Graph::gather_rows(NodeP x, std::vector<std::size_t> idx) {
  const std::size_t n = x->value.cols();
  Tensor out({idx.size(), n});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    check_shape(idx[i] < x->value.rows(), "gather_rows index");
    for (std::size_t j = 0; j < n; ++j)
      out.data[i * n + j] = x->value.data[idx[i] * n + j];
  }
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, idx = std::move(idx), n] {
    x->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j)
        x->grad.data[idx[i] * n + j] += c->grad.data[i * n + j];
  });
  return c;
}

NodeP Graph::mask_rows(NodeP x, NodeP embed, const std::vector<char>& row_mask) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  check_shape(embed->value.numel() == n, "mask_rows embed width");
  check_shape(row_mask.size() == m, "mask_rows mask length");
  Tensor out = x->value;
  for (std::size_t i = 0; i < m; ++i) {
    if (!row_mask[i]) continue;
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] = embed->value.data[j];
  }
  NodeP c = make(std::move(out), x->needs_grad || embed->needs_grad);
  if (!c->needs_grad) return c;
  record([x, embed, c, row_mask, m, n] {
    if (x->needs_grad) {
      x->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (row_mask[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
          x->grad.data[i * n + j] += c->grad.data[i * n + j];
      }
    }
    if (embed->needs_grad) {
      embed->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        if (!row_mask[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
          embed->grad.data[j] += c->grad.data[i * n + j];
      }
    }
  });
  return c;
}

NodeP Graph::zero_cols(NodeP x, const std::vector<char>& col_mask) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  check_shape(col_mask.size() == n, "zero_cols mask length");
  Tensor out = x->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (col_mask[j]) out.data[i * n + j] = 0.0;
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, col_mask, m, n] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!col_mask[j]) x->grad.data[i * n + j] += c->grad.data[i * n + j];
  });
  return c;
}

NodeP Graph::dropout(NodeP x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  check_shape(rate < 1.0, "dropout rate");
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<char>>(x->value.numel());
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const bool k = rng.uniform01() >= rate;
    (*mask)[i] = k ? 1 : 0;
    out.data[i] = k ? out.data[i] / keep : 0.0;
  }
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, mask, keep] {
    x->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i)
      if ((*mask)[i]) x->grad.data[i] += c->grad.data[i] / keep;
  });
  return c;
}

NodeP Graph::normalize_rows(NodeP x, double eps) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  Tensor out({m, n});
  auto inv_r = std::make_shared<std::vector<double>>(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = x->value.data[i * n + j];
      ss += v * v;
    }
    const double r = std::sqrt(ss + eps);
    (*inv_r)[i] = 1.0 / r;
    for (std::size_t j = 0; j < n; ++j)
      out.data[i * n + j] = x->value.data[i * n + j] / r;
  }
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, inv_r, m, n] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = &c->value.data[i * n];
      const double* dy = &c->grad.data[i * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j)
        x->grad.data[i * n + j] += (*inv_r)[i] * (dy[j] - y[j] * dot);
    }
  });
  return c;
}

NodeP Graph::mean_rows(NodeP x) {
  const std::size_t m = x->value.rows(), n = x->value.cols();
  Tensor out({static_cast<std::size_t>(1), n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data[j] += x->value.data[i * n + j];
  const double inv_m = 1.0 / static_cast<double>(m);
  for (auto& v : out.data) v *= inv_m;
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, m, n, inv_m] {
    x->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        x->grad.data[i * n + j] += c->grad.data[j] * inv_m;
  });
  return c;
}

NodeP Graph::sum_all(NodeP x) {
  Tensor out({static_cast<std::size_t>(1)});
  for (double v : x->value.data) out.data[0] += v;
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c] {
    x->ensure_grad();
    for (auto& g : x->grad.data) g += c->grad.data[0];
  });
  return c;
}

NodeP Graph::mean_all(NodeP x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x->value.numel()));
}

NodeP Graph::pick(NodeP x, std::size_t i, std::size_t j) {
  const std::size_t n = x->value.cols();
  check_shape(i < x->value.rows() && j < n, "pick index");
  Tensor out({static_cast<std::size_t>(1)});
  out.data[0] = x->value.data[i * n + j];
  NodeP c = make(std::move(out), x->needs_grad);
  if (!c->needs_grad) return c;
  record([x, c, i, j, n] {
    x->ensure_grad();
    x->grad.data[i * n + j] += c->grad.data[0];
  });
  return c;
}

NodeP Graph::straight_through(NodeP soft, Tensor hard) {
  check_shape(soft->value.same_shape(hard), "straight_through shape");
  NodeP c = make(std::move(hard), soft->needs_grad);
  if (!c->needs_grad) return c;
  record([soft, c] {
    soft->ensure_grad();
    for (std::size_t i = 0; i < c->grad.numel(); ++i)
      soft->grad.data[i] += c->grad.data[i];
  });
  return c;
}

NodeP Graph::custom_scalar(NodeP input, double value, Tensor grad_wrt_input) {
  check_shape(grad_wrt_input.same_shape(input->value), "custom_scalar grad");
  Tensor out({static_cast<std::size_t>(1)});
  out.data[0] = value;
  NodeP c = make(std::move(out), input->needs_grad);
  if (!c->needs_grad) return c;
  auto grad = std::make_shared<Tensor>(std::move(grad_wrt_input));
  record([input, c, grad] {
    input->ensure_grad();
    const double up = c->grad.data[0];
    for (std::size_t i = 0; i < grad->numel(); ++i)
      input->grad.data[i] += up * grad->data[i];
  });
  return c;
}

void Graph::backward(NodeP root) {
  if (root->value.numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar");
  }
  root->ensure_grad();
  root->grad.data[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace semivox
