// semivox/kernels.cpp

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

#include "semivox/kernels.hpp"

#include <cmath>
#include <cstring>

namespace semivox::kernels {

namespace {

// One output row of a matmul. The k loop is ascending in both the serial
// and parallel versions so partial sums round identically.
inline void matmul_row(const double* a, const double* b, double* c,
                       std::size_t i, std::size_t k, std::size_t n) {
  double* ci = c + i * n;
  std::memset(ci, 0, n * sizeof(double));
  const double* ai = a + i * k;
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double aik = ai[kk];
    const double* bk = b + kk * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
  }
}

inline void matmul_at_row(const double* a, const double* b, double* c,
                          std::size_t i, std::size_t m, std::size_t k,
                          std::size_t n) {
  double* ci = c + i * n;
  std::memset(ci, 0, n * sizeof(double));
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double aik = a[kk * m + i];
    const double* bk = b + kk * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
  }
}

inline void matmul_bt_row(const double* a, const double* b, double* c,
                          std::size_t i, std::size_t k, std::size_t n) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double acc = 0.0;
    for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
    ci[j] = acc;
  }
}

inline void conv1d_frame(const double* x, std::size_t ci, const double* w,
                         std::size_t co, std::size_t kernel,
                         std::size_t stride, const double* bias, double* y,
                         std::size_t t_idx) {
  const double* xt = x + t_idx * stride * ci;
  double* yt = y + t_idx * co;
  for (std::size_t o = 0; o < co; ++o) {
    double acc = bias ? bias[o] : 0.0;
    const double* wo = w + o * ci * kernel;
    for (std::size_t c = 0; c < ci; ++c) {
      for (std::size_t j = 0; j < kernel; ++j) {
        acc += xt[j * ci + c] * wo[c * kernel + j];
      }
    }
    yt[o] = acc;
  }
}

inline void softmax_row(const double* x, double* y, std::size_t cols,
                        bool log_space) {
  double mx = x[0];
  for (std::size_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
  double sum = 0.0;
  for (std::size_t j = 0; j < cols; ++j) sum += std::exp(x[j] - mx);
  if (log_space) {
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < cols; ++j) y[j] = x[j] - lse;
  } else {
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) y[j] = std::exp(x[j] - mx) * inv;
  }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    matmul_row(a, b, c, static_cast<std::size_t>(i), k, n);
  }
}

void matmul_at(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    matmul_at_row(a, b, c, static_cast<std::size_t>(i), m, k, n);
  }
}

void matmul_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    matmul_bt_row(a, b, c, static_cast<std::size_t>(i), k, n);
  }
}

void conv1d(const double* x, std::size_t /*t*/, std::size_t ci,
            const double* w, std::size_t co, std::size_t kernel,
            std::size_t stride, const double* bias, double* y,
            std::size_t t_out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(t_out); ++ti) {
    conv1d_frame(x, ci, w, co, kernel, stride, bias, y,
                 static_cast<std::size_t>(ti));
  }
}

void conv1d_grad_x(const double* dy, const double* w, double* dx,
                   std::size_t t, std::size_t ci, std::size_t co,
                   std::size_t kernel, std::size_t stride, std::size_t t_out) {
  // Each input sample receives contributions from a bounded set of output
  // frames; iterating over input positions keeps writes disjoint.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t tau = 0; tau < static_cast<std::ptrdiff_t>(t); ++tau) {
    for (std::size_t c = 0; c < ci; ++c) {
      double acc = 0.0;
      // frames ti with ti*stride <= tau < ti*stride + kernel
      const std::size_t u = static_cast<std::size_t>(tau);
      std::size_t ti_lo = (u >= kernel - 1) ? (u - (kernel - 1) + stride - 1) / stride : 0;
      for (std::size_t ti = ti_lo; ti < t_out && ti * stride <= u; ++ti) {
        const std::size_t j = u - ti * stride;
        if (j >= kernel) continue;
        const double* dyt = dy + ti * co;
        for (std::size_t o = 0; o < co; ++o) {
          acc += dyt[o] * w[(o * ci + c) * kernel + j];
        }
      }
      dx[u * ci + c] += acc;
    }
  }
}

void conv1d_grad_w(const double* dy, const double* x, double* dw, double* db,
                   std::size_t /*t*/, std::size_t ci, std::size_t co,
                   std::size_t kernel, std::size_t stride, std::size_t t_out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(co); ++o) {
    double bacc = 0.0;
    for (std::size_t ti = 0; ti < t_out; ++ti) {
      const double g = dy[ti * co + o];
      bacc += g;
      const double* xt = x + ti * stride * ci;
      double* wo = dw + o * ci * kernel;
      for (std::size_t c = 0; c < ci; ++c) {
        for (std::size_t j = 0; j < kernel; ++j) {
          wo[c * kernel + j] += g * xt[j * ci + c];
        }
      }
    }
    if (db) db[o] += bacc;
  }
}

void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    softmax_row(x + i * cols, y + i * cols, cols, false);
  }
}

void log_softmax_rows(const double* x, double* y, std::size_t rows,
                      std::size_t cols) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    softmax_row(x + i * cols, y + i * cols, cols, true);
  }
}

namespace ref {

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void matmul_at(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_at_row(a, b, c, i, m, k, n);
}

void matmul_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_bt_row(a, b, c, i, k, n);
}

void conv1d(const double* x, std::size_t /*t*/, std::size_t ci,
            const double* w, std::size_t co, std::size_t kernel,
            std::size_t stride, const double* bias, double* y,
            std::size_t t_out) {
  for (std::size_t ti = 0; ti < t_out; ++ti) {
    conv1d_frame(x, ci, w, co, kernel, stride, bias, y, ti);
  }
}

void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    softmax_row(x + i * cols, y + i * cols, cols, false);
  }
}

void log_softmax_rows(const double* x, double* y, std::size_t rows,
                      std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    softmax_row(x + i * cols, y + i * cols, cols, true);
  }
}

}  // namespace ref

}  // namespace semivox::kernels
