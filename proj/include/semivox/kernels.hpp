// semivox/kernels.hpp

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

#ifndef SEMIVOX_KERNELS_HPP_
#define SEMIVOX_KERNELS_HPP_

#include <cstddef>

// Dense compute kernels. The default entry points are OpenMP-parallel over
// independent output elements; semivox::kernels::ref holds plain serial
// loops with the same signatures. Every output element is accumulated in
// the same index order in both versions, so parallel and serial results are
// bit-identical regardless of thread count (this is what keeps full runs
// deterministic). tests/ compares the two and tools/bench_kernels.cpp
// benchmarks them against each other.

namespace semivox::kernels {

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);

// c[m,n] = a[k,m]^T * b[k,n]
void matmul_at(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);

// c[m,n] = a[m,k] * b[n,k]^T
void matmul_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);

// y[t_out, co] = bias[co] + sum_{ci,j} x[t*stride+j, ci] * w[co, ci, j]
// x is [t, ci] row-major, w is [co, ci, kernel] row-major. No padding.
void conv1d(const double* x, std::size_t t, std::size_t ci, const double* w,
            std::size_t co, std::size_t kernel, std::size_t stride,
            const double* bias, double* y, std::size_t t_out);

// Gradients for conv1d. dx must be zero-initialized by the caller; dw and
// db are accumulated into.
void conv1d_grad_x(const double* dy, const double* w, double* dx,
                   std::size_t t, std::size_t ci, std::size_t co,
                   std::size_t kernel, std::size_t stride, std::size_t t_out);
void conv1d_grad_w(const double* dy, const double* x, double* dw, double* db,
                   std::size_t t, std::size_t ci, std::size_t co,
                   std::size_t kernel, std::size_t stride, std::size_t t_out);

// Row-wise softmax / log-softmax with max-subtraction.
void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols);
void log_softmax_rows(const double* x, double* y, std::size_t rows,
                      std::size_t cols);

namespace ref {

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_at(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void conv1d(const double* x, std::size_t t, std::size_t ci, const double* w,
            std::size_t co, std::size_t kernel, std::size_t stride,
            const double* bias, double* y, std::size_t t_out);
void softmax_rows(const double* x, double* y, std::size_t rows,
                  std::size_t cols);
void log_softmax_rows(const double* x, double* y, std::size_t rows,
                      std::size_t cols);

}  // namespace ref

}  // namespace semivox::kernels

#endif  // SEMIVOX_KERNELS_HPP_
