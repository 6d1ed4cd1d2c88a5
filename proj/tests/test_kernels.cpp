// tests/test_kernels.cpp

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

#include <cmath>
#include <cstring>
#include <tuple>
#include <vector>

#include <doctest.h>

#include "semivox/kernels.hpp"
#include "semivox/rng.hpp"

using namespace semivox;

namespace {
std::vector<double> rnd(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}
}  // namespace

TEST_CASE("openmp kernels are bit-identical to the serial reference") {
  Rng rng(7);
  for (const auto [m, k, n] :
       {std::tuple{3, 5, 4}, std::tuple{17, 31, 9}, std::tuple{64, 64, 64}}) {
    const auto a = rnd(static_cast<std::size_t>(m * k), rng);
    const auto b = rnd(static_cast<std::size_t>(k * n), rng);
    std::vector<double> c1(static_cast<std::size_t>(m * n)), c2(c1.size());
    kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
    kernels::ref::matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * 8) == 0);

    const auto at = rnd(static_cast<std::size_t>(k * m), rng);
    kernels::matmul_at(at.data(), b.data(), c1.data(), m, k, n);
    kernels::ref::matmul_at(at.data(), b.data(), c2.data(), m, k, n);
    CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * 8) == 0);

    const auto bt = rnd(static_cast<std::size_t>(n * k), rng);
    kernels::matmul_bt(a.data(), bt.data(), c1.data(), m, k, n);
    kernels::ref::matmul_bt(a.data(), bt.data(), c2.data(), m, k, n);
    CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * 8) == 0);
  }
}

TEST_CASE("matmul against a plain triple loop") {
  Rng rng(13);
  const std::size_t m = 4, k = 6, n = 5;
  const auto a = rnd(m * k, rng);
  const auto b = rnd(k * n, rng);
  std::vector<double> c(m * n);
  kernels::matmul(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double expect = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) expect += a[i * k + kk] * b[kk * n + j];
      CHECK(c[i * n + j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv1d against direct summation") {
  Rng rng(17);
  const std::size_t t = 20, ci = 3, co = 4, kk = 5, stride = 2;
  const std::size_t t_out = (t - kk) / stride + 1;
  const auto x = rnd(t * ci, rng);
  const auto w = rnd(co * ci * kk, rng);
  const auto bias = rnd(co, rng);
  std::vector<double> y(t_out * co), y_ref(t_out * co);
  kernels::conv1d(x.data(), t, ci, w.data(), co, kk, stride, bias.data(),
                  y.data(), t_out);
  kernels::ref::conv1d(x.data(), t, ci, w.data(), co, kk, stride, bias.data(),
                       y_ref.data(), t_out);
  CHECK(std::memcmp(y.data(), y_ref.data(), y.size() * 8) == 0);
  for (std::size_t ti = 0; ti < t_out; ++ti) {
    for (std::size_t o = 0; o < co; ++o) {
      double expect = bias[o];
      for (std::size_t c = 0; c < ci; ++c) {
        for (std::size_t j = 0; j < kk; ++j) {
          expect += x[(ti * stride + j) * ci + c] * w[(o * ci + c) * kk + j];
        }
      }
      CHECK(y[ti * co + o] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax rows normalize and log softmax matches") {
  Rng rng(29);
  const std::size_t rows = 7, cols = 11;
  const auto x = rnd(rows * cols, rng);
  std::vector<double> p(rows * cols), lp(rows * cols);
  kernels::softmax_rows(x.data(), p.data(), rows, cols);
  kernels::log_softmax_rows(x.data(), lp.data(), rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      sum += p[i * cols + j];
      CHECK(std::log(p[i * cols + j]) ==
            doctest::Approx(lp[i * cols + j]).epsilon(1e-10));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::vector<double> p2(rows * cols);
  kernels::ref::softmax_rows(x.data(), p2.data(), rows, cols);
  CHECK(std::memcmp(p.data(), p2.data(), p.size() * 8) == 0);
}
