// tools/bench_kernels.cpp

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

// Compares the OpenMP kernels against the serial reference loops. Both
// must produce bit-identical output; only the wall time differs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "semivox/kernels.hpp"
#include "semivox/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(std::size_t n, semivox::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void report(const char* name, const char* size, double serial_ms,
            double omp_ms, bool identical) {
  std::printf("%-14s %-16s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx   %s\n",
              name, size, serial_ms, omp_ms, serial_ms / omp_ms,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serial code\n");
#endif

  semivox::Rng rng(42);
  const int reps = 20;

  for (const std::size_t n : {64, 128, 256}) {
    const auto a = random_vec(n * n, rng);
    const auto b = random_vec(n * n, rng);
    std::vector<double> c_ref(n * n), c_omp(n * n);
    const double s = time_ms(
        [&] { semivox::kernels::ref::matmul(a.data(), b.data(), c_ref.data(), n, n, n); },
        reps);
    const double p = time_ms(
        [&] { semivox::kernels::matmul(a.data(), b.data(), c_omp.data(), n, n, n); },
        reps);
    char size[32];
    std::snprintf(size, sizeof(size), "%zux%zux%zu", n, n, n);
    report("matmul", size, s, p,
           std::memcmp(c_ref.data(), c_omp.data(), n * n * sizeof(double)) == 0);
  }

  {
    const std::size_t t = 4096, ci = 8, co = 32, k = 10, stride = 2;
    const std::size_t t_out = (t - k) / stride + 1;
    const auto x = random_vec(t * ci, rng);
    const auto w = random_vec(co * ci * k, rng);
    const auto bias = random_vec(co, rng);
    std::vector<double> y_ref(t_out * co), y_omp(t_out * co);
    const double s = time_ms(
        [&] {
          semivox::kernels::ref::conv1d(x.data(), t, ci, w.data(), co, k,
                                        stride, bias.data(), y_ref.data(), t_out);
        },
        reps);
    const double p = time_ms(
        [&] {
          semivox::kernels::conv1d(x.data(), t, ci, w.data(), co, k, stride,
                                   bias.data(), y_omp.data(), t_out);
        },
        reps);
    report("conv1d", "4096x8->32 k10", s, p,
           std::memcmp(y_ref.data(), y_omp.data(),
                       t_out * co * sizeof(double)) == 0);
  }

  {
    const std::size_t rows = 2048, cols = 64;
    const auto x = random_vec(rows * cols, rng);
    std::vector<double> y_ref(rows * cols), y_omp(rows * cols);
    const double s = time_ms(
        [&] {
          semivox::kernels::ref::log_softmax_rows(x.data(), y_ref.data(), rows, cols);
        },
        reps);
    const double p = time_ms(
        [&] {
          semivox::kernels::log_softmax_rows(x.data(), y_omp.data(), rows, cols);
        },
        reps);
    report("log_softmax", "2048x64", s, p,
           std::memcmp(y_ref.data(), y_omp.data(),
                       rows * cols * sizeof(double)) == 0);
  }
  return 0;
}
