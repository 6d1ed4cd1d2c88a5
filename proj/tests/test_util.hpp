// tests/test_util.hpp

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

#ifndef SEMIVOX_TESTS_TEST_UTIL_HPP_
#define SEMIVOX_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <functional>

#include "semivox/rng.hpp"
#include "semivox/tensor.hpp"

namespace semivox::testutil {

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Central-difference gradient of a scalar function of one tensor.
inline Tensor fd_grad(const Tensor& x,
                      const std::function<double(const Tensor&)>& f,
                      double h = 1e-5) {
  Tensor g(x.shape);
  Tensor work = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double orig = work.data[i];
    work.data[i] = orig + h;
    const double fp = f(work);
    work.data[i] = orig - h;
    const double fm = f(work);
    work.data[i] = orig;
    g.data[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Largest relative error between an analytic gradient and its FD estimate.
inline double max_grad_err(const Tensor& analytic, const Tensor& fd,
                           double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.numel(); ++i) {
    worst = std::max(worst, rel_err(analytic.data[i], fd.data[i], floor));
  }
  return worst;
}

}  // namespace semivox::testutil

#endif  // SEMIVOX_TESTS_TEST_UTIL_HPP_
