// tests/test_graph.cpp

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

// Every op's backward is checked against central finite differences. The
// scalar under test is sum(W .* op(...)) with a fixed random W so the full
// Jacobian is exercised.

#include <doctest.h>

#include "semivox/graph.hpp"
#include "test_util.hpp"

using namespace semivox;
using testutil::fd_grad;
using testutil::max_grad_err;
using testutil::random_tensor;

namespace {

// Builds loss(x) = sum(W .* f(leaf(x))) and returns max rel error between
// the tape gradient and finite differences.
double check_unary(const Tensor& x0, const Tensor& w,
                   const std::function<NodeP(Graph&, NodeP)>& f,
                   double h = 1e-5) {
  auto eval = [&](const Tensor& x) {
    Graph g;
    NodeP leaf = g.leaf(x);
    NodeP out = f(g, leaf);
    NodeP loss = g.sum_all(g.hadamard(out, g.constant(w)));
    return loss->value.data[0];
  };
  Graph g;
  NodeP leaf = g.leaf(x0);
  NodeP out = f(g, leaf);
  NodeP loss = g.sum_all(g.hadamard(out, g.constant(w)));
  g.backward(loss);
  return max_grad_err(leaf->grad, fd_grad(x0, eval, h));
}

}  // namespace

TEST_CASE("matmul family gradients") {
  Rng rng(3);
  const Tensor a0 = random_tensor({4, 3}, rng);
  const Tensor b0 = random_tensor({3, 5}, rng);
  const Tensor w = random_tensor({4, 5}, rng);

  auto eval_a = [&](const Tensor& a) {
    Graph g;
    NodeP loss = g.sum_all(
        g.hadamard(g.matmul(g.leaf(a), g.constant(b0)), g.constant(w)));
    return loss->value.data[0];
  };
  Graph g;
  NodeP na = g.leaf(a0), nb = g.leaf(b0);
  NodeP loss = g.sum_all(g.hadamard(g.matmul(na, nb), g.constant(w)));
  g.backward(loss);
  CHECK(max_grad_err(na->grad, fd_grad(a0, eval_a)) < 1e-7);
  auto eval_b = [&](const Tensor& b) {
    Graph g2;
    NodeP l = g2.sum_all(
        g2.hadamard(g2.matmul(g2.constant(a0), g2.leaf(b)), g2.constant(w)));
    return l->value.data[0];
  };
  CHECK(max_grad_err(nb->grad, fd_grad(b0, eval_b)) < 1e-7);

  const Tensor bt0 = random_tensor({5, 3}, rng);
  Graph g3;
  NodeP na3 = g3.leaf(a0), nbt = g3.leaf(bt0);
  NodeP loss3 = g3.sum_all(g3.hadamard(g3.matmul_nt(na3, nbt), g3.constant(w)));
  g3.backward(loss3);
  auto eval_a3 = [&](const Tensor& a) {
    Graph gg;
    NodeP l = gg.sum_all(
        gg.hadamard(gg.matmul_nt(gg.leaf(a), gg.constant(bt0)), gg.constant(w)));
    return l->value.data[0];
  };
  auto eval_bt = [&](const Tensor& b) {
    Graph gg;
    NodeP l = gg.sum_all(
        gg.hadamard(gg.matmul_nt(gg.constant(a0), gg.leaf(b)), gg.constant(w)));
    return l->value.data[0];
  };
  CHECK(max_grad_err(na3->grad, fd_grad(a0, eval_a3)) < 1e-7);
  CHECK(max_grad_err(nbt->grad, fd_grad(bt0, eval_bt)) < 1e-7);
}

TEST_CASE("elementwise and reduction gradients") {
  Rng rng(5);
  const Tensor x = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  const Tensor w1 = random_tensor({1}, rng);

  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.gelu(n); }) < 1e-6);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.scale(n, -2.5); }) < 1e-7);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.affine(n, 1.5, -0.25); }) < 1e-7);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.exp_el(n); }) < 1e-6);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.softmax_rows(n); }) < 1e-5);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.log_softmax_rows(n); }) < 1e-5);
  CHECK(check_unary(x, w, [](Graph& g, NodeP n) { return g.normalize_rows(n); }) < 1e-5);

  const Tensor xp = random_tensor({3, 4}, rng, 0.5, 2.0);  // positive for log
  CHECK(check_unary(xp, w, [](Graph& g, NodeP n) { return g.log_el(n); }) < 1e-6);

  // relu away from the kink
  Tensor xr = x;
  for (auto& v : xr.data) v += (v >= 0 ? 0.5 : -0.5);
  CHECK(check_unary(xr, w, [](Graph& g, NodeP n) { return g.relu(n); }) < 1e-7);

  const Tensor wrow = random_tensor({1, 4}, rng);
  CHECK(check_unary(x, wrow, [](Graph& g, NodeP n) { return g.mean_rows(n); }) < 1e-7);
  CHECK(check_unary(x, w1, [](Graph& g, NodeP n) { return g.sum_all(n); }) < 1e-7);
  CHECK(check_unary(x, w1, [](Graph& g, NodeP n) { return g.mean_all(n); }) < 1e-7);
  CHECK(check_unary(x, w1, [](Graph& g, NodeP n) { return g.pick(n, 1, 2); }) < 1e-7);
}

TEST_CASE("binary op gradients") {
  Rng rng(11);
  const Tensor a0 = random_tensor({3, 4}, rng);
  const Tensor b0 = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  for (int which = 0; which < 3; ++which) {
    auto apply = [which](Graph& g, NodeP a, NodeP b) {
      if (which == 0) return g.add(a, b);
      if (which == 1) return g.sub(a, b);
      return g.hadamard(a, b);
    };
    Graph g;
    NodeP na = g.leaf(a0), nb = g.leaf(b0);
    NodeP loss = g.sum_all(g.hadamard(apply(g, na, nb), g.constant(w)));
    g.backward(loss);
    auto ea = [&](const Tensor& a) {
      Graph gg;
      NodeP l = gg.sum_all(
          gg.hadamard(apply(gg, gg.leaf(a), gg.constant(b0)), gg.constant(w)));
      return l->value.data[0];
    };
    auto eb = [&](const Tensor& b) {
      Graph gg;
      NodeP l = gg.sum_all(
          gg.hadamard(apply(gg, gg.constant(a0), gg.leaf(b)), gg.constant(w)));
      return l->value.data[0];
    };
    CHECK(max_grad_err(na->grad, fd_grad(a0, ea)) < 1e-6);
    CHECK(max_grad_err(nb->grad, fd_grad(b0, eb)) < 1e-6);
  }
}

TEST_CASE("layer norm gradients (x, gamma, beta)") {
  Rng rng(13);
  const Tensor x0 = random_tensor({4, 6}, rng);
  const Tensor g0 = random_tensor({6}, rng, 0.5, 1.5);
  const Tensor b0 = random_tensor({6}, rng);
  const Tensor w = random_tensor({4, 6}, rng);

  Graph g;
  NodeP nx = g.leaf(x0), ng = g.leaf(g0), nb = g.leaf(b0);
  NodeP loss = g.sum_all(g.hadamard(g.layer_norm(nx, ng, nb), g.constant(w)));
  g.backward(loss);

  auto ex = [&](const Tensor& x) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.layer_norm(gg.leaf(x), gg.constant(g0), gg.constant(b0)),
        gg.constant(w)));
    return l->value.data[0];
  };
  auto eg = [&](const Tensor& gm) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.layer_norm(gg.constant(x0), gg.leaf(gm), gg.constant(b0)),
        gg.constant(w)));
    return l->value.data[0];
  };
  auto eb = [&](const Tensor& bt) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.layer_norm(gg.constant(x0), gg.constant(g0), gg.leaf(bt)),
        gg.constant(w)));
    return l->value.data[0];
  };
  CHECK(max_grad_err(nx->grad, fd_grad(x0, ex)) < 1e-5);
  CHECK(max_grad_err(ng->grad, fd_grad(g0, eg)) < 1e-6);
  CHECK(max_grad_err(nb->grad, fd_grad(b0, eb)) < 1e-6);
}

TEST_CASE("structural op gradients") {
  Rng rng(17);
  const Tensor x0 = random_tensor({5, 6}, rng);

  const Tensor w35 = random_tensor({5, 3}, rng);
  CHECK(check_unary(x0, w35,
                    [](Graph& g, NodeP n) { return g.slice_cols(n, 2, 5); }) < 1e-7);

  const Tensor wg = random_tensor({4, 6}, rng);
  CHECK(check_unary(x0, wg, [](Graph& g, NodeP n) {
          return g.gather_rows(n, {1, 3, 3, 0});  // duplicates accumulate
        }) < 1e-6);

  const Tensor wc = random_tensor({5, 12}, rng);
  CHECK(check_unary(x0, wc, [](Graph& g, NodeP n) {
          return g.concat_cols({n, n});
        }) < 1e-6);

  const std::vector<char> colmask = {1, 0, 0, 1, 0, 1};
  const Tensor w6 = random_tensor({5, 6}, rng);
  CHECK(check_unary(x0, w6, [&](Graph& g, NodeP n) {
          return g.zero_cols(n, colmask);
        }) < 1e-7);
}

TEST_CASE("mask_rows routes gradients to rows and embedding") {
  Rng rng(19);
  const Tensor x0 = random_tensor({5, 4}, rng);
  const Tensor e0 = random_tensor({4}, rng);
  const Tensor w = random_tensor({5, 4}, rng);
  const std::vector<char> rows = {0, 1, 0, 1, 1};

  Graph g;
  NodeP nx = g.leaf(x0), ne = g.leaf(e0);
  NodeP loss = g.sum_all(g.hadamard(g.mask_rows(nx, ne, rows), g.constant(w)));
  g.backward(loss);
  auto ex = [&](const Tensor& x) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.mask_rows(gg.leaf(x), gg.constant(e0), rows), gg.constant(w)));
    return l->value.data[0];
  };
  auto ee = [&](const Tensor& e) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.mask_rows(gg.constant(x0), gg.leaf(e), rows), gg.constant(w)));
    return l->value.data[0];
  };
  CHECK(max_grad_err(nx->grad, fd_grad(x0, ex)) < 1e-7);
  CHECK(max_grad_err(ne->grad, fd_grad(e0, ee)) < 1e-7);
  // masked rows equal the embedding, unmasked rows pass through
  NodeP out = g.mask_rows(g.constant(x0), g.constant(e0), rows);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(out->value.at(i, j) == (rows[i] ? e0.data[j] : x0.at(i, j)));
    }
  }
}

TEST_CASE("conv1d gradients (x, w, b)") {
  Rng rng(23);
  const Tensor x0 = random_tensor({14, 2}, rng);
  const Tensor w0 = random_tensor({3, 2, 4}, rng);  // co=3, ci=2, k=4
  const Tensor b0 = random_tensor({3}, rng);
  const std::size_t t_out = (14 - 4) / 2 + 1;
  const Tensor w = random_tensor({t_out, 3}, rng);

  Graph g;
  NodeP nx = g.leaf(x0), nw = g.leaf(w0), nb = g.leaf(b0);
  NodeP loss = g.sum_all(g.hadamard(g.conv1d(nx, nw, nb, 2), g.constant(w)));
  g.backward(loss);
  auto ex = [&](const Tensor& x) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.conv1d(gg.leaf(x), gg.constant(w0), gg.constant(b0), 2), gg.constant(w)));
    return l->value.data[0];
  };
  auto ew = [&](const Tensor& wt) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.conv1d(gg.constant(x0), gg.leaf(wt), gg.constant(b0), 2), gg.constant(w)));
    return l->value.data[0];
  };
  auto eb = [&](const Tensor& bt) {
    Graph gg;
    NodeP l = gg.sum_all(gg.hadamard(
        gg.conv1d(gg.constant(x0), gg.constant(w0), gg.leaf(bt), 2), gg.constant(w)));
    return l->value.data[0];
  };
  CHECK(max_grad_err(nx->grad, fd_grad(x0, ex)) < 1e-6);
  CHECK(max_grad_err(nw->grad, fd_grad(w0, ew)) < 1e-6);
  CHECK(max_grad_err(nb->grad, fd_grad(b0, eb)) < 1e-7);
}

TEST_CASE("dropout is deterministic per stream and scales by keep") {
  Rng rng(29);
  const Tensor x0 = random_tensor({6, 5}, rng, 0.5, 1.5);
  auto run = [&](std::uint64_t seed) {
    Graph g;
    Rng drop(seed);
    return g.dropout(g.constant(x0), 0.4, drop)->value;
  };
  const Tensor a = run(77), b = run(77), c = run(78);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  int kept = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (a.data[i] != 0.0) {
      ++kept;
      CHECK(a.data[i] == doctest::Approx(x0.data[i] / 0.6));
    }
  }
  CHECK(kept > 0);
}

TEST_CASE("straight_through forwards hard values and passes gradients") {
  Rng rng(31);
  const Tensor soft0 = random_tensor({2, 3}, rng);
  Tensor hard(soft0.shape);
  hard.data = {1, 0, 0, 0, 0, 1};
  const Tensor w = random_tensor({2, 3}, rng);
  Graph g;
  NodeP ns = g.leaf(soft0);
  NodeP st = g.straight_through(ns, hard);
  CHECK(st->value.data == hard.data);
  NodeP loss = g.sum_all(g.hadamard(st, g.constant(w)));
  g.backward(loss);
  for (std::size_t i = 0; i < w.numel(); ++i) {
    CHECK(ns->grad.data[i] == doctest::Approx(w.data[i]));
  }
}

TEST_CASE("custom_scalar splices an external gradient") {
  Rng rng(37);
  const Tensor x0 = random_tensor({2, 2}, rng);
  Tensor gext(x0.shape);
  gext.data = {0.5, -1.0, 2.0, 0.0};
  Graph g;
  NodeP nx = g.leaf(x0);
  NodeP y = g.scale(nx, 3.0);
  NodeP s = g.custom_scalar(y, 42.0, gext);
  CHECK(s->value.data[0] == 42.0);
  NodeP loss = g.scale(s, 2.0);
  g.backward(loss);
  for (std::size_t i = 0; i < x0.numel(); ++i) {
    CHECK(nx->grad.data[i] == doctest::Approx(2.0 * gext.data[i] * 3.0));
  }
}

TEST_CASE("constant subgraphs record no backward work") {
  Graph g;
  NodeP a = g.constant(Tensor({4, 4}, 1.0));
  NodeP b = g.constant(Tensor({4, 4}, 2.0));
  NodeP c = g.matmul(a, b);
  NodeP d = g.gelu(c);
  (void)d;
  CHECK(g.tape_size() == 0);
}
