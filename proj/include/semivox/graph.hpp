// semivox/graph.hpp

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

#ifndef SEMIVOX_GRAPH_HPP_
#define SEMIVOX_GRAPH_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "semivox/rng.hpp"
#include "semivox/tensor.hpp"

namespace semivox {

// Reverse-mode tape. Forward values are computed eagerly; each op that
// touches a differentiable input records one closure, and backward()
// replays the closures in reverse. Subgraphs whose inputs all have
// needs_grad=false record nothing, so frozen parameter stacks cost no
// backward work.
struct Node {
  Tensor value;
  Tensor grad;
  bool needs_grad = false;

  void ensure_grad() {
    if (grad.data.empty()) grad = Tensor(value.shape);
  }
};

using NodeP = std::shared_ptr<Node>;

class Graph {
 public:
  NodeP constant(Tensor v);
  NodeP leaf(Tensor v);  // differentiable input

  NodeP matmul(NodeP a, NodeP b);     // [m,k]x[k,n]
  NodeP matmul_nt(NodeP a, NodeP b);  // [m,k]x[n,k]^T -> [m,n]
  NodeP add(NodeP a, NodeP b);        // same shape
  NodeP sub(NodeP a, NodeP b);
  NodeP add_row_vector(NodeP x, NodeP v);  // v broadcast over rows
  NodeP hadamard(NodeP a, NodeP b);
  NodeP scale(NodeP a, double s);
  NodeP affine(NodeP a, double mul, double add);  // elementwise mul*x + add
  NodeP gelu(NodeP x);
  NodeP relu(NodeP x);
  NodeP log_el(NodeP x);
  NodeP exp_el(NodeP x);
  NodeP layer_norm(NodeP x, NodeP gamma, NodeP beta, double eps = 1e-5);
  NodeP softmax_rows(NodeP x);
  NodeP log_softmax_rows(NodeP x);
  NodeP conv1d(NodeP x, NodeP w, NodeP b, int stride);
  NodeP slice_cols(NodeP x, std::size_t c0, std::size_t c1);
  NodeP concat_cols(const std::vector<NodeP>& parts);
  NodeP gather_rows(NodeP x, std::vector<std::size_t> idx);
  // Replace time-masked rows by a learned embedding row.
  NodeP mask_rows(NodeP x, NodeP embed, const std::vector<char>& row_mask);
  // Zero out masked feature columns across all rows.
  NodeP zero_cols(NodeP x, const std::vector<char>& col_mask);
  NodeP dropout(NodeP x, double rate, Rng& rng);
  NodeP normalize_rows(NodeP x, double eps = 1e-12);
  NodeP mean_rows(NodeP x);  // [m,n] -> [1,n]
  NodeP mean_all(NodeP x);   // -> [1]
  NodeP sum_all(NodeP x);    // -> [1]
  NodeP pick(NodeP x, std::size_t i, std::size_t j);  // -> [1]
  // Forward takes the given hard values; gradient flows to the soft input.
  NodeP straight_through(NodeP soft, Tensor hard);
  // Scalar node with an externally computed value and analytic gradient
  // w.r.t. `input` (used to splice CTC into the tape).
  NodeP custom_scalar(NodeP input, double value, Tensor grad_wrt_input);

  void backward(NodeP root);

  std::size_t tape_size() const { return tape_.size(); }

 private:
  NodeP make(Tensor v, bool needs_grad);
  void record(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

  std::vector<std::function<void()>> tape_;
};

}  // namespace semivox

#endif  // SEMIVOX_GRAPH_HPP_
