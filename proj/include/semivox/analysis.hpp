// semivox/analysis.hpp

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

#ifndef SEMIVOX_ANALYSIS_HPP_
#define SEMIVOX_ANALYSIS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "semivox/corpus.hpp"
#include "semivox/model.hpp"

namespace semivox {

// Frame vectors pooled over a probe split, one matrix per layer,
// mean-centered by column.
struct ActivationMatrix {
  std::string layer;
  std::string checkpoint_id;
  Tensor mat;  // [N, d]
  bool centered = true;
};

// Layer names: conv0..convK-1 and feat (the projected latents) when
// include_conv, then ctx0..ctxL (ctx0 is the position-encoded input).
std::vector<std::string> model_layer_names(const ModelConfig& cfg,
                                           bool include_conv);

// Deterministic eval-mode forward (no masking, no dropout) concatenating
// frame vectors over the probe split.
std::vector<ActivationMatrix> collect_activations(
    const Checkpoint& ckpt, const Manifest& probe,
    const std::vector<std::string>& layers);

// Mean canonical correlation between two views: each is centered, projected
// onto the principal components retaining `retain` of the variance, and the
// correlations are the singular values of the whitened cross-covariance.
// Errors when N <= d (needs more probe data) or fewer than 2 components
// survive truncation.
double cca_similarity(const Tensor& a, const Tensor& b, double retain = 0.99);

struct CCAResult {
  std::vector<std::pair<std::string, double>> layer_similarity;  // layer, sim
  std::string probe;
  double retain = 0.99;
};

// Per-layer similarity between a pre-trained checkpoint and its fine-tuned
// descendant over the probe split.
CCAResult layer_curve(const Checkpoint& pretrained, const Checkpoint& finetuned,
                      const Manifest& probe, double retain = 0.99,
                      bool include_conv = false);

// 100 * (baseline - now) / baseline.
double relative_reduction(double baseline_wer, double new_wer);

// CSV outputs. `provenance` becomes a leading comment line when non-empty.
void write_results_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::tuple<std::string, std::string, double>>& rows);
void write_cca_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::tuple<std::string, std::string, double>>& rows);
void write_reductions_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::pair<std::string, double>>& rows);

}  // namespace semivox

#endif  // SEMIVOX_ANALYSIS_HPP_
