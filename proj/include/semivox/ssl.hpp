// semivox/ssl.hpp

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

#ifndef SEMIVOX_SSL_HPP_
#define SEMIVOX_SSL_HPP_

#include <string>
#include <vector>

#include "semivox/corpus.hpp"
#include "semivox/model.hpp"
#include "semivox/trainer.hpp"

namespace semivox {

// Product quantizer: `groups` codebooks of `entries` vectors each, selected
// by Gumbel-softmax during training and by hard argmax in eval.
struct QuantizerConfig {
  int groups = 2;
  int entries = 40;
  int code_dim = 16;
  double temp_start = 2.0;
  double temp_end = 0.5;
  double temp_decay = 0.9995;

  double temperature(long update) const;
  void validate() const;
};

struct SSLConfig {
  int negatives = 10;  // K distractors per masked frame
  double kappa = 0.1;  // contrastive temperature
  double alpha = 0.1;  // diversity weight
  int batch_items = 8;
  int proj_dim = 32;
  QuantizerConfig quant;
  MaskSpec mask;  // time-only masking during self-supervised training

  void validate() const;
};

enum class QuantMode { kHard, kStraightThrough, kSoft };

struct QuantizeResult {
  NodeP codes;  // [M, groups*code_dim]
  std::vector<NodeP> select_probs;  // per group, [M, entries], noise-free
};

// Quantizes latent frames. kHard uses noise-free argmax (deterministic);
// kStraightThrough forwards hard codes but routes gradients through the
// Gumbel-softmax; kSoft is the fully differentiable relaxation used by the
// gradient-check oracle. Rejects an empty masked set.
QuantizeResult quantize(Graph& g, const BoundParams& bp,
                        const QuantizerConfig& qc, NodeP z_masked,
                        QuantMode mode, double temperature, Rng* gumbel_rng);

// Mean over masked frames of -log softmax(cos(c, q+)/kappa over {q+} + K
// negatives drawn from the other masked frames of the same utterance).
// Falls back to sampling with replacement (and sets *with_replacement) when
// fewer than K distractors exist.
NodeP contrastive_loss(Graph& g, NodeP c_proj, NodeP q_proj, int negatives,
                       double kappa, Rng& rng, bool* with_replacement = nullptr);

// (G*V - sum_g perplexity(mean selection probs)) / (G*V); zero at uniform
// selection, (G*V - G)/(G*V) at one-hot collapse.
NodeP diversity_loss(Graph& g, const std::vector<NodeP>& select_probs);

// Adds the stage-1-only tensors (quantizer + projection heads) under the
// "ssl." prefix.
void add_ssl_parameters(Parameters& params, const ModelConfig& cfg,
                        const SSLConfig& ssl, std::uint64_t seed);
// Strips "ssl.*" (and any head) when a later stage adopts the checkpoint.
void strip_ssl_parameters(Parameters& params);

// Stage-1 self-supervised pre-training on the unlabeled split. Masking is
// time-only; the loss is contrastive + alpha * diversity. A non-finite loss
// aborts naming the offending update. Writes a JSON-lines log when
// log_path is non-empty.
Checkpoint ssl_train(const ModelConfig& cfg, const Manifest& unlabeled,
                     const SSLConfig& ssl, const TrainPlan& plan,
                     const std::string& log_path = "");

}  // namespace semivox

#endif  // SEMIVOX_SSL_HPP_
