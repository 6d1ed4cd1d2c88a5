// semivox/model.hpp

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

#ifndef SEMIVOX_MODEL_HPP_
#define SEMIVOX_MODEL_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semivox/graph.hpp"
#include "semivox/tensor.hpp"

namespace semivox {

// Strided conv feature encoder -> transformer context network -> linear
// head. The conv stack (including its output projection) is the
// "encoder.*" parameter group that later stages keep frozen.
struct ModelConfig {
  struct ConvLayer {
    int channels = 0;
    int kernel = 0;
    int stride = 1;
  };
  std::vector<ConvLayer> conv = {{32, 10, 2}, {32, 4, 2}};
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 3;
  int ffn_dim = 256;
  double dropout = 0.0;
  std::string activation = "gelu";
  int vocab_size = 0;  // 0 = no head

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

using Parameters = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

// Deterministic name-keyed initialization; the creation order of tensors
// does not affect their values.
Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);
// Fresh head sized to vocab_size (removes any existing head first).
void reset_head(Parameters& params, const ModelConfig& cfg, std::uint64_t seed);
void check_finite(const Parameters& params);

// Output frame count of the conv stack; throws (naming the required
// minimum) when the input is too short.
int frame_count(const ModelConfig& cfg, int samples);
int min_input_samples(const ModelConfig& cfg);

struct MaskSpec {
  enum class Mode { kNone, kTime, kTimeChannel };
  Mode mode = Mode::kNone;
  double time_prob = 0.065;  // per-frame span-start probability
  int time_span = 10;
  double channel_prob = 0.2;  // per-channel band-start probability
  int channel_span = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MaskInfo {
  std::vector<char> time;     // per frame
  std::vector<char> channel;  // per feature dim
  bool any_time() const;
  std::vector<std::size_t> time_indices() const;
};

// Pure sampling half of apply_mask; spans are clipped at the ends.
MaskInfo sample_mask(const MaskSpec& spec, int frames, int dims);

// Parameters bound into a graph. Trainable names become differentiable
// leaves; everything else is constant (and records no backward work).
struct BoundParams {
  Graph* graph = nullptr;
  std::map<std::string, NodeP> nodes;

  NodeP at(const std::string& name) const;
  bool has(const std::string& name) const { return nodes.count(name) != 0; }
};

BoundParams bind_parameters(Graph& g, const Parameters& params,
                            const std::set<std::string>& trainable);
// Accumulates node grads into out (adding to existing entries).
void collect_param_grads(const BoundParams& bp, GradMap& out);

struct ForwardOptions {
  bool training = false;  // enables dropout
  Rng* dropout_rng = nullptr;
};

// waveform -> latent frames Z [T, d_model]
NodeP encode_features(Graph& g, const BoundParams& bp, const ModelConfig& cfg,
                      std::span<const double> waveform);
// Z -> Z' (time rows replaced by the learned embedding, channel bands
// zeroed). Returns exactly the entries listed in MaskInfo changed.
NodeP apply_mask(Graph& g, const BoundParams& bp, NodeP z, const MaskInfo& info,
                 MaskSpec::Mode mode);
// Z' -> C[0..n_layers]; C[0] is the position-encoded input sequence.
std::vector<NodeP> context_forward(Graph& g, const BoundParams& bp,
                                   const ModelConfig& cfg, NodeP z_prime,
                                   const ForwardOptions& opts = {});
// C[n_layers] -> logits [T, vocab]
NodeP project_logits(Graph& g, const BoundParams& bp, const ModelConfig& cfg,
                     NodeP c_final);

// Convenience non-graph forward for evaluation: waveform -> log probs.
Tensor forward_logprobs(const Parameters& params, const ModelConfig& cfg,
                        std::span<const double> waveform);

// Name prefixes for the freeze groups.
inline const char* kEncoderPrefix = "encoder.";
inline const char* kContextPrefix = "ctx.";
inline const char* kHeadPrefix = "head.";
inline const char* kMaskEmbedName = "mask_embed";
inline const char* kSslPrefix = "ssl.";

// ---------------------------------------------------------------------------
// Checkpoint file: magic "W2VS", u32 version, embedded JSON (model config +
// provenance), then named tensors as row-major 32-bit little-endian floats.
// Save/load round-trips are bit-exact.

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  nlohmann::json meta;  // provenance stamp etc.
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace semivox

#endif  // SEMIVOX_MODEL_HPP_
