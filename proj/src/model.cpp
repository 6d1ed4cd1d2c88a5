// semivox/model.cpp

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

#include "semivox/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "semivox/fileutil.hpp"
#include "semivox/kernels.hpp"
#include "semivox/rng.hpp"

namespace semivox {

using nlohmann::json;

void ModelConfig::validate() const {
  if (conv.empty()) throw std::invalid_argument("model: empty conv stack");
  for (const auto& c : conv) {
    if (c.channels < 1 || c.kernel < 1 || c.stride < 1) {
      throw std::invalid_argument("model: bad conv layer");
    }
  }
  if (d_model < 1 || n_layers < 1 || n_heads < 1 || ffn_dim < 1) {
    throw std::invalid_argument("model: bad dimensions");
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("model: d_model not divisible by n_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("model: bad dropout rate");
  }
  if (activation != "gelu" && activation != "relu") {
    throw std::invalid_argument("model: unknown activation " + activation);
  }
  if (vocab_size < 0) throw std::invalid_argument("model: bad vocab size");
}

json ModelConfig::to_json() const {
  json j;
  j["conv"] = json::array();
  for (const auto& c : conv) {
    j["conv"].push_back({c.channels, c.kernel, c.stride});
  }
  j["d_model"] = d_model;
  j["n_heads"] = n_heads;
  j["n_layers"] = n_layers;
  j["ffn_dim"] = ffn_dim;
  j["dropout"] = dropout;
  j["activation"] = activation;
  j["vocab_size"] = vocab_size;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  cfg.conv.clear();
  for (const auto& c : j.at("conv")) {
    cfg.conv.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
  }
  cfg.d_model = j.at("d_model").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.n_layers = j.at("n_layers").get<int>();
  cfg.ffn_dim = j.at("ffn_dim").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.activation = j.at("activation").get<std::string>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.validate();
  return cfg;
}

namespace {

Tensor init_tensor(std::vector<std::size_t> shape, double stddev,
                   std::uint64_t seed, const std::string& name) {
  Tensor t(std::move(shape));
  Rng rng(derive_seed(seed, "init:" + name));
  for (auto& v : t.data) v = stddev * rng.gaussian();
  return t;
}

void add_linear(Parameters& p, const std::string& name, std::size_t in,
                std::size_t out, std::uint64_t seed) {
  p[name + ".weight"] =
      init_tensor({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), seed,
                  name + ".weight");
  p[name + ".bias"] = Tensor({out});
}

void add_norm(Parameters& p, const std::string& name, std::size_t dim) {
  p[name + ".gamma"] = Tensor({dim}, 1.0);
  p[name + ".beta"] = Tensor({dim});
}

}  // namespace

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Parameters p;
  int in_ch = 1;
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const auto& c = cfg.conv[i];
    const std::string name = "encoder.conv" + std::to_string(i);
    const double fan_in = static_cast<double>(in_ch * c.kernel);
    p[name + ".weight"] = init_tensor(
        {static_cast<std::size_t>(c.channels), static_cast<std::size_t>(in_ch),
         static_cast<std::size_t>(c.kernel)},
        1.0 / std::sqrt(fan_in), seed, name + ".weight");
    p[name + ".bias"] = Tensor({static_cast<std::size_t>(c.channels)});
    in_ch = c.channels;
  }
  add_norm(p, "encoder.norm", static_cast<std::size_t>(in_ch));
  add_linear(p, "encoder.proj", static_cast<std::size_t>(in_ch),
             static_cast<std::size_t>(cfg.d_model), seed);
  p[kMaskEmbedName] = init_tensor({static_cast<std::size_t>(cfg.d_model)}, 0.1,
                                  seed, kMaskEmbedName);
  const auto d = static_cast<std::size_t>(cfg.d_model);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string base = "ctx.layer" + std::to_string(l);
    add_norm(p, base + ".norm1", d);
    add_linear(p, base + ".attn.q", d, d, seed);
    add_linear(p, base + ".attn.k", d, d, seed);
    add_linear(p, base + ".attn.v", d, d, seed);
    add_linear(p, base + ".attn.o", d, d, seed);
    add_norm(p, base + ".norm2", d);
    add_linear(p, base + ".ffn.fc1", d, static_cast<std::size_t>(cfg.ffn_dim), seed);
    add_linear(p, base + ".ffn.fc2", static_cast<std::size_t>(cfg.ffn_dim), d, seed);
  }
  if (cfg.vocab_size > 0) {
    add_linear(p, "head", d, static_cast<std::size_t>(cfg.vocab_size), seed);
  }
  return p;
}

void reset_head(Parameters& params, const ModelConfig& cfg, std::uint64_t seed) {
  for (auto it = params.begin(); it != params.end();) {
    if (it->first.rfind(kHeadPrefix, 0) == 0) {
      it = params.erase(it);
    } else {
      ++it;
    }
  }
  if (cfg.vocab_size > 0) {
    add_linear(params, "head", static_cast<std::size_t>(cfg.d_model),
               static_cast<std::size_t>(cfg.vocab_size), seed);
  }
}

void check_finite(const Parameters& params) {
  for (const auto& [name, t] : params) {
    for (double v : t.data) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("parameter '" + name + "' is not finite");
      }
    }
  }
}

int min_input_samples(const ModelConfig& cfg) {
  // invert the frame formula for one output frame per layer
  int required = 1;
  for (auto it = cfg.conv.rbegin(); it != cfg.conv.rend(); ++it) {
    required = (required - 1) * it->stride + it->kernel;
  }
  return required;
}

int frame_count(const ModelConfig& cfg, int samples) {
  int t = samples;
  for (const auto& c : cfg.conv) {
    if (t < c.kernel) {
      throw std::invalid_argument(
          "input too short: need at least " +
          std::to_string(min_input_samples(cfg)) + " samples");
    }
    t = (t - c.kernel) / c.stride + 1;
  }
  return t;
}

void MaskSpec::validate() const {
  if (time_prob < 0.0 || time_prob > 1.0 || channel_prob < 0.0 ||
      channel_prob > 1.0) {
    throw std::invalid_argument("mask: probabilities must be in [0,1]");
  }
  if (time_span < 1 || channel_span < 1) {
    throw std::invalid_argument("mask: spans must be >= 1");
  }
}

bool MaskInfo::any_time() const {
  for (char c : time) {
    if (c) return true;
  }
  return false;
}

std::vector<std::size_t> MaskInfo::time_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (time[i]) out.push_back(i);
  }
  return out;
}

MaskInfo sample_mask(const MaskSpec& spec, int frames, int dims) {
  spec.validate();
  MaskInfo info;
  info.time.assign(static_cast<std::size_t>(frames), 0);
  info.channel.assign(static_cast<std::size_t>(dims), 0);
  if (spec.mode == MaskSpec::Mode::kNone) return info;
  Rng rng(derive_seed(spec.seed, "mask"));
  for (int i = 0; i < frames; ++i) {
    if (!rng.bernoulli(spec.time_prob)) continue;
    for (int j = i; j < std::min(frames, i + spec.time_span); ++j) {
      info.time[static_cast<std::size_t>(j)] = 1;
    }
  }
  if (spec.mode == MaskSpec::Mode::kTimeChannel) {
    for (int c = 0; c < dims; ++c) {
      if (!rng.bernoulli(spec.channel_prob)) continue;
      for (int j = c; j < std::min(dims, c + spec.channel_span); ++j) {
        info.channel[static_cast<std::size_t>(j)] = 1;
      }
    }
  }
  return info;
}

NodeP BoundParams::at(const std::string& name) const {
  auto it = nodes.find(name);
  if (it == nodes.end()) {
    throw std::invalid_argument("missing parameter '" + name + "'");
  }
  return it->second;
}

BoundParams bind_parameters(Graph& g, const Parameters& params,
                            const std::set<std::string>& trainable) {
  BoundParams bp;
  bp.graph = &g;
  for (const auto& [name, tensor] : params) {
    bp.nodes[name] =
        trainable.count(name) ? g.leaf(tensor) : g.constant(tensor);
  }
  return bp;
}

void collect_param_grads(const BoundParams& bp, GradMap& out) {
  for (const auto& [name, node] : bp.nodes) {
    if (!node->needs_grad || node->grad.data.empty()) continue;
    auto it = out.find(name);
    if (it == out.end()) {
      out[name] = node->grad;
    } else {
      for (std::size_t i = 0; i < node->grad.numel(); ++i) {
        it->second.data[i] += node->grad.data[i];
      }
    }
  }
}

namespace {

NodeP linear(Graph& g, const BoundParams& bp, const std::string& name, NodeP x) {
  return g.add_row_vector(g.matmul(x, bp.at(name + ".weight")),
                          bp.at(name + ".bias"));
}

NodeP norm(Graph& g, const BoundParams& bp, const std::string& name, NodeP x) {
  return g.layer_norm(x, bp.at(name + ".gamma"), bp.at(name + ".beta"));
}

NodeP activate(Graph& g, const ModelConfig& cfg, NodeP x) {
  return cfg.activation == "relu" ? g.relu(x) : g.gelu(x);
}

Tensor positional_encoding(int frames, int d) {
  Tensor pe({static_cast<std::size_t>(frames), static_cast<std::size_t>(d)});
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < d / 2; ++i) {
      const double angle =
          t / std::pow(10000.0, (2.0 * i) / static_cast<double>(d));
      pe.at(static_cast<std::size_t>(t), static_cast<std::size_t>(2 * i)) =
          std::sin(angle);
      pe.at(static_cast<std::size_t>(t), static_cast<std::size_t>(2 * i + 1)) =
          std::cos(angle);
    }
  }
  return pe;
}

void check_layer_finite(const NodeP& x, const std::string& layer) {
  for (double v : x->value.data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite activation in " + layer);
    }
  }
}

}  // namespace

NodeP encode_features(Graph& g, const BoundParams& bp, const ModelConfig& cfg,
                      std::span<const double> waveform) {
  if (waveform.empty()) throw std::invalid_argument("empty waveform");
  frame_count(cfg, static_cast<int>(waveform.size()));  // throws if too short
  Tensor x({waveform.size(), static_cast<std::size_t>(1)});
  std::copy(waveform.begin(), waveform.end(), x.data.begin());
  NodeP h = g.constant(std::move(x));
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const std::string name = "encoder.conv" + std::to_string(i);
    h = g.conv1d(h, bp.at(name + ".weight"), bp.at(name + ".bias"),
                 cfg.conv[i].stride);
    h = activate(g, cfg, h);
  }
  h = norm(g, bp, "encoder.norm", h);
  h = linear(g, bp, "encoder.proj", h);
  check_layer_finite(h, "feature encoder");
  return h;
}

NodeP apply_mask(Graph& g, const BoundParams& bp, NodeP z, const MaskInfo& info,
                 MaskSpec::Mode mode) {
  if (mode == MaskSpec::Mode::kNone) return z;
  NodeP out = g.mask_rows(z, bp.at(kMaskEmbedName), info.time);
  if (mode == MaskSpec::Mode::kTimeChannel) {
    out = g.zero_cols(out, info.channel);
  }
  return out;
}

std::vector<NodeP> context_forward(Graph& g, const BoundParams& bp,
                                   const ModelConfig& cfg, NodeP z_prime,
                                   const ForwardOptions& opts) {
  const int T = static_cast<int>(z_prime->value.rows());
  const auto dh = static_cast<std::size_t>(cfg.d_model / cfg.n_heads);
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = opts.training && cfg.dropout > 0.0;

  std::vector<NodeP> c;
  NodeP h = g.add(z_prime, g.constant(positional_encoding(T, cfg.d_model)));
  c.push_back(h);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string base = "ctx.layer" + std::to_string(l);
    // pre-norm attention block
    NodeP a_in = norm(g, bp, base + ".norm1", h);
    NodeP q = linear(g, bp, base + ".attn.q", a_in);
    NodeP k = linear(g, bp, base + ".attn.k", a_in);
    NodeP v = linear(g, bp, base + ".attn.v", a_in);
    std::vector<NodeP> heads;
    for (int hd = 0; hd < cfg.n_heads; ++hd) {
      const std::size_t c0 = static_cast<std::size_t>(hd) * dh;
      NodeP qh = g.slice_cols(q, c0, c0 + dh);
      NodeP kh = g.slice_cols(k, c0, c0 + dh);
      NodeP vh = g.slice_cols(v, c0, c0 + dh);
      NodeP scores = g.scale(g.matmul_nt(qh, kh), att_scale);
      NodeP attn = g.softmax_rows(scores);
      if (drop) attn = g.dropout(attn, cfg.dropout, *opts.dropout_rng);
      heads.push_back(g.matmul(attn, vh));
    }
    NodeP att_out = linear(g, bp, base + ".attn.o", g.concat_cols(heads));
    if (drop) att_out = g.dropout(att_out, cfg.dropout, *opts.dropout_rng);
    h = g.add(h, att_out);
    // pre-norm feed-forward block
    NodeP f_in = norm(g, bp, base + ".norm2", h);
    NodeP f = linear(g, bp, base + ".ffn.fc1", f_in);
    f = activate(g, cfg, f);
    f = linear(g, bp, base + ".ffn.fc2", f);
    if (drop) f = g.dropout(f, cfg.dropout, *opts.dropout_rng);
    h = g.add(h, f);
    check_layer_finite(h, "context layer " + std::to_string(l));
    c.push_back(h);
  }
  return c;
}

NodeP project_logits(Graph& g, const BoundParams& bp, const ModelConfig& cfg,
                     NodeP c_final) {
  if (cfg.vocab_size <= 0 || !bp.has("head.weight")) {
    throw std::invalid_argument("project_logits: model has no head");
  }
  if (bp.at("head.weight")->value.cols() !=
      static_cast<std::size_t>(cfg.vocab_size)) {
    throw std::invalid_argument("project_logits: head width mismatch");
  }
  return linear(g, bp, "head", c_final);
}

Tensor forward_logprobs(const Parameters& params, const ModelConfig& cfg,
                        std::span<const double> waveform) {
  Graph g;
  BoundParams bp = bind_parameters(g, params, {});
  NodeP z = encode_features(g, bp, cfg, waveform);
  auto c = context_forward(g, bp, cfg, z);
  NodeP logits = project_logits(g, bp, cfg, c.back());
  return [&] {
    Tensor out(logits->value.shape);
    kernels::log_softmax_rows(logits->value.data.data(), out.data.data(),
                              logits->value.rows(), logits->value.cols());
    return out;
  }();
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

constexpr char kMagic[4] = {'W', '2', 'V', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  check_finite(ckpt.params);
  std::string out;
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  json j;
  j["model_config"] = ckpt.config.to_json();
  j["meta"] = ckpt.meta;
  const std::string js = j.dump();
  put<std::uint64_t>(out, js.size());
  out += js;
  put<std::uint64_t>(out, ckpt.params.size());
  for (const auto& [name, t] : ckpt.params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, 0);  // dtype 0 = f32
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.data) put<float>(out, static_cast<float>(v));
  }
  atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string in = read_file(path);
  std::size_t off = 0;
  if (in.size() < 8 || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  off = 4;
  const auto version = take<std::uint32_t>(in, off);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  const auto jlen = take<std::uint64_t>(in, off);
  if (off + jlen > in.size()) throw std::runtime_error("checkpoint: truncated");
  const json j = json::parse(in.substr(off, jlen));
  off += jlen;
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(j.at("model_config"));
  ckpt.meta = j.value("meta", json::object());
  const auto n_tensors = take<std::uint64_t>(in, off);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    const auto name_len = take<std::uint32_t>(in, off);
    if (off + name_len > in.size()) throw std::runtime_error("checkpoint: truncated");
    const std::string name = in.substr(off, name_len);
    off += name_len;
    const auto dtype = take<std::uint8_t>(in, off);
    if (dtype != 0) throw std::runtime_error("checkpoint: unknown dtype tag");
    const auto ndim = take<std::uint8_t>(in, off);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(take<std::uint64_t>(in, off));
    Tensor t(shape);
    for (auto& v : t.data) v = static_cast<double>(take<float>(in, off));
    ckpt.params[name] = std::move(t);
  }
  check_finite(ckpt.params);
  return ckpt;
}

}  // namespace semivox
