// semivox/ssl.cpp

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

#include "semivox/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semivox/fileutil.hpp"

namespace semivox {

double QuantizerConfig::temperature(long update) const {
  return std::max(temp_end,
                  temp_start * std::pow(temp_decay, static_cast<double>(update)));
}

void QuantizerConfig::validate() const {
  if (groups < 1 || entries < 1 || code_dim < 1) {
    throw std::invalid_argument("quantizer: bad dimensions");
  }
  if (temp_start <= 0.0 || temp_end <= 0.0 || temp_decay <= 0.0 ||
      temp_decay > 1.0) {
    throw std::invalid_argument("quantizer: bad temperature schedule");
  }
}

void SSLConfig::validate() const {
  if (negatives < 1) throw std::invalid_argument("ssl: negatives must be >= 1");
  if (kappa <= 0.0) throw std::invalid_argument("ssl: kappa must be > 0");
  if (alpha < 0.0) throw std::invalid_argument("ssl: alpha must be >= 0");
  if (batch_items < 1 || proj_dim < 1) {
    throw std::invalid_argument("ssl: bad batch/proj settings");
  }
  quant.validate();
}

QuantizeResult quantize(Graph& g, const BoundParams& bp,
                        const QuantizerConfig& qc, NodeP z_masked,
                        QuantMode mode, double temperature, Rng* gumbel_rng) {
  const std::size_t m = z_masked->value.rows();
  if (m == 0) {
    throw std::invalid_argument("quantize: empty masked set, no targets");
  }
  if (temperature <= 0.0) {
    throw std::invalid_argument("quantize: temperature must be > 0");
  }
  const auto V = static_cast<std::size_t>(qc.entries);
  NodeP logits = g.add_row_vector(g.matmul(z_masked, bp.at("ssl.quant.logits.weight")),
                                  bp.at("ssl.quant.logits.bias"));
  QuantizeResult out;
  std::vector<NodeP> group_codes;
  for (int grp = 0; grp < qc.groups; ++grp) {
    NodeP lg = g.slice_cols(logits, static_cast<std::size_t>(grp) * V,
                            static_cast<std::size_t>(grp + 1) * V);
    out.select_probs.push_back(g.softmax_rows(lg));
    NodeP codebook = bp.at("ssl.quant.codebook" + std::to_string(grp));
    NodeP selected;
    if (mode == QuantMode::kHard) {
      // noise-free argmax, one-hot rows
      Tensor onehot({m, V});
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t best = 0;
        for (std::size_t v = 1; v < V; ++v) {
          if (lg->value.at(i, v) > lg->value.at(i, best)) best = v;
        }
        onehot.at(i, best) = 1.0;
      }
      selected = g.constant(std::move(onehot));
    } else {
      if (gumbel_rng == nullptr) {
        throw std::invalid_argument("quantize: missing noise stream");
      }
      Tensor noise({m, V});
      for (auto& v : noise.data) v = gumbel_rng->gumbel();
      NodeP noisy = g.add(lg, g.constant(std::move(noise)));
      NodeP soft = g.softmax_rows(g.scale(noisy, 1.0 / temperature));
      if (mode == QuantMode::kSoft) {
        selected = soft;
      } else {
        Tensor onehot({m, V});
        for (std::size_t i = 0; i < m; ++i) {
          std::size_t best = 0;
          for (std::size_t v = 1; v < V; ++v) {
            if (soft->value.at(i, v) > soft->value.at(i, best)) best = v;
          }
          onehot.at(i, best) = 1.0;
        }
        selected = g.straight_through(soft, std::move(onehot));
      }
    }
    group_codes.push_back(g.matmul(selected, codebook));
  }
  out.codes = g.concat_cols(group_codes);
  return out;
}

NodeP contrastive_loss(Graph& g, NodeP c_proj, NodeP q_proj, int negatives,
                       double kappa, Rng& rng, bool* with_replacement) {
  if (negatives < 1) {
    throw std::invalid_argument("contrastive_loss: need at least one negative");
  }
  if (kappa <= 0.0) {
    throw std::invalid_argument("contrastive_loss: kappa must be > 0");
  }
  const std::size_t m = c_proj->value.rows();
  check_shape(q_proj->value.rows() == m, "contrastive_loss rows");
  if (m == 0) throw std::invalid_argument("contrastive_loss: empty batch");

  NodeP nc = g.normalize_rows(c_proj);
  NodeP nq = g.normalize_rows(q_proj);
  const auto k = static_cast<std::size_t>(negatives);
  const bool replace = m - 1 < k;
  if (with_replacement) *with_replacement = replace;

  NodeP sum;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::size_t> cand;
    cand.reserve(k + 1);
    cand.push_back(i);  // positive first
    if (replace) {
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t pick_ix;
        if (m == 1) {
          pick_ix = i;  // degenerate: the positive doubles as distractor
        } else {
          do {
            pick_ix = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(m) - 1));
          } while (pick_ix == i);
        }
        cand.push_back(pick_ix);
      }
    } else {
      // partial Fisher-Yates over the other masked frames
      std::vector<std::size_t> pool;
      pool.reserve(m - 1);
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i) pool.push_back(j);
      }
      for (std::size_t j = 0; j < k; ++j) {
        const auto pick_ix = static_cast<std::size_t>(rng.uniform_int(
            static_cast<std::int64_t>(j), static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[j], pool[pick_ix]);
        cand.push_back(pool[j]);
      }
    }
    NodeP anchor = g.gather_rows(nc, {i});          // [1, d]
    NodeP targets = g.gather_rows(nq, cand);        // [K+1, d]
    NodeP scores = g.scale(g.matmul_nt(anchor, targets), 1.0 / kappa);
    NodeP ls = g.log_softmax_rows(scores);
    NodeP li = g.scale(g.pick(ls, 0, 0), -1.0);
    sum = sum ? g.add(sum, li) : li;
  }
  return g.scale(sum, 1.0 / static_cast<double>(m));
}

NodeP diversity_loss(Graph& g, const std::vector<NodeP>& select_probs) {
  if (select_probs.empty()) {
    throw std::invalid_argument("diversity_loss: no selection probabilities");
  }
  const auto groups = select_probs.size();
  const auto entries = select_probs[0]->value.cols();
  NodeP perp_sum;
  for (const auto& probs : select_probs) {
    check_shape(probs->value.cols() == entries, "diversity_loss entries");
    NodeP pbar = g.mean_rows(probs);
    NodeP entropy = g.scale(g.sum_all(g.hadamard(pbar, g.log_el(pbar))), -1.0);
    NodeP perp = g.exp_el(entropy);
    perp_sum = perp_sum ? g.add(perp_sum, perp) : perp;
  }
  const double gv = static_cast<double>(groups * entries);
  return g.affine(perp_sum, -1.0 / gv, 1.0);
}

void add_ssl_parameters(Parameters& params, const ModelConfig& cfg,
                        const SSLConfig& ssl, std::uint64_t seed) {
  ssl.validate();
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto gv = static_cast<std::size_t>(ssl.quant.groups * ssl.quant.entries);
  const auto pd = static_cast<std::size_t>(ssl.proj_dim);
  const auto cd = static_cast<std::size_t>(ssl.quant.code_dim);
  auto init = [&](const std::string& name, std::vector<std::size_t> shape,
                  double stddev) {
    Tensor t(std::move(shape));
    Rng rng(derive_seed(seed, "init:" + name));
    for (auto& v : t.data) v = stddev * rng.gaussian();
    params[name] = std::move(t);
  };
  init("ssl.quant.logits.weight", {d, gv}, 1.0 / std::sqrt(static_cast<double>(d)));
  params["ssl.quant.logits.bias"] = Tensor({gv});
  for (int grp = 0; grp < ssl.quant.groups; ++grp) {
    init("ssl.quant.codebook" + std::to_string(grp),
         {static_cast<std::size_t>(ssl.quant.entries), cd}, 1.0);
  }
  init("ssl.final_proj.weight", {d, pd}, 1.0 / std::sqrt(static_cast<double>(d)));
  params["ssl.final_proj.bias"] = Tensor({pd});
  init("ssl.quant_proj.weight", {static_cast<std::size_t>(ssl.quant.groups) * cd, pd},
       1.0 / std::sqrt(static_cast<double>(ssl.quant.groups * ssl.quant.code_dim)));
  params["ssl.quant_proj.bias"] = Tensor({pd});
}

void strip_ssl_parameters(Parameters& params) {
  for (auto it = params.begin(); it != params.end();) {
    if (it->first.rfind(kSslPrefix, 0) == 0 ||
        it->first.rfind(kHeadPrefix, 0) == 0) {
      it = params.erase(it);
    } else {
      ++it;
    }
  }
}

namespace {

NodeP ssl_linear(Graph& g, const BoundParams& bp, const std::string& name,
                 NodeP x) {
  return g.add_row_vector(g.matmul(x, bp.at(name + ".weight")),
                          bp.at(name + ".bias"));
}

struct SslItemOut {
  GradMap grads;
  double loss = 0.0;
  double contrastive = 0.0;
  double diversity = 0.0;
};

}  // namespace

Checkpoint ssl_train(const ModelConfig& cfg_in, const Manifest& unlabeled,
                     const SSLConfig& ssl, const TrainPlan& plan,
                     const std::string& log_path) {
  ssl.validate();
  plan.validate();
  if (unlabeled.utterances.empty()) {
    throw std::invalid_argument("ssl_train: empty unlabeled split");
  }
  ModelConfig cfg = cfg_in;
  cfg.vocab_size = 0;  // no head during self-supervision
  Parameters params = init_parameters(cfg, plan.seed);
  add_ssl_parameters(params, cfg, ssl, plan.seed);

  UpdateEngine engine(&params, plan);
  Rng batch_rng(derive_seed(plan.seed, "ssl.batch"));
  std::ostringstream log;

  const std::size_t n_utts = unlabeled.utterances.size();
  while (!engine.finished()) {
    const long update = engine.updates_done();
    for (int acc = 0; acc < plan.accumulation; ++acc) {
      std::vector<std::size_t> picks(static_cast<std::size_t>(ssl.batch_items));
      for (auto& p : picks) {
        p = static_cast<std::size_t>(
            batch_rng.uniform_int(0, static_cast<std::int64_t>(n_utts) - 1));
      }
      std::vector<SslItemOut> outs(picks.size());
      const double temp = ssl.quant.temperature(update);
      std::set<std::string> trainable;
      for (const auto& [name, t] : params) trainable.insert(name);
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(picks.size()); ++ip) {
        const auto item = static_cast<std::size_t>(ip);
        const Utterance& utt = unlabeled.utterances[picks[item]];
        const std::uint64_t item_seed = derive_seed(
            plan.seed, "ssl.item",
            static_cast<std::uint64_t>(update) * 1000 + static_cast<std::uint64_t>(acc),
            item);
        Graph g;
        BoundParams bp = bind_parameters(g, params, trainable);
        NodeP z = encode_features(g, bp, cfg, utt.waveform);
        MaskSpec mspec = ssl.mask;
        mspec.mode = MaskSpec::Mode::kTime;
        mspec.seed = item_seed;
        MaskInfo mask = sample_mask(mspec, static_cast<int>(z->value.rows()),
                                    cfg.d_model);
        if (!mask.any_time()) {
          // force one span so every item yields targets
          Rng force(derive_seed(item_seed, "mask-force"));
          const auto start = static_cast<std::size_t>(force.uniform_int(
              0, static_cast<std::int64_t>(mask.time.size()) - 1));
          for (std::size_t j = start;
               j < std::min(mask.time.size(), start + static_cast<std::size_t>(mspec.time_span));
               ++j) {
            mask.time[j] = 1;
          }
        }
        NodeP z_prime = apply_mask(g, bp, z, mask, MaskSpec::Mode::kTime);
        Rng drop_rng(derive_seed(item_seed, "dropout"));
        ForwardOptions fo;
        fo.training = true;
        fo.dropout_rng = &drop_rng;
        auto c = context_forward(g, bp, cfg, z_prime, fo);
        const auto masked_idx = mask.time_indices();
        NodeP c_masked = g.gather_rows(c.back(), masked_idx);
        NodeP c_proj = ssl_linear(g, bp, "ssl.final_proj", c_masked);
        NodeP z_masked = g.gather_rows(z, masked_idx);
        Rng gumbel_rng(derive_seed(item_seed, "gumbel"));
        QuantizeResult qr = quantize(g, bp, ssl.quant, z_masked,
                                     QuantMode::kStraightThrough, temp,
                                     &gumbel_rng);
        NodeP q_proj = ssl_linear(g, bp, "ssl.quant_proj", qr.codes);
        Rng neg_rng(derive_seed(item_seed, "negatives"));
        NodeP contrast =
            contrastive_loss(g, c_proj, q_proj, ssl.negatives, ssl.kappa, neg_rng);
        NodeP diversity = diversity_loss(g, qr.select_probs);
        NodeP loss = g.add(contrast, g.scale(diversity, ssl.alpha));
        g.backward(loss);
        outs[item].loss = loss->value.data[0];
        outs[item].contrastive = contrast->value.data[0];
        outs[item].diversity = diversity->value.data[0];
        collect_param_grads(bp, outs[item].grads);
      }
      // deterministic reduction in item order
      GradMap grads;
      double loss_sum = 0.0, c_sum = 0.0, d_sum = 0.0;
      for (const auto& o : outs) {
        if (!std::isfinite(o.loss)) {
          throw std::runtime_error("ssl_train: non-finite loss at update " +
                                   std::to_string(update));
        }
        loss_sum += o.loss;
        c_sum += o.contrastive;
        d_sum += o.diversity;
        for (const auto& [name, gt] : o.grads) {
          auto it = grads.find(name);
          if (it == grads.end()) {
            grads[name] = gt;
          } else {
            for (std::size_t i = 0; i < gt.numel(); ++i) {
              it->second.data[i] += gt.data[i];
            }
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(outs.size());
      for (auto& [name, gt] : grads) {
        for (auto& v : gt.data) v *= inv;
      }
      auto rec = engine.feed(grads, loss_sum * inv, c_sum * inv, d_sum * inv, 0.0);
      if (rec) log << rec->to_json_line() << "\n";
    }
  }
  if (!log_path.empty()) atomic_write_file(log_path, log.str());

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = std::move(params);
  return ckpt;
}

}  // namespace semivox
