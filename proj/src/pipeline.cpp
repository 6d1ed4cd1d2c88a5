// semivox/pipeline.cpp

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

#include "semivox/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "semivox/fileutil.hpp"
#include "semivox/kernels.hpp"
#include "semivox/ssl.hpp"

namespace semivox {

PseudoLabel pseudo_label_from_logprobs(const LogProbs& lp,
                                       const std::string& utt_id,
                                       long update) {
  PseudoLabel pl;
  pl.utterance_id = utt_id;
  pl.tokens = greedy_decode(lp);
  pl.producer_update = update;
  return pl;
}

PseudoLabel pseudo_label(const Parameters& params, const ModelConfig& cfg,
                         const Utterance& utt, long update) {
  LogProbs lp;
  lp.m = forward_logprobs(params, cfg, utt.waveform);
  return pseudo_label_from_logprobs(lp, utt.id, update);
}

namespace {

struct ItemOutcome {
  bool used = false;
  bool skipped_empty = false;
  double loss = 0.0;
  std::size_t pseudo_len = 0;
  GradMap grads;
};

// Forward on augmented input and CTC against `label`; backward when
// want_grads. Gradient is of the raw per-item loss; weighting happens at
// reduction time.
ItemOutcome item_ctc_pass(const Parameters& params, const ModelConfig& cfg,
                          const SemiBatchItem& item,
                          const std::vector<int>& label,
                          const SemiOptions& opts, bool want_grads,
                          const std::set<std::string>& trainable) {
  ItemOutcome out;
  Graph g;
  BoundParams bp =
      bind_parameters(g, params, want_grads ? trainable : std::set<std::string>{});
  NodeP z = encode_features(g, bp, cfg, item.utt->waveform);
  MaskSpec aug = opts.mask;
  aug.seed = item.aug_seed;
  const MaskInfo mask =
      sample_mask(aug, static_cast<int>(z->value.rows()), cfg.d_model);
  NodeP z_prime = apply_mask(g, bp, z, mask, aug.mode);
  Rng drop_rng(derive_seed(item.aug_seed, "dropout"));
  ForwardOptions fo;
  fo.training = true;
  fo.dropout_rng = &drop_rng;
  auto c = context_forward(g, bp, cfg, z_prime, fo);
  NodeP logits = project_logits(g, bp, cfg, c.back());
  NodeP logprobs = g.log_softmax_rows(logits);
  LogProbs lp;
  lp.m = logprobs->value;
  const CtcResult ctc = ctc_loss(lp, label, want_grads);
  out.loss = ctc.loss;
  out.used = true;
  if (want_grads) {
    NodeP loss_node = g.custom_scalar(logprobs, ctc.loss, ctc.grad);
    g.backward(loss_node);
    collect_param_grads(bp, out.grads);
  }
  return out;
}

void scaled_accumulate(GradMap& into, const GradMap& from, double w) {
  for (const auto& [name, g] : from) {
    auto it = into.find(name);
    if (it == into.end()) {
      Tensor t = g;
      for (auto& v : t.data) v *= w;
      into[name] = std::move(t);
    } else {
      for (std::size_t i = 0; i < g.numel(); ++i) {
        it->second.data[i] += w * g.data[i];
      }
    }
  }
}

}  // namespace

SemiLossResult semi_loss(const Parameters& params, const ModelConfig& cfg,
                         const std::vector<SemiBatchItem>& batch,
                         const SemiOptions& opts, bool want_grads,
                         const std::set<std::string>& trainable, long update) {
  if (opts.lambda < 0.0) throw std::invalid_argument("semi_loss: lambda < 0");
  SemiLossResult res;

  // Pass 1: pseudo-label the unlabeled items on clean input at the current
  // parameters. Labels are argmax-detached; no gradient flows through this
  // pass.
  std::vector<std::vector<int>> labels(batch.size());
  std::vector<char> use(batch.size(), 0);
  const bool unlabeled_active = opts.lambda > 0.0;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(batch.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    const SemiBatchItem& item = batch[i];
    if (item.labeled) {
      labels[i] = item.label;
      use[i] = 1;
    } else if (unlabeled_active) {
      const PseudoLabel pl = pseudo_label(params, cfg, *item.utt, update);
      labels[i] = pl.tokens;
      use[i] = 1;
    }
  }
  std::size_t pseudo_len_sum = 0;
  int n_pseudo = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].labeled || !use[i]) continue;
    ++n_pseudo;
    pseudo_len_sum += labels[i].size();
    if (labels[i].empty() && opts.skip_empty_pseudo) {
      use[i] = 0;
      ++res.n_skipped_empty;
    }
  }
  res.pseudo_len_mean =
      n_pseudo > 0 ? static_cast<double>(pseudo_len_sum) / n_pseudo : 0.0;

  // Pass 2: CTC on augmented input for every active item.
  std::vector<ItemOutcome> outs(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(batch.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    if (!use[i]) continue;
    outs[i] = item_ctc_pass(params, cfg, batch[i], labels[i], opts, want_grads,
                            trainable);
  }

  int n_lab = 0, n_unlab = 0;
  double lab_sum = 0.0, unlab_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!use[i] || !outs[i].used) continue;
    if (batch[i].labeled) {
      ++n_lab;
      lab_sum += outs[i].loss;
    } else {
      ++n_unlab;
      unlab_sum += outs[i].loss;
    }
  }
  res.n_labeled = n_lab;
  res.n_unlabeled_used = n_unlab;
  res.label_loss = n_lab > 0 ? lab_sum / n_lab : 0.0;
  res.unlabel_loss = n_unlab > 0 ? unlab_sum / n_unlab : 0.0;
  res.all_unlabeled_skipped = unlabeled_active && n_unlab == 0;
  res.total = res.label_loss + opts.lambda * res.unlabel_loss;

  if (want_grads) {
    const double w_lab = n_lab > 0 ? 1.0 / n_lab : 0.0;
    const double w_unlab = n_unlab > 0 ? opts.lambda / n_unlab : 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!use[i] || !outs[i].used) continue;
      scaled_accumulate(res.grads, outs[i].grads,
                        batch[i].labeled ? w_lab : w_unlab);
    }
  }
  return res;
}

namespace {

std::vector<int> encode_checked(const Vocabulary& vocab, const Utterance& utt) {
  try {
    return vocab.encode(utt.transcript);
  } catch (const std::exception& e) {
    throw std::invalid_argument("vocabulary mismatch for utterance " + utt.id +
                                ": " + e.what());
  }
}

TrainOutcome run_ctc_training(Parameters params, ModelConfig cfg,
                              const Manifest& labeled,
                              const Manifest* unlabeled,
                              const Vocabulary& vocab, const StageConfig& stage,
                              const TrainPlan& plan, const std::string& purpose,
                              const std::string& log_path,
                              const std::string& ckpt_dir) {
  plan.validate();
  if (labeled.utterances.empty()) {
    throw std::invalid_argument(purpose + ": empty labeled split");
  }
  // encode up front; also validates every transcript against the vocabulary
  std::vector<std::vector<int>> enc(labeled.utterances.size());
  for (std::size_t i = 0; i < labeled.utterances.size(); ++i) {
    enc[i] = encode_checked(vocab, labeled.utterances[i]);
  }

  UpdateEngine engine(&params, plan);
  Rng lab_rng(derive_seed(plan.seed, purpose + ".batch.labeled"));
  Rng unlab_rng(derive_seed(plan.seed, purpose + ".batch.unlabeled"));
  std::ostringstream log;
  const bool use_unlabeled = unlabeled != nullptr &&
                             !unlabeled->utterances.empty() &&
                             stage.semi.lambda > 0.0 &&
                             stage.batch_unlabeled > 0;

  while (!engine.finished()) {
    const long update = engine.updates_done();
    const auto trainable = trainable_names(plan, params, update);
    for (int acc = 0; acc < plan.accumulation; ++acc) {
      std::vector<SemiBatchItem> batch;
      for (int i = 0; i < stage.batch_labeled; ++i) {
        const auto pick = static_cast<std::size_t>(lab_rng.uniform_int(
            0, static_cast<std::int64_t>(labeled.utterances.size()) - 1));
        SemiBatchItem item;
        item.utt = &labeled.utterances[pick];
        item.labeled = true;
        item.label = enc[pick];
        item.aug_seed = derive_seed(
            plan.seed, purpose + ".aug.labeled",
            static_cast<std::uint64_t>(update) * 1000 + static_cast<std::uint64_t>(acc),
            static_cast<std::uint64_t>(i));
        batch.push_back(std::move(item));
      }
      if (use_unlabeled) {
        for (int i = 0; i < stage.batch_unlabeled; ++i) {
          const auto pick = static_cast<std::size_t>(unlab_rng.uniform_int(
              0, static_cast<std::int64_t>(unlabeled->utterances.size()) - 1));
          SemiBatchItem item;
          item.utt = &unlabeled->utterances[pick];
          item.labeled = false;
          item.aug_seed = derive_seed(
              plan.seed, purpose + ".aug.unlabeled",
              static_cast<std::uint64_t>(update) * 1000 + static_cast<std::uint64_t>(acc),
              static_cast<std::uint64_t>(i));
          batch.push_back(std::move(item));
        }
      }
      const SemiLossResult r = semi_loss(params, cfg, batch, stage.semi, true,
                                         trainable, update);
      auto rec = engine.feed(r.grads, r.total, r.label_loss, r.unlabel_loss,
                             r.pseudo_len_mean);
      if (rec) {
        log << rec->to_json_line() << "\n";
        if (plan.checkpoint_every > 0 && !ckpt_dir.empty() &&
            (rec->update + 1) % plan.checkpoint_every == 0) {
          Checkpoint mid;
          mid.config = cfg;
          mid.params = params;
          mid.meta["update"] = rec->update + 1;
          save_checkpoint(
              ckpt_dir + "/ckpt-" + std::to_string(rec->update + 1) + ".w2vs",
              mid);
        }
      }
    }
  }
  if (!log_path.empty()) atomic_write_file(log_path, log.str());

  TrainOutcome out;
  out.checkpoint.config = cfg;
  out.checkpoint.params = std::move(params);
  return out;
}

}  // namespace

TrainOutcome semi_pretrain(const std::optional<Checkpoint>& init,
                           const ModelConfig& cfg_in, const Manifest& labeled,
                           const Manifest& unlabeled, const Vocabulary& vocab,
                           const StageConfig& stage, const TrainPlan& plan,
                           const std::string& log_path,
                           const std::string& ckpt_dir) {
  ModelConfig cfg = init ? init->config : cfg_in;
  Parameters params;
  if (init) {
    params = init->params;
    strip_ssl_parameters(params);  // drops quantizer and any head
  } else {
    ModelConfig headless = cfg_in;
    headless.vocab_size = 0;
    params = init_parameters(headless, plan.seed);
  }
  cfg.vocab_size = vocab.size();
  reset_head(params, cfg, derive_seed(plan.seed, "semi.head"));

  TrainPlan p = plan;
  p.freeze.push_back({kEncoderPrefix, -1});  // conv encoder fixed in stage 2

  return run_ctc_training(std::move(params), cfg, labeled, &unlabeled, vocab,
                          stage, p, "semi", log_path, ckpt_dir);
}

TrainOutcome finetune(const Checkpoint& init, const Manifest& target,
                      const Vocabulary& vocab, const StageConfig& stage,
                      const TrainPlan& plan, long unfreeze_at,
                      const std::string& log_path,
                      const std::string& ckpt_dir) {
  ModelConfig cfg = init.config;
  Parameters params = init.params;
  strip_ssl_parameters(params);
  // fresh head even when the vocabulary matches; required for cross-lingual
  cfg.vocab_size = vocab.size();
  reset_head(params, cfg, derive_seed(plan.seed, "finetune.head"));

  TrainPlan p = plan;
  p.freeze.push_back({kEncoderPrefix, -1});
  p.freeze.push_back({kContextPrefix, unfreeze_at});
  p.freeze.push_back({kMaskEmbedName, unfreeze_at});

  StageConfig st = stage;
  st.batch_unlabeled = 0;
  st.semi.lambda = 0.0;

  return run_ctc_training(std::move(params), cfg, target, nullptr, vocab, st, p,
                          "finetune", log_path, ckpt_dir);
}

std::string EvalReport::csv_row() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f", split.c_str(), utterances,
                wer, cer);
  return std::string(buf);
}

EvalReport evaluate_logprobs(const std::vector<LogProbs>& lps,
                             const std::vector<std::vector<int>>& refs,
                             const Vocabulary& vocab, const CharNGramLM* lm,
                             const DecodeConfig& decode,
                             const std::string& split_name) {
  if (lps.size() != refs.size()) {
    throw std::invalid_argument("evaluate: hypothesis/reference size mismatch");
  }
  std::vector<std::vector<int>> hyps(lps.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(lps.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    if (decode.mode == "greedy") {
      hyps[i] = greedy_decode(lps[i]);
    } else {
      BeamConfig bc;
      bc.beam_width = decode.beam_width;
      bc.lm_weight = decode.lm_weight;
      bc.ins_bonus = decode.ins_bonus;
      hyps[i] = beam_decode(lps[i], lm, bc);
    }
  }
  std::size_t tok_err = 0, tok_ref = 0, chr_err = 0, chr_ref = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    tok_err += edit_distance(refs[i], hyps[i]);
    tok_ref += refs[i].size();
    // character level over the concatenated token strings
    std::vector<int> rc, hc;
    for (int id : refs[i]) {
      for (unsigned char ch : vocab.tokens[static_cast<std::size_t>(id)]) {
        rc.push_back(ch);
      }
    }
    for (int id : hyps[i]) {
      for (unsigned char ch : vocab.tokens[static_cast<std::size_t>(id)]) {
        hc.push_back(ch);
      }
    }
    chr_err += edit_distance(rc, hc);
    chr_ref += rc.size();
  }
  EvalReport rep;
  rep.split = split_name;
  rep.utterances = static_cast<int>(refs.size());
  rep.wer = static_cast<double>(tok_err) /
            static_cast<double>(std::max<std::size_t>(1, tok_ref));
  rep.cer = static_cast<double>(chr_err) /
            static_cast<double>(std::max<std::size_t>(1, chr_ref));
  return rep;
}

EvalReport evaluate(const Checkpoint& ckpt, const Manifest& split,
                    const Vocabulary& vocab,
                    const std::vector<std::vector<int>>& lm_texts,
                    const DecodeConfig& decode, const std::string& split_name) {
  if (ckpt.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("evaluate: head width does not match vocabulary");
  }
  std::vector<LogProbs> lps(split.utterances.size());
  std::vector<std::vector<int>> refs(split.utterances.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0;
       ip < static_cast<std::ptrdiff_t>(split.utterances.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    lps[i].m = forward_logprobs(ckpt.params, ckpt.config,
                                split.utterances[i].waveform);
    refs[i] = vocab.encode(split.utterances[i].transcript);
  }
  CharNGramLM lm;
  const CharNGramLM* lm_ptr = nullptr;
  if (decode.mode == "beam" && decode.lm_weight != 0.0 && !lm_texts.empty()) {
    lm = train_char_lm(lm_texts, decode.lm_order, decode.lm_k, vocab.size());
    lm_ptr = &lm;
  }
  return evaluate_logprobs(lps, refs, vocab, lm_ptr, decode, split_name);
}

std::vector<std::vector<int>> encode_transcripts(const Manifest& m,
                                                 const Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(m.utterances.size());
  for (const auto& u : m.utterances) {
    if (!u.labeled) continue;
    out.push_back(vocab.encode(u.transcript));
  }
  return out;
}

}  // namespace semivox
