// semivox/config.cpp

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

#include "semivox/config.hpp"

#include <cmath>
#include <set>

#include "semivox/fileutil.hpp"

namespace semivox {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config: " + path + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" +
                        (path.empty() ? key : path + "." + key) + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

PlanSection parse_plan(const json& j, const std::string& path,
                       const PlanSection& defaults,
                       const std::set<std::string>& extra_allowed) {
  std::set<std::string> allowed = {"updates",     "accumulation",
                                   "max_lr",      "warmup_frac",
                                   "hold_frac",   "decay_frac",
                                   "checkpoint_every"};
  allowed.insert(extra_allowed.begin(), extra_allowed.end());
  check_keys(j, path, allowed);
  PlanSection p = defaults;
  p.updates = get_or(j, "updates", p.updates);
  p.accumulation = get_or(j, "accumulation", p.accumulation);
  p.max_lr = get_or(j, "max_lr", p.max_lr);
  p.warmup_frac = get_or(j, "warmup_frac", p.warmup_frac);
  p.hold_frac = get_or(j, "hold_frac", p.hold_frac);
  p.decay_frac = get_or(j, "decay_frac", p.decay_frac);
  p.checkpoint_every = get_or(j, "checkpoint_every", p.checkpoint_every);
  return p;
}

MaskSpec parse_mask(const json& j, const std::string& path, MaskSpec defaults) {
  check_keys(j, path,
             {"time_prob", "time_span", "channel_prob", "channel_span"});
  MaskSpec m = defaults;
  m.time_prob = get_or(j, "time_prob", m.time_prob);
  m.time_span = get_or(j, "time_span", m.time_span);
  m.channel_prob = get_or(j, "channel_prob", m.channel_prob);
  m.channel_span = get_or(j, "channel_span", m.channel_span);
  m.validate();
  return m;
}

}  // namespace

TrainPlan PlanSection::to_plan(std::uint64_t seed, double lambda) const {
  TrainPlan plan;
  plan.max_lr = max_lr;
  plan.warmup_frac = warmup_frac;
  plan.hold_frac = hold_frac;
  plan.decay_frac = decay_frac;
  plan.total_updates = updates;
  plan.accumulation = accumulation;
  plan.checkpoint_every = checkpoint_every;
  plan.seed = seed;
  plan.lambda = lambda;
  plan.validate();
  return plan;
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, "", {"seed", "out", "corpus", "model", "ssl", "semi",
                     "finetune", "decode", "analysis"});
  if (!j.contains("seed")) throw ConfigError("config: 'seed' is mandatory");
  if (!j.contains("out")) throw ConfigError("config: 'out' is mandatory");
  RunConfig cfg;
  try {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out = j.at("out").get<std::string>();

    if (j.contains("corpus")) {
      const json& c = j.at("corpus");
      check_keys(c, "corpus",
                 {"sample_rate", "tokens_per_second", "source_tokens",
                  "freq_base", "freq_step", "crosslingual_tokens",
                  "crosslingual_freq_base", "crosslingual_freq_step", "noise",
                  "tempo", "crossdomain_noise", "crossdomain_tempo",
                  "transcript_min", "transcript_max", "pretrain_labeled",
                  "pretrain_unlabeled", "finetune_size", "dev_size",
                  "test_size", "labeled_overlap"});
      CorpusConfig& cc = cfg.corpus;
      cc.sample_rate = get_or(c, "sample_rate", cc.sample_rate);
      cc.tokens_per_second = get_or(c, "tokens_per_second", cc.tokens_per_second);
      cc.source_tokens = get_or(c, "source_tokens", cc.source_tokens);
      cc.freq_base = get_or(c, "freq_base", cc.freq_base);
      cc.freq_step = get_or(c, "freq_step", cc.freq_step);
      cc.crosslingual_tokens =
          get_or(c, "crosslingual_tokens", cc.crosslingual_tokens);
      cc.crosslingual_freq_base =
          get_or(c, "crosslingual_freq_base", cc.crosslingual_freq_base);
      cc.crosslingual_freq_step =
          get_or(c, "crosslingual_freq_step", cc.crosslingual_freq_step);
      cc.noise = get_or(c, "noise", cc.noise);
      cc.tempo = get_or(c, "tempo", cc.tempo);
      cc.crossdomain_noise = get_or(c, "crossdomain_noise", cc.crossdomain_noise);
      cc.crossdomain_tempo = get_or(c, "crossdomain_tempo", cc.crossdomain_tempo);
      cc.transcript_min = get_or(c, "transcript_min", cc.transcript_min);
      cc.transcript_max = get_or(c, "transcript_max", cc.transcript_max);
      cc.pretrain_labeled = get_or(c, "pretrain_labeled", cc.pretrain_labeled);
      cc.pretrain_unlabeled =
          get_or(c, "pretrain_unlabeled", cc.pretrain_unlabeled);
      cc.finetune_size = get_or(c, "finetune_size", cc.finetune_size);
      cc.dev_size = get_or(c, "dev_size", cc.dev_size);
      cc.test_size = get_or(c, "test_size", cc.test_size);
      cc.labeled_overlap = get_or(c, "labeled_overlap", cc.labeled_overlap);
      cc.seed = cfg.seed;
      cc.validate();
    } else {
      cfg.corpus.seed = cfg.seed;
    }

    if (j.contains("model")) {
      const json& m = j.at("model");
      check_keys(m, "model",
                 {"conv", "d_model", "n_heads", "n_layers", "ffn_dim",
                  "dropout", "activation"});
      ModelConfig& mc = cfg.model;
      if (m.contains("conv")) {
        mc.conv.clear();
        for (const auto& layer : m.at("conv")) {
          mc.conv.push_back({layer.at(0).get<int>(), layer.at(1).get<int>(),
                             layer.at(2).get<int>()});
        }
      }
      mc.d_model = get_or(m, "d_model", mc.d_model);
      mc.n_heads = get_or(m, "n_heads", mc.n_heads);
      mc.n_layers = get_or(m, "n_layers", mc.n_layers);
      mc.ffn_dim = get_or(m, "ffn_dim", mc.ffn_dim);
      mc.dropout = get_or(m, "dropout", mc.dropout);
      mc.activation = get_or(m, "activation", mc.activation);
      mc.validate();
    }

    if (j.contains("ssl")) {
      const json& s = j.at("ssl");
      cfg.ssl.plan = parse_plan(
          s, "ssl", cfg.ssl.plan,
          {"batch_items", "negatives", "kappa", "alpha", "proj_dim", "quant",
           "mask"});
      SSLConfig& sc = cfg.ssl.ssl;
      sc.batch_items = get_or(s, "batch_items", sc.batch_items);
      sc.negatives = get_or(s, "negatives", sc.negatives);
      sc.kappa = get_or(s, "kappa", sc.kappa);
      sc.alpha = get_or(s, "alpha", sc.alpha);
      sc.proj_dim = get_or(s, "proj_dim", sc.proj_dim);
      if (s.contains("quant")) {
        const json& q = s.at("quant");
        check_keys(q, "ssl.quant",
                   {"groups", "entries", "code_dim", "temp_start", "temp_end",
                    "temp_decay"});
        QuantizerConfig& qc = sc.quant;
        qc.groups = get_or(q, "groups", qc.groups);
        qc.entries = get_or(q, "entries", qc.entries);
        qc.code_dim = get_or(q, "code_dim", qc.code_dim);
        qc.temp_start = get_or(q, "temp_start", qc.temp_start);
        qc.temp_end = get_or(q, "temp_end", qc.temp_end);
        qc.temp_decay = get_or(q, "temp_decay", qc.temp_decay);
      }
      if (s.contains("mask")) {
        sc.mask = parse_mask(s.at("mask"), "ssl.mask", sc.mask);
      }
      sc.validate();
    }

    if (j.contains("semi")) {
      const json& s = j.at("semi");
      cfg.semi.plan = parse_plan(
          s, "semi", cfg.semi.plan,
          {"batch_labeled", "batch_unlabeled", "lambda", "skip_empty_pseudo",
           "mask", "supervision", "scratch_updates"});
      cfg.semi.batch_labeled = get_or(s, "batch_labeled", cfg.semi.batch_labeled);
      cfg.semi.batch_unlabeled =
          get_or(s, "batch_unlabeled", cfg.semi.batch_unlabeled);
      cfg.semi.lambda = get_or(s, "lambda", cfg.semi.lambda);
      cfg.semi.skip_empty_pseudo =
          get_or(s, "skip_empty_pseudo", cfg.semi.skip_empty_pseudo);
      cfg.semi.supervision = get_or(s, "supervision", cfg.semi.supervision);
      cfg.semi.scratch_updates =
          get_or(s, "scratch_updates", cfg.semi.scratch_updates);
      cfg.semi.mask.mode = MaskSpec::Mode::kTimeChannel;
      if (s.contains("mask")) {
        cfg.semi.mask = parse_mask(s.at("mask"), "semi.mask", cfg.semi.mask);
        cfg.semi.mask.mode = MaskSpec::Mode::kTimeChannel;
      }
      if (cfg.semi.lambda < 0.0) throw ConfigError("config: semi.lambda < 0");
      if (cfg.semi.supervision != "char" && cfg.semi.supervision != "phone") {
        throw ConfigError("config: semi.supervision must be char or phone");
      }
    } else {
      cfg.semi.mask.mode = MaskSpec::Mode::kTimeChannel;
    }

    if (j.contains("finetune")) {
      const json& f = j.at("finetune");
      cfg.finetune.plan =
          parse_plan(f, "finetune", cfg.finetune.plan,
                     {"updates_small", "batch_items", "unfreeze_at", "mask"});
      cfg.finetune.updates_small =
          get_or(f, "updates_small", cfg.finetune.updates_small);
      cfg.finetune.batch_items = get_or(f, "batch_items", cfg.finetune.batch_items);
      cfg.finetune.unfreeze_at =
          get_or(f, "unfreeze_at", cfg.finetune.unfreeze_at);
      cfg.finetune.mask.mode = MaskSpec::Mode::kTimeChannel;
      if (f.contains("mask")) {
        cfg.finetune.mask =
            parse_mask(f.at("mask"), "finetune.mask", cfg.finetune.mask);
        cfg.finetune.mask.mode = MaskSpec::Mode::kTimeChannel;
      }
    } else {
      cfg.finetune.mask.mode = MaskSpec::Mode::kTimeChannel;
    }
    if (cfg.finetune.updates_small < 0) {
      // the small-target budget keeps the 13:20 ratio of the default plans
      cfg.finetune.updates_small = static_cast<int>(
          std::lround(cfg.finetune.plan.updates * 13.0 / 20.0));
    }

    if (j.contains("decode")) {
      const json& d = j.at("decode");
      check_keys(d, "decode",
                 {"mode", "beam_width", "lm_weight", "ins_bonus", "lm_order",
                  "lm_k"});
      DecodeConfig& dc = cfg.decode;
      dc.mode = get_or(d, "mode", dc.mode);
      dc.beam_width = get_or(d, "beam_width", dc.beam_width);
      dc.lm_weight = get_or(d, "lm_weight", dc.lm_weight);
      dc.ins_bonus = get_or(d, "ins_bonus", dc.ins_bonus);
      dc.lm_order = get_or(d, "lm_order", dc.lm_order);
      dc.lm_k = get_or(d, "lm_k", dc.lm_k);
      if (dc.mode != "greedy" && dc.mode != "beam") {
        throw ConfigError("config: decode.mode must be greedy or beam");
      }
      if (dc.mode == "beam" && dc.beam_width < 1 && dc.beam_width != -1) {
        throw ConfigError("config: decode.beam_width must be >= 1 (or -1)");
      }
    }

    if (j.contains("analysis")) {
      const json& a = j.at("analysis");
      check_keys(a, "analysis", {"retain", "probe", "include_conv"});
      cfg.analysis.retain = get_or(a, "retain", cfg.analysis.retain);
      cfg.analysis.probe = get_or(a, "probe", cfg.analysis.probe);
      cfg.analysis.include_conv =
          get_or(a, "include_conv", cfg.analysis.include_conv);
      if (cfg.analysis.retain <= 0.0 || cfg.analysis.retain > 1.0) {
        throw ConfigError("config: analysis.retain out of range");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.document = j;
  cfg.config_hash = bytes_hash_hex(j.dump());
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  if (!file_exists(path)) {
    throw MissingInputError("config file not found: " + path);
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json provenance_stamp(const RunConfig& cfg, const std::string& stage,
                                const std::string& parent_ckpt_path) {
  json p;
  p["config_hash"] = cfg.config_hash;
  p["seed"] = cfg.seed;
  p["stage"] = stage;
  p["parent_checkpoint_hash"] =
      parent_ckpt_path.empty() ? json() : json(file_hash_hex(parent_ckpt_path));
  return p;
}

std::string provenance_line(const nlohmann::json& stamp) {
  return "config=" + stamp.at("config_hash").get<std::string>() +
         " seed=" + std::to_string(stamp.at("seed").get<std::uint64_t>()) +
         " stage=" + stamp.at("stage").get<std::string>() + " parent=" +
         (stamp.at("parent_checkpoint_hash").is_null()
              ? std::string("none")
              : stamp.at("parent_checkpoint_hash").get<std::string>());
}

}  // namespace semivox
