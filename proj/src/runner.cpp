// semivox/runner.cpp

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

#include "semivox/runner.hpp"

#include <iostream>
#include <map>
#include <sstream>

#include "semivox/analysis.hpp"
#include "semivox/fileutil.hpp"

namespace semivox {

using nlohmann::json;

std::vector<std::string> runner_methods() {
  return {kMethodScratch, kMethodSslOnly, kMethodSslSemi};
}

std::string corpus_dir(const RunConfig& cfg) { return cfg.out + "/corpus"; }

std::string ckpt_path(const RunConfig& cfg, const std::string& name) {
  return cfg.out + "/ckpt/" + name + ".w2vs";
}

std::string finetune_ckpt_path(const RunConfig& cfg, const std::string& method,
                               const std::string& target) {
  return ckpt_path(cfg, "ft_" + method + "_" + target);
}

namespace {

struct LoadedCorpus {
  Corpus corpus;

  const Manifest& split(const std::string& name) const {
    auto it = corpus.manifests.find(name);
    if (it == corpus.manifests.end()) {
      throw MissingInputError("corpus split not found: " + name);
    }
    return it->second;
  }
  const Vocabulary& vocab_of(const Manifest& m) const {
    auto it = corpus.vocabularies.find(m.vocabulary);
    if (it == corpus.vocabularies.end()) {
      throw VocabMismatchError("vocabulary not found: " + m.vocabulary);
    }
    return it->second;
  }
};

LoadedCorpus load_corpus_checked(const RunConfig& cfg) {
  const std::string dir = corpus_dir(cfg);
  if (!file_exists(dir + "/vocabs.json")) {
    throw MissingInputError("corpus not found under " + dir +
                            " (run the synth stage first)");
  }
  return {load_corpus(dir)};
}

// Applies the configured supervision level to a source-language manifest.
Manifest supervised_view(const RunConfig& cfg, const LoadedCorpus& lc,
                         const Manifest& m) {
  if (cfg.semi.supervision == "char") return m;
  Manifest out = m;
  out.vocabulary = "alpha_phone";
  for (auto& u : out.utterances) {
    if (u.labeled) u = phone_relabel(u, lc.corpus.phone_map);
  }
  return out;
}

void write_metrics(const RunConfig& cfg, const std::string& stage,
                   const json& stamp, json extra) {
  extra["stage"] = stage;
  extra["provenance"] = stamp;
  atomic_write_file(cfg.out + "/metrics/" + stage + ".json",
                    extra.dump(2) + "\n");
}

Checkpoint load_ckpt_checked(const std::string& path) {
  if (!file_exists(path)) {
    throw MissingInputError("checkpoint not found: " + path);
  }
  return load_checkpoint(path);
}

double final_loss_of(const std::string& log_path) {
  if (!file_exists(log_path)) return 0.0;
  std::istringstream in(read_file(log_path));
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  if (last.empty()) return 0.0;
  return json::parse(last).value("loss", 0.0);
}

StageConfig semi_stage_config(const RunConfig& cfg) {
  StageConfig st;
  st.batch_labeled = cfg.semi.batch_labeled;
  st.batch_unlabeled = cfg.semi.batch_unlabeled;
  st.semi.lambda = cfg.semi.lambda;
  st.semi.mask = cfg.semi.mask;
  st.semi.skip_empty_pseudo = cfg.semi.skip_empty_pseudo;
  return st;
}

}  // namespace

void run_synth(const RunConfig& cfg) {
  Corpus corpus = build_corpus(cfg.corpus);
  write_corpus(corpus, corpus_dir(cfg));
  const json stamp = provenance_stamp(cfg, "synth", "");
  json extra;
  extra["splits"] = json::object();
  for (const auto& [name, m] : corpus.manifests) {
    extra["splits"][name] = m.utterances.size();
  }
  write_metrics(cfg, "synth", stamp, extra);
}

void run_pretrain_ssl(const RunConfig& cfg) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  const Manifest& unlabeled = lc.split(kSplitPretrainUnlabeled);
  TrainPlan plan = cfg.ssl.plan.to_plan(derive_seed(cfg.seed, "stage:ssl"));
  Checkpoint ckpt = ssl_train(cfg.model, unlabeled, cfg.ssl.ssl, plan,
                              cfg.out + "/logs/ssl.jsonl");
  const json stamp = provenance_stamp(cfg, "pretrain-ssl", "");
  ckpt.meta = stamp;
  save_checkpoint(ckpt_path(cfg, "ssl"), ckpt);
  json extra;
  extra["updates"] = plan.total_updates;
  extra["final_losses"] = {{"ssl", final_loss_of(cfg.out + "/logs/ssl.jsonl")}};
  write_metrics(cfg, "pretrain-ssl", stamp, extra);
}

void run_pretrain_semi(const RunConfig& cfg, bool from_scratch) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  const Manifest labeled =
      supervised_view(cfg, lc, lc.split(kSplitPretrainLabeled));
  const Manifest unlabeled = lc.split(kSplitPretrainUnlabeled);
  const Vocabulary& vocab = lc.vocab_of(labeled);

  const std::string stage = from_scratch ? "pretrain-scratch" : "pretrain-semi";
  const std::string name = from_scratch ? "scratch" : "semi";
  std::optional<Checkpoint> init;
  std::string parent;
  if (!from_scratch) {
    parent = ckpt_path(cfg, "ssl");
    init = load_ckpt_checked(parent);
  }
  TrainPlan plan = cfg.semi.plan.to_plan(derive_seed(cfg.seed, "stage:" + name),
                                         cfg.semi.lambda);
  if (from_scratch && cfg.semi.scratch_updates >= 0) {
    plan.total_updates = std::max(1, cfg.semi.scratch_updates);
  }
  StageConfig st = semi_stage_config(cfg);
  const std::string log_path = cfg.out + "/logs/" + name + ".jsonl";
  TrainOutcome out = semi_pretrain(init, cfg.model, labeled, unlabeled, vocab,
                                   st, plan, log_path, cfg.out + "/ckpt/" + name);
  const json stamp = provenance_stamp(cfg, stage, parent);
  out.checkpoint.meta = stamp;
  save_checkpoint(ckpt_path(cfg, name), out.checkpoint);

  // quick dev probe on the in-domain split for the metrics file
  const Manifest& dev = lc.split("dev_in_domain");
  EvalReport rep;
  if (dev.vocabulary == labeled.vocabulary) {
    const Manifest& ft = lc.split("finetune_in_domain");
    rep = evaluate(out.checkpoint, dev, vocab, encode_transcripts(ft, vocab),
                   cfg.decode, "dev_in_domain");
  }
  json extra;
  extra["updates"] = plan.total_updates;
  extra["final_losses"] = {{"total", final_loss_of(log_path)}};
  extra["dev_wer"] = rep.utterances > 0 ? json(rep.wer) : json();
  write_metrics(cfg, stage, stamp, extra);
}

void run_finetune(const RunConfig& cfg, const std::string& method,
                  const std::string& target) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  const Manifest& train = lc.split("finetune_" + target);
  const Vocabulary& vocab = lc.vocab_of(train);

  std::string parent;
  if (method == kMethodScratch) {
    parent = ckpt_path(cfg, "scratch");
  } else if (method == kMethodSslOnly) {
    parent = ckpt_path(cfg, "ssl");
  } else if (method == kMethodSslSemi) {
    parent = ckpt_path(cfg, "semi");
  } else {
    throw ConfigError("unknown method: " + method);
  }
  Checkpoint init = load_ckpt_checked(parent);

  TrainPlan plan = cfg.finetune.plan.to_plan(
      derive_seed(cfg.seed, "stage:ft:" + method + ":" + target));
  StageConfig st;
  st.batch_labeled = cfg.finetune.batch_items;
  st.batch_unlabeled = 0;
  st.semi.lambda = 0.0;
  st.semi.mask = cfg.finetune.mask;

  const std::string tag = "ft_" + method + "_" + target;
  const std::string log_path = cfg.out + "/logs/" + tag + ".jsonl";
  TrainOutcome out = finetune(init, train, vocab, st, plan,
                              cfg.finetune.unfreeze_at, log_path,
                              cfg.out + "/ckpt/" + tag);
  const json stamp = provenance_stamp(cfg, tag, parent);
  out.checkpoint.meta = stamp;
  save_checkpoint(finetune_ckpt_path(cfg, method, target), out.checkpoint);

  json extra;
  extra["updates"] = plan.total_updates;
  extra["final_losses"] = {{"ctc", final_loss_of(log_path)}};
  const EvalReport rep =
      evaluate(out.checkpoint, lc.split("dev_" + target), vocab,
               encode_transcripts(train, vocab), cfg.decode, "dev_" + target);
  extra["dev_wer"] = rep.wer;
  write_metrics(cfg, tag, stamp, extra);
}

void run_decode(const RunConfig& cfg, const std::string& ckpt,
                const std::string& split) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  const Manifest& m = lc.split(split);
  const Vocabulary& vocab = lc.vocab_of(m);
  Checkpoint c = load_ckpt_checked(ckpt);
  if (c.config.vocab_size != vocab.size()) {
    throw VocabMismatchError("decode: checkpoint head size " +
                             std::to_string(c.config.vocab_size) +
                             " does not match vocabulary " + m.vocabulary);
  }
  CharNGramLM lm;
  const CharNGramLM* lm_ptr = nullptr;
  const std::string target = split.find('_') != std::string::npos
                                 ? split.substr(split.find('_') + 1)
                                 : split;
  if (cfg.decode.mode == "beam" && cfg.decode.lm_weight != 0.0 &&
      lc.corpus.manifests.count("finetune_" + target)) {
    lm = train_char_lm(
        encode_transcripts(lc.split("finetune_" + target), vocab),
        cfg.decode.lm_order, cfg.decode.lm_k, vocab.size());
    lm_ptr = &lm;
  }
  for (const auto& utt : m.utterances) {
    LogProbs lp;
    lp.m = forward_logprobs(c.params, c.config, utt.waveform);
    std::vector<int> hyp;
    if (cfg.decode.mode == "greedy") {
      hyp = greedy_decode(lp);
    } else {
      BeamConfig bc;
      bc.beam_width = cfg.decode.beam_width;
      bc.lm_weight = cfg.decode.lm_weight;
      bc.ins_bonus = cfg.decode.ins_bonus;
      hyp = beam_decode(lp, lm_ptr, bc);
    }
    std::cout << utt.id << "\t";
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (i) std::cout << ' ';
      std::cout << vocab.tokens[static_cast<std::size_t>(hyp[i])];
    }
    std::cout << "\n";
  }
}

EvalReport run_evaluate(const RunConfig& cfg, const std::string& ckpt,
                        const std::string& target, const std::string& which,
                        const std::string& tag) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  const Manifest& split = lc.split(which + "_" + target);
  const Vocabulary& vocab = lc.vocab_of(split);
  Checkpoint c = load_ckpt_checked(ckpt);
  if (c.config.vocab_size != vocab.size()) {
    throw VocabMismatchError("evaluate: checkpoint head size " +
                             std::to_string(c.config.vocab_size) +
                             " does not match vocabulary " + split.vocabulary);
  }
  // dataset-specific LM: trained only on the target's own training split
  const EvalReport rep = evaluate(
      c, split, vocab,
      encode_transcripts(lc.split("finetune_" + target), vocab), cfg.decode,
      which + "_" + target);
  const json stamp = provenance_stamp(cfg, "evaluate", ckpt);
  std::ostringstream csv;
  csv << "# " << provenance_line(stamp) << "\n";
  csv << "split,utterances,wer,cer\n" << rep.csv_row() << "\n";
  atomic_write_file(cfg.out + "/eval/" + tag + ".csv", csv.str());
  return rep;
}

void run_cca(const RunConfig& cfg) {
  LoadedCorpus lc = load_corpus_checked(cfg);
  std::vector<std::tuple<std::string, std::string, double>> rows;
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"ssl", kMethodSslOnly},
      {"semi", kMethodSslSemi},
  };
  for (const auto& target : {std::string("in_domain"), std::string("cross_domain")}) {
    const Manifest& probe = lc.split(cfg.analysis.probe + "_" + target);
    for (const auto& [pre_name, method] : pairs) {
      const Checkpoint pre = load_ckpt_checked(ckpt_path(cfg, pre_name));
      const Checkpoint fine =
          load_ckpt_checked(finetune_ckpt_path(cfg, method, target));
      const CCAResult res = layer_curve(pre, fine, probe, cfg.analysis.retain,
                                        cfg.analysis.include_conv);
      for (const auto& [layer, sim] : res.layer_similarity) {
        rows.push_back({pre_name + ":" + method + "@" + target, layer, sim});
      }
    }
  }
  const json stamp = provenance_stamp(cfg, "cca", "");
  write_cca_csv(cfg.out + "/cca.csv", provenance_line(stamp), rows);
}

namespace {

std::map<std::pair<std::string, std::string>, double> read_results(
    const RunConfig& cfg) {
  const std::string path = cfg.out + "/results.csv";
  if (!file_exists(path)) {
    throw MissingInputError("results.csv not found (run evaluation first)");
  }
  std::istringstream in(read_file(path));
  std::string line;
  std::map<std::pair<std::string, std::string>, double> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("method,", 0) == 0) continue;
    std::istringstream row(line);
    std::string method, split, wer;
    std::getline(row, method, ',');
    std::getline(row, split, ',');
    std::getline(row, wer, ',');
    out[{method, split}] = std::stod(wer);
  }
  return out;
}

}  // namespace

void run_report(const RunConfig& cfg) {
  const auto results = read_results(cfg);
  std::vector<std::pair<std::string, double>> rows;
  for (const auto& target : corpus_target_names()) {
    const auto ssl_it = results.find({kMethodSslOnly, target});
    const auto semi_it = results.find({kMethodSslSemi, target});
    const auto scr_it = results.find({kMethodScratch, target});
    if (ssl_it != results.end() && semi_it != results.end() &&
        ssl_it->second > 0.0) {
      rows.push_back({std::string(kMethodSslOnly) + "->" + kMethodSslSemi + "@" + target,
                      relative_reduction(ssl_it->second, semi_it->second)});
    }
    if (scr_it != results.end() && semi_it != results.end() &&
        scr_it->second > 0.0) {
      rows.push_back({std::string(kMethodScratch) + "->" + kMethodSslSemi + "@" + target,
                      relative_reduction(scr_it->second, semi_it->second)});
    }
  }
  const json stamp = provenance_stamp(cfg, "report", "");
  write_reductions_csv(cfg.out + "/reductions.csv", provenance_line(stamp), rows);
}

void run_all(const RunConfig& cfg) {
  run_synth(cfg);
  run_pretrain_ssl(cfg);
  run_pretrain_semi(cfg, /*from_scratch=*/false);
  run_pretrain_semi(cfg, /*from_scratch=*/true);
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (const auto& method : runner_methods()) {
    for (const auto& target : corpus_target_names()) {
      run_finetune(cfg, method, target);
      const EvalReport rep =
          run_evaluate(cfg, finetune_ckpt_path(cfg, method, target), target,
                       "dev", "ft_" + method + "_" + target + "_dev");
      rows.push_back({method, target, rep.wer});
    }
  }
  const json stamp = provenance_stamp(cfg, "run-all", "");
  write_results_csv(cfg.out + "/results.csv", provenance_line(stamp), rows);
  run_cca(cfg);
  run_report(cfg);
}

}  // namespace semivox
