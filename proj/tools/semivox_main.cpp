// tools/semivox_main.cpp

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

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "semivox/fileutil.hpp"
#include "semivox/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitVocabMismatch = 4;

struct CommonFlags {
  std::string config_path;
  std::int64_t seed = -1;
  std::string out;
  int updates = -1;
  int beam = 0;
  double lambda = -1.0;
};

// Flag overrides are folded into the JSON document before parsing so the
// provenance hash always reflects what actually ran.
semivox::RunConfig load_with_overrides(const CommonFlags& flags,
                                       const std::string& stage) {
  if (!semivox::file_exists(flags.config_path)) {
    throw semivox::MissingInputError("config file not found: " +
                                     flags.config_path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(semivox::read_file(flags.config_path));
  } catch (const std::exception& e) {
    throw semivox::ConfigError(std::string("config: parse error: ") + e.what());
  }
  if (flags.seed >= 0) j["seed"] = static_cast<std::uint64_t>(flags.seed);
  if (!flags.out.empty()) j["out"] = flags.out;
  if (flags.updates >= 0) {
    if (stage == "pretrain-ssl") {
      j["ssl"]["updates"] = flags.updates;
    } else if (stage == "pretrain-semi") {
      j["semi"]["updates"] = flags.updates;
    } else if (stage == "finetune") {
      j["finetune"]["updates"] = flags.updates;
    }
  }
  if (flags.beam > 0) j["decode"]["beam_width"] = flags.beam;
  if (flags.lambda >= 0.0) j["semi"]["lambda"] = flags.lambda;
  return semivox::parse_run_config(j);
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool updates_flag = false) {
  cmd->add_option("--config", flags.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out, "override the output directory");
  if (updates_flag) {
    cmd->add_option("--updates", flags.updates, "override this stage's updates");
  }
}

int error_exit(const std::string& kind, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semivox: toy speech recognition lab (self-/semi-supervised "
               "pre-training, CTC fine-tuning, CCA analysis)"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string method = semivox::kMethodSslSemi;
  std::string target = "in_domain";
  std::string ckpt;
  std::string split = "dev_in_domain";
  std::string which = "dev";
  bool from_scratch = false;

  auto* synth = app.add_subcommand("synth", "build the synthetic corpus");
  add_common(synth, flags);

  auto* ssl = app.add_subcommand("pretrain-ssl",
                                 "stage 1: contrastive self-supervised "
                                 "pre-training on unlabeled audio");
  add_common(ssl, flags, true);

  auto* semi = app.add_subcommand("pretrain-semi",
                                  "stage 2: semi-supervised pre-training "
                                  "(CTC on labels + pseudo-labels)");
  add_common(semi, flags, true);
  semi->add_flag("--from-scratch", from_scratch,
                 "supervised baseline without a stage-1 checkpoint");
  semi->add_option("--lambda", flags.lambda, "unlabeled loss weight");

  auto* ft = app.add_subcommand("finetune", "stage 3: CTC fine-tuning");
  add_common(ft, flags, true);
  ft->add_option("--method", method, "scratch | ssl-only | ssl-semi");
  ft->add_option("--target", target, "in_domain | cross_domain | cross_lingual");

  auto* dec = app.add_subcommand("decode", "print hypotheses for a split");
  add_common(dec, flags);
  dec->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  dec->add_option("--split", split, "corpus split name");
  dec->add_option("--beam", flags.beam, "beam width");

  auto* ev = app.add_subcommand("evaluate", "WER/CER of a checkpoint on a split");
  add_common(ev, flags);
  ev->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  ev->add_option("--target", target, "in_domain | cross_domain | cross_lingual");
  ev->add_option("--split", which, "dev | test");
  ev->add_option("--beam", flags.beam, "beam width");

  auto* cca = app.add_subcommand("cca", "layer-wise similarity of checkpoints");
  add_common(cca, flags);

  auto* rep = app.add_subcommand("report", "relative WER reductions");
  add_common(rep, flags);

  auto* all = app.add_subcommand("run-all", "full pipeline end to end");
  add_common(all, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      semivox::run_synth(load_with_overrides(flags, "synth"));
    } else if (ssl->parsed()) {
      semivox::run_pretrain_ssl(load_with_overrides(flags, "pretrain-ssl"));
    } else if (semi->parsed()) {
      semivox::run_pretrain_semi(load_with_overrides(flags, "pretrain-semi"),
                                 from_scratch);
    } else if (ft->parsed()) {
      semivox::run_finetune(load_with_overrides(flags, "finetune"), method,
                            target);
    } else if (dec->parsed()) {
      semivox::run_decode(load_with_overrides(flags, "decode"), ckpt, split);
    } else if (ev->parsed()) {
      const auto report = semivox::run_evaluate(
          load_with_overrides(flags, "evaluate"), ckpt, target, which,
          "cli_" + which + "_" + target);
      std::cout << report.csv_row() << "\n";
    } else if (cca->parsed()) {
      semivox::run_cca(load_with_overrides(flags, "cca"));
    } else if (rep->parsed()) {
      semivox::run_report(load_with_overrides(flags, "report"));
    } else if (all->parsed()) {
      semivox::run_all(load_with_overrides(flags, "run-all"));
    }
  } catch (const semivox::ConfigError& e) {
    return error_exit("config", e.what(), kExitConfig);
  } catch (const semivox::MissingInputError& e) {
    return error_exit("missing-input", e.what(), kExitMissingInput);
  } catch (const semivox::VocabMismatchError& e) {
    return error_exit("vocab-mismatch", e.what(), kExitVocabMismatch);
  } catch (const std::exception& e) {
    return error_exit("internal", e.what(), kExitOther);
  }
  return kExitOk;
}
