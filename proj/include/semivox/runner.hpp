// semivox/runner.hpp

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

#ifndef SEMIVOX_RUNNER_HPP_
#define SEMIVOX_RUNNER_HPP_

#include <string>
#include <vector>

#include "semivox/config.hpp"

namespace semivox {

// Stage entry points behind the CLI subcommands. Each stage validates its
// inputs, is idempotent for a fixed config+seed (it overwrites its own
// outputs atomically) and stamps provenance into everything it writes.

inline const char* kMethodScratch = "scratch";
inline const char* kMethodSslOnly = "ssl-only";
inline const char* kMethodSslSemi = "ssl-semi";
std::vector<std::string> runner_methods();

void run_synth(const RunConfig& cfg);
void run_pretrain_ssl(const RunConfig& cfg);
// from_scratch: supervised baseline without a stage-1 checkpoint (the
// "scratch" method of run-all). labeled_split/unlabeled_split default to
// the corpus pre-training splits; data_variant names the output checkpoint.
void run_pretrain_semi(const RunConfig& cfg, bool from_scratch = false);
void run_finetune(const RunConfig& cfg, const std::string& method,
                  const std::string& target);
// Decodes a split with the checkpoint and prints hypotheses (one per line).
void run_decode(const RunConfig& cfg, const std::string& ckpt_path,
                const std::string& split);
EvalReport run_evaluate(const RunConfig& cfg, const std::string& ckpt_path,
                        const std::string& target, const std::string& which,
                        const std::string& tag);
void run_cca(const RunConfig& cfg);
void run_report(const RunConfig& cfg);
void run_all(const RunConfig& cfg);

// Paths under cfg.out.
std::string corpus_dir(const RunConfig& cfg);
std::string ckpt_path(const RunConfig& cfg, const std::string& name);
std::string finetune_ckpt_path(const RunConfig& cfg, const std::string& method,
                               const std::string& target);

}  // namespace semivox

#endif  // SEMIVOX_RUNNER_HPP_
