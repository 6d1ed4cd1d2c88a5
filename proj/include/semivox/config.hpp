// semivox/config.hpp

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

#ifndef SEMIVOX_CONFIG_HPP_
#define SEMIVOX_CONFIG_HPP_

#include <string>

#include <json.hpp>

#include "semivox/corpus.hpp"
#include "semivox/errors.hpp"
#include "semivox/model.hpp"
#include "semivox/pipeline.hpp"
#include "semivox/ssl.hpp"
#include "semivox/trainer.hpp"

namespace semivox {

// Per-stage optimization schedule.
struct PlanSection {
  int updates = 100;
  int accumulation = 2;
  double max_lr = 3e-5;
  double warmup_frac = 0.1;
  double hold_frac = 0.4;
  double decay_frac = 0.5;
  int checkpoint_every = 0;

  TrainPlan to_plan(std::uint64_t seed, double lambda = 0.0) const;
};

struct SslSection {
  PlanSection plan;
  SSLConfig ssl;
};

struct SemiSection {
  PlanSection plan;
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  double lambda = 1.0;
  bool skip_empty_pseudo = true;
  MaskSpec mask;                 // time+channel augmentation
  std::string supervision = "char";
  int scratch_updates = -1;      // -1: same as updates
};

struct FinetuneSection {
  PlanSection plan;
  int updates_small = -1;  // defaults to round(updates * 13 / 20)
  int batch_items = 4;
  long unfreeze_at = 30;
  MaskSpec mask;
};

struct AnalysisSection {
  double retain = 0.99;
  std::string probe = "dev";
  bool include_conv = false;
};

// One JSON document drives every stage; unknown keys anywhere are rejected
// by full path so typos cannot silently fall back to defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out;
  CorpusConfig corpus;
  ModelConfig model;
  SslSection ssl;
  SemiSection semi;
  FinetuneSection finetune;
  DecodeConfig decode;
  AnalysisSection analysis;

  std::string config_hash;  // hash of the normalized document
  nlohmann::json document;  // normalized parsed document
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Provenance stamp written into every stage output.
nlohmann::json provenance_stamp(const RunConfig& cfg, const std::string& stage,
                                const std::string& parent_ckpt_path);
std::string provenance_line(const nlohmann::json& stamp);

}  // namespace semivox

#endif  // SEMIVOX_CONFIG_HPP_
