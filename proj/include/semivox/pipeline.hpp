// semivox/pipeline.hpp

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

#ifndef SEMIVOX_PIPELINE_HPP_
#define SEMIVOX_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "semivox/corpus.hpp"
#include "semivox/ctc.hpp"
#include "semivox/model.hpp"
#include "semivox/trainer.hpp"

namespace semivox {

// Greedy transcript produced by the current model on clean input; used as
// the training target for unlabeled audio.
struct PseudoLabel {
  std::string utterance_id;
  std::vector<int> tokens;  // never contains the blank
  long producer_update = 0;
};

PseudoLabel pseudo_label_from_logprobs(const LogProbs& lp,
                                       const std::string& utt_id, long update);
// Eval-mode forward on the unaugmented waveform (no masking, no dropout),
// then greedy decoding.
PseudoLabel pseudo_label(const Parameters& params, const ModelConfig& cfg,
                         const Utterance& utt, long update);

struct SemiBatchItem {
  const Utterance* utt = nullptr;
  bool labeled = false;
  std::vector<int> label;  // encoded ground truth when labeled
  std::uint64_t aug_seed = 0;
};

struct SemiOptions {
  double lambda = 1.0;
  MaskSpec mask;  // augmentation a(x); mode time+channel
  bool skip_empty_pseudo = true;
  double dropout_default = 0.0;  // cfg.dropout is used; kept for clarity
};

struct SemiLossResult {
  double total = 0.0;
  double label_loss = 0.0;
  double unlabel_loss = 0.0;
  int n_labeled = 0;
  int n_unlabeled_used = 0;
  int n_skipped_empty = 0;
  double pseudo_len_mean = 0.0;
  bool all_unlabeled_skipped = false;
  GradMap grads;
};

// Combined semi-supervised loss over one sub-batch: mean labeled CTC on
// augmented input plus lambda times the mean pseudo-label CTC, where pseudo
// labels come from the clean input at the current parameters. Empty pseudo
// labels are skipped (and counted) under the default policy.
SemiLossResult semi_loss(const Parameters& params, const ModelConfig& cfg,
                         const std::vector<SemiBatchItem>& batch,
                         const SemiOptions& opts, bool want_grads,
                         const std::set<std::string>& trainable, long update);

struct StageConfig {
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  SemiOptions semi;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  double final_loss = 0.0;
  std::vector<UpdateLogRecord> log;
};

// Stage 2: semi-supervised pre-training. Starts from a stage-1 checkpoint
// (quantizer and head dropped, fresh head sized to the vocabulary) or from
// scratch when `init` is empty. The conv encoder is frozen throughout.
TrainOutcome semi_pretrain(const std::optional<Checkpoint>& init,
                           const ModelConfig& cfg, const Manifest& labeled,
                           const Manifest& unlabeled, const Vocabulary& vocab,
                           const StageConfig& stage, const TrainPlan& plan,
                           const std::string& log_path = "",
                           const std::string& ckpt_dir = "");

// Stage 3: supervised fine-tuning on the target split. Discards any head,
// adds a fresh one sized to the target vocabulary, freezes the conv encoder
// throughout and the transformer until `unfreeze_at`.
TrainOutcome finetune(const Checkpoint& init, const Manifest& target,
                      const Vocabulary& vocab, const StageConfig& stage,
                      const TrainPlan& plan, long unfreeze_at,
                      const std::string& log_path = "",
                      const std::string& ckpt_dir = "");

struct DecodeConfig {
  std::string mode = "beam";  // "greedy" or "beam"
  int beam_width = 16;
  double lm_weight = 0.5;
  double ins_bonus = 0.0;
  int lm_order = 4;
  double lm_k = 0.01;
};

struct EvalReport {
  std::string split;
  int utterances = 0;
  double wer = 0.0;
  double cer = 0.0;

  std::string csv_row() const;  // split,utterances,wer,cer
};

// Decoding seam shared by evaluate(): scores hypotheses against references
// at both token and character level.
EvalReport evaluate_logprobs(const std::vector<LogProbs>& lps,
                             const std::vector<std::vector<int>>& refs,
                             const Vocabulary& vocab, const CharNGramLM* lm,
                             const DecodeConfig& decode,
                             const std::string& split_name);

// Dataset-specific evaluation: the LM is trained only on lm_texts (the
// split's own training transcripts). Pure; repeated calls are identical.
EvalReport evaluate(const Checkpoint& ckpt, const Manifest& split,
                    const Vocabulary& vocab,
                    const std::vector<std::vector<int>>& lm_texts,
                    const DecodeConfig& decode, const std::string& split_name);

std::vector<std::vector<int>> encode_transcripts(const Manifest& m,
                                                 const Vocabulary& vocab);

}  // namespace semivox

#endif  // SEMIVOX_PIPELINE_HPP_
