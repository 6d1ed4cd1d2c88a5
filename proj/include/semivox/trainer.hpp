// semivox/trainer.hpp

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

#ifndef SEMIVOX_TRAINER_HPP_
#define SEMIVOX_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semivox/model.hpp"

namespace semivox {

// Shared optimization plan: Adam, tri-state LR schedule (linear warmup from
// max_lr/100, hold, exponential decay to max_lr/20), gradient accumulation
// and name-prefix freezing with optional unfreeze updates.
struct TrainPlan {
  double max_lr = 3e-5;
  double warmup_frac = 0.1;
  double hold_frac = 0.4;
  double decay_frac = 0.5;
  int total_updates = 1;
  int accumulation = 1;

  struct FreezeRule {
    std::string prefix;
    long unfreeze_at = -1;  // -1: frozen for the whole run
  };
  std::vector<FreezeRule> freeze;

  std::uint64_t seed = 0;
  double lambda = 1.0;  // stage-2 unlabeled loss weight

  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-8;
  double init_lr_frac = 0.01;   // warmup starts at max_lr/100
  double final_lr_frac = 0.05;  // decay ends at max_lr/20
  int checkpoint_every = 0;     // 0 = final only

  void validate() const;
};

// Learning rate at a (possibly fractional) schedule position in
// [0, total_updates]. Continuous at the phase boundaries.
double lr_at(const TrainPlan& plan, double update);

// Names trainable at the given update under the plan's freeze rules.
std::set<std::string> trainable_names(const TrainPlan& plan,
                                      const Parameters& params, long update);

// Adam with frozen names masked out entirely: their values and moments
// never move while frozen.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainPlan& plan) : plan_(plan) {}

  void step(Parameters& params, const GradMap& grads,
            const std::set<std::string>& trainable, double lr);
  long steps_taken() const { return t_; }

 private:
  TrainPlan plan_;
  Parameters m_;
  Parameters v_;
  long t_ = 0;
};

struct UpdateLogRecord {
  long update = 0;
  double lr = 0.0;
  double loss = 0.0;
  double loss_label = 0.0;
  double loss_unlabel = 0.0;
  double pseudo_label_len_mean = 0.0;
  int skipped = 0;

  std::string to_json_line() const;
};

// Drives one training run: feed() one sub-batch gradient at a time; after
// `accumulation` feeds the averaged gradient is applied once. Non-finite
// accumulated gradients skip the update (logged), training continues.
class UpdateEngine {
 public:
  UpdateEngine(Parameters* params, const TrainPlan& plan);

  // Returns the applied update's log record once per effective batch.
  std::optional<UpdateLogRecord> feed(const GradMap& grads, double loss,
                                      double loss_label, double loss_unlabel,
                                      double pseudo_len_mean);
  long updates_done() const { return update_; }
  bool finished() const { return update_ >= plan_.total_updates; }
  const TrainPlan& plan() const { return plan_; }

 private:
  Parameters* params_;
  TrainPlan plan_;
  AdamOptimizer opt_;
  GradMap acc_;
  int fed_ = 0;
  long update_ = 0;
  double loss_acc_ = 0.0, label_acc_ = 0.0, unlabel_acc_ = 0.0, plen_acc_ = 0.0;
};

}  // namespace semivox

#endif  // SEMIVOX_TRAINER_HPP_
