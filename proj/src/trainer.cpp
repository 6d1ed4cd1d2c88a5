// semivox/trainer.cpp

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

#include "semivox/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace semivox {

void TrainPlan::validate() const {
  if (max_lr <= 0.0) throw std::invalid_argument("plan: max_lr must be > 0");
  if (total_updates < 1) throw std::invalid_argument("plan: total_updates < 1");
  if (accumulation < 1) throw std::invalid_argument("plan: accumulation < 1");
  if (lambda < 0.0) throw std::invalid_argument("plan: lambda must be >= 0");
  const double s = warmup_frac + hold_frac + decay_frac;
  if (warmup_frac < 0.0 || hold_frac < 0.0 || decay_frac < 0.0 ||
      std::abs(s - 1.0) > 1e-9) {
    throw std::invalid_argument("plan: schedule fractions must sum to 1");
  }
}

double lr_at(const TrainPlan& plan, double update) {
  plan.validate();
  const double total = static_cast<double>(plan.total_updates);
  const double u = std::clamp(update, 0.0, total);
  const double warm_end = plan.warmup_frac * total;
  const double hold_end = warm_end + plan.hold_frac * total;
  if (u < warm_end) {
    const double f = u / warm_end;
    return plan.max_lr * (plan.init_lr_frac + (1.0 - plan.init_lr_frac) * f);
  }
  if (u <= hold_end || total == hold_end) return plan.max_lr;
  const double f = (u - hold_end) / (total - hold_end);
  return plan.max_lr * std::pow(plan.final_lr_frac, f);
}

std::set<std::string> trainable_names(const TrainPlan& plan,
                                      const Parameters& params, long update) {
  std::set<std::string> out;
  for (const auto& [name, tensor] : params) {
    bool frozen = false;
    for (const auto& rule : plan.freeze) {
      if (name.rfind(rule.prefix, 0) != 0) continue;
      if (rule.unfreeze_at < 0 || update < rule.unfreeze_at) {
        frozen = true;
        break;
      }
    }
    if (!frozen) out.insert(name);
  }
  return out;
}

void AdamOptimizer::step(Parameters& params, const GradMap& grads,
                         const std::set<std::string>& trainable, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(plan_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(plan_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    if (!trainable.count(name)) continue;
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.data.empty()) m = Tensor(p.shape);
    if (v.data.empty()) v = Tensor(p.shape);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double gi = g.data[i];
      m.data[i] = plan_.beta1 * m.data[i] + (1.0 - plan_.beta1) * gi;
      v.data[i] = plan_.beta2 * v.data[i] + (1.0 - plan_.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + plan_.adam_eps);
    }
  }
}

std::string UpdateLogRecord::to_json_line() const {
  nlohmann::json j;
  j["update"] = update;
  j["lr"] = lr;
  j["loss"] = loss;
  j["loss_label"] = loss_label;
  j["loss_unlabel"] = loss_unlabel;
  j["pseudo_label_len_mean"] = pseudo_label_len_mean;
  j["skipped"] = skipped;
  return j.dump();
}

UpdateEngine::UpdateEngine(Parameters* params, const TrainPlan& plan)
    : params_(params), plan_(plan), opt_(plan) {
  plan_.validate();
}

std::optional<UpdateLogRecord> UpdateEngine::feed(const GradMap& grads,
                                                  double loss,
                                                  double loss_label,
                                                  double loss_unlabel,
                                                  double pseudo_len_mean) {
  for (const auto& [name, g] : grads) {
    auto it = acc_.find(name);
    if (it == acc_.end()) {
      acc_[name] = g;
    } else {
      for (std::size_t i = 0; i < g.numel(); ++i) it->second.data[i] += g.data[i];
    }
  }
  loss_acc_ += loss;
  label_acc_ += loss_label;
  unlabel_acc_ += loss_unlabel;
  plen_acc_ += pseudo_len_mean;
  if (++fed_ < plan_.accumulation) return std::nullopt;

  const double inv = 1.0 / static_cast<double>(plan_.accumulation);
  bool finite = true;
  for (auto& [name, g] : acc_) {
    for (auto& x : g.data) {
      x *= inv;
      if (!std::isfinite(x)) finite = false;
    }
  }
  UpdateLogRecord rec;
  rec.update = update_;
  rec.lr = lr_at(plan_, static_cast<double>(update_));
  rec.loss = loss_acc_ * inv;
  rec.loss_label = label_acc_ * inv;
  rec.loss_unlabel = unlabel_acc_ * inv;
  rec.pseudo_label_len_mean = plen_acc_ * inv;
  rec.skipped = finite ? 0 : 1;
  if (finite) {
    const auto trainable = trainable_names(plan_, *params_, update_);
    opt_.step(*params_, acc_, trainable, rec.lr);
  }
  acc_.clear();
  fed_ = 0;
  loss_acc_ = label_acc_ = unlabel_acc_ = plen_acc_ = 0.0;
  ++update_;
  return rec;
}

}  // namespace semivox
