// semivox/ctc.hpp

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

#ifndef SEMIVOX_CTC_HPP_
#define SEMIVOX_CTC_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "semivox/tensor.hpp"

namespace semivox {

// Log-space floor standing in for -inf; keeps NaNs out of the recursions.
constexpr double kLogZero = -1e10;
constexpr int kBlank = 0;

// log(exp(a) + exp(b)) with the kLogZero floor.
double log_add(double a, double b);

// Per-frame log probabilities, rows summing to one in probability space.
// Column 0 is the blank.
struct LogProbs {
  Tensor m;  // [T, V]
  int frames() const { return static_cast<int>(m.rows()); }
  int vocab() const { return static_cast<int>(m.cols()); }
  double at(int t, int v) const {
    return m.at(static_cast<std::size_t>(t), static_cast<std::size_t>(v));
  }
  void validate() const;  // row sums within 1e-6 of 1, T >= 1
};

// Thrown when no frame path of length T can collapse to the label.
// Deliberately distinct from returning +inf so callers can skip.
struct InfeasibleLabelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Smallest T that can realize the label: |label| plus one extra frame per
// adjacent repeat.
int ctc_min_frames(const std::vector<int>& label);

struct CtcResult {
  double loss;        // -log P(label | logprobs)
  Tensor grad;        // d loss / d logprobs, same shape as the input
};

// Forward-backward CTC loss in log space over the blank-interleaved label,
// with the analytic gradient w.r.t. the log probabilities.
CtcResult ctc_loss(const LogProbs& lp, const std::vector<int>& label,
                   bool want_grad = true);

// Brute-force oracle: sums the probability of every V^T frame path that
// collapses to the label. Returns +inf when no path matches.
double oracle_ctc_loss(const LogProbs& lp, const std::vector<int>& label);

// Frame-wise argmax (ties to the lowest index), collapse repeats, drop
// blanks.
std::vector<int> greedy_decode(const LogProbs& lp);
std::vector<int> collapse_path(const std::vector<int>& path);

// Character n-gram LM with add-k smoothing and begin/end markers. The
// conditional distribution at any history covers every vocabulary token
// plus the end marker and sums to one.
class CharNGramLM {
 public:
  CharNGramLM() = default;
  CharNGramLM(int order, double k, int vocab_size);

  void add_sequence(const std::vector<int>& tokens);  // ids in [1, V)
  // log P(next | history); next may be kEndMarker.
  double cond_log_prob(const std::vector<int>& history, int next) const;
  std::vector<double> cond_distribution(const std::vector<int>& history) const;
  // Full sequence log probability including the end marker.
  double score(const std::vector<int>& tokens) const;

  int order() const { return order_; }
  static constexpr int kEndMarker = -2;

 private:
  std::uint64_t history_key(const std::vector<int>& history) const;

  int order_ = 4;
  double k_ = 0.01;
  int vocab_size_ = 0;  // full vocab size incl. blank; LM tokens are 1..V-1
  std::map<std::uint64_t, std::map<int, double>> counts_;
  std::map<std::uint64_t, double> totals_;
};

CharNGramLM train_char_lm(const std::vector<std::vector<int>>& transcripts,
                          int order, double k, int vocab_size);
double lm_score(const CharNGramLM& lm, const std::vector<int>& tokens);

struct BeamConfig {
  int beam_width = 16;      // <= 0 means unbounded (exact prefix search)
  double lm_weight = 0.0;
  double ins_bonus = 0.0;
};

// Prefix beam search with optional shallow LM fusion. With an unbounded
// beam this is exact: it returns the label maximizing
//   log P_ctc(y) + lm_weight * lm_score(y) + ins_bonus * |y|.
std::vector<int> beam_decode(const LogProbs& lp, const CharNGramLM* lm,
                             const BeamConfig& cfg);

// Token error rate: unit-cost Levenshtein distance / max(1, |ref|).
double wer(const std::vector<int>& ref, const std::vector<int>& hyp);
double wer_tokens(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp);
// Character error rate over the concatenated token strings.
double cer_tokens(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp);
std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace semivox

#endif  // SEMIVOX_CTC_HPP_
