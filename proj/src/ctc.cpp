// semivox/ctc.cpp

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

#include "semivox/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semivox/rng.hpp"

namespace semivox {

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a <= kLogZero) return kLogZero;
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

void LogProbs::validate() const {
  if (frames() < 1 || vocab() < 2) {
    throw std::invalid_argument("logprobs: need T >= 1 and V >= 2");
  }
  for (int t = 0; t < frames(); ++t) {
    double sum = 0.0;
    for (int v = 0; v < vocab(); ++v) {
      const double x = at(t, v);
      if (!std::isfinite(x) && x > kLogZero) {
        throw std::invalid_argument("logprobs: non-finite entry");
      }
      sum += std::exp(x);
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("logprobs: row does not sum to 1");
    }
  }
}

int ctc_min_frames(const std::vector<int>& label) {
  int repeats = 0;
  for (std::size_t i = 1; i < label.size(); ++i) {
    if (label[i] == label[i - 1]) ++repeats;
  }
  return static_cast<int>(label.size()) + repeats;
}

namespace {

// Blank-interleaved label: blank, l1, blank, l2, ..., blank.
std::vector<int> extend_label(const std::vector<int>& label) {
  std::vector<int> ext;
  ext.reserve(label.size() * 2 + 1);
  ext.push_back(kBlank);
  for (int tok : label) {
    ext.push_back(tok);
    ext.push_back(kBlank);
  }
  return ext;
}

}  // namespace

CtcResult ctc_loss(const LogProbs& lp, const std::vector<int>& label,
                   bool want_grad) {
  const int T = lp.frames();
  const int V = lp.vocab();
  for (int tok : label) {
    if (tok <= 0 || tok >= V) {
      throw std::invalid_argument("ctc_loss: label token out of range");
    }
  }
  if (T < ctc_min_frames(label)) {
    throw InfeasibleLabelError(
        "ctc_loss: label needs at least " +
        std::to_string(ctc_min_frames(label)) + " frames, got " +
        std::to_string(T));
  }

  const std::vector<int> ext = extend_label(label);
  const int S = static_cast<int>(ext.size());
  auto idx = [S](int t, int s) { return t * S + s; };

  std::vector<double> alpha(static_cast<std::size_t>(T) * S, kLogZero);
  alpha[idx(0, 0)] = lp.at(0, kBlank);
  if (S > 1) alpha[idx(0, 1)] = lp.at(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double acc = alpha[idx(t - 1, s)];
      if (s >= 1) acc = log_add(acc, alpha[idx(t - 1, s - 1)]);
      if (s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2]) {
        acc = log_add(acc, alpha[idx(t - 1, s - 2)]);
      }
      alpha[idx(t, s)] = acc <= kLogZero ? kLogZero : acc + lp.at(t, ext[s]);
    }
  }
  double log_p = alpha[idx(T - 1, S - 1)];
  if (S > 1) log_p = log_add(log_p, alpha[idx(T - 1, S - 2)]);

  CtcResult res;
  res.loss = -log_p;
  if (!want_grad) return res;

  // beta[t][s]: log probability of completing the label with emissions
  // strictly after frame t.
  std::vector<double> beta(static_cast<std::size_t>(T) * S, kLogZero);
  beta[idx(T - 1, S - 1)] = 0.0;
  if (S > 1) beta[idx(T - 1, S - 2)] = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double acc = beta[idx(t + 1, s)] <= kLogZero
                       ? kLogZero
                       : beta[idx(t + 1, s)] + lp.at(t + 1, ext[s]);
      if (s + 1 < S && beta[idx(t + 1, s + 1)] > kLogZero) {
        acc = log_add(acc, beta[idx(t + 1, s + 1)] + lp.at(t + 1, ext[s + 1]));
      }
      if (s + 2 < S && ext[s + 2] != kBlank && ext[s + 2] != ext[s] &&
          beta[idx(t + 1, s + 2)] > kLogZero) {
        acc = log_add(acc, beta[idx(t + 1, s + 2)] + lp.at(t + 1, ext[s + 2]));
      }
      beta[idx(t, s)] = acc;
    }
  }

  res.grad = Tensor(lp.m.shape);
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const double a = alpha[idx(t, s)];
      const double b = beta[idx(t, s)];
      if (a <= kLogZero || b <= kLogZero) continue;
      const double occ = std::exp(a + b - log_p);
      res.grad.at(static_cast<std::size_t>(t),
                  static_cast<std::size_t>(ext[s])) -= occ;
    }
  }
  return res;
}

double oracle_ctc_loss(const LogProbs& lp, const std::vector<int>& label) {
  const int T = lp.frames();
  const int V = lp.vocab();
  double paths = std::pow(static_cast<double>(V), T);
  if (paths > 1e6) {
    throw std::invalid_argument("oracle_ctc_loss: instance too large");
  }
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double prob = 0.0;
  const auto n_paths = static_cast<long long>(paths + 0.5);
  for (long long it = 0; it < n_paths; ++it) {
    long long x = it;
    for (int t = 0; t < T; ++t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(x % V);
      x /= V;
    }
    if (collapse_path(path) != label) continue;
    double lp_sum = 0.0;
    for (int t = 0; t < T; ++t) lp_sum += lp.at(t, path[static_cast<std::size_t>(t)]);
    prob += std::exp(lp_sum);
  }
  if (prob <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(prob);
}

std::vector<int> collapse_path(const std::vector<int>& path) {
  std::vector<int> out;
  int prev = kBlank;
  for (int tok : path) {
    if (tok != kBlank && tok != prev) out.push_back(tok);
    prev = tok;
  }
  return out;
}

std::vector<int> greedy_decode(const LogProbs& lp) {
  std::vector<int> path(static_cast<std::size_t>(lp.frames()));
  for (int t = 0; t < lp.frames(); ++t) {
    int best = 0;
    double best_v = lp.at(t, 0);
    for (int v = 1; v < lp.vocab(); ++v) {
      if (lp.at(t, v) > best_v) {
        best_v = lp.at(t, v);
        best = v;
      }
    }
    path[static_cast<std::size_t>(t)] = best;
  }
  return collapse_path(path);
}

// ---------------------------------------------------------------------------
// Character n-gram language model

CharNGramLM::CharNGramLM(int order, double k, int vocab_size)
    : order_(order), k_(k), vocab_size_(vocab_size) {
  if (order < 1) throw std::invalid_argument("lm: order must be >= 1");
  if (k <= 0.0) throw std::invalid_argument("lm: smoothing k must be > 0");
  if (vocab_size < 2) throw std::invalid_argument("lm: vocab too small");
}

std::uint64_t CharNGramLM::history_key(const std::vector<int>& history) const {
  // History ids fit in 16 bits after the +3 shift (BOS=-1, END=-2).
  std::uint64_t key = 1;
  const std::size_t n = history.size();
  const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(order_ - 1));
  for (std::size_t i = n - take; i < n; ++i) {
    key = (key << 16) | static_cast<std::uint64_t>(history[i] + 3);
  }
  return key;
}

void CharNGramLM::add_sequence(const std::vector<int>& tokens) {
  std::vector<int> padded(static_cast<std::size_t>(order_ - 1), -1);  // BOS
  for (int t : tokens) {
    if (t <= 0 || t >= vocab_size_) {
      throw std::invalid_argument("lm: token id out of range");
    }
    padded.push_back(t);
  }
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const std::vector<int> hist(padded.begin() + static_cast<std::ptrdiff_t>(i),
                                padded.begin() + static_cast<std::ptrdiff_t>(i + order_ - 1));
    const int next = i < tokens.size() ? tokens[i] : kEndMarker;
    const std::uint64_t key = history_key(hist);
    counts_[key][next] += 1.0;
    totals_[key] += 1.0;
  }
}

double CharNGramLM::cond_log_prob(const std::vector<int>& history,
                                  int next) const {
  const std::uint64_t key = history_key(history);
  const double outcomes = static_cast<double>(vocab_size_ - 1 + 1);  // tokens + end
  double count = 0.0, total = 0.0;
  auto it = counts_.find(key);
  if (it != counts_.end()) {
    auto jt = it->second.find(next);
    if (jt != it->second.end()) count = jt->second;
    total = totals_.at(key);
  }
  return std::log(count + k_) - std::log(total + k_ * outcomes);
}

std::vector<double> CharNGramLM::cond_distribution(
    const std::vector<int>& history) const {
  // Index 0 holds P(end marker); i in [1, V) holds P(token i).
  std::vector<double> dist(static_cast<std::size_t>(vocab_size_));
  dist[0] = std::exp(cond_log_prob(history, kEndMarker));
  for (int v = 1; v < vocab_size_; ++v) {
    dist[static_cast<std::size_t>(v)] = std::exp(cond_log_prob(history, v));
  }
  return dist;
}

double CharNGramLM::score(const std::vector<int>& tokens) const {
  std::vector<int> padded(static_cast<std::size_t>(order_ - 1), -1);
  double acc = 0.0;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const std::vector<int> hist(padded.end() - (order_ - 1), padded.end());
    const int next = i < tokens.size() ? tokens[i] : kEndMarker;
    acc += cond_log_prob(hist, next);
    if (i < tokens.size()) padded.push_back(tokens[i]);
  }
  return acc;
}

CharNGramLM train_char_lm(const std::vector<std::vector<int>>& transcripts,
                          int order, double k, int vocab_size) {
  CharNGramLM lm(order, k, vocab_size);
  for (const auto& t : transcripts) lm.add_sequence(t);
  return lm;
}

double lm_score(const CharNGramLM& lm, const std::vector<int>& tokens) {
  return lm.score(tokens);
}

// ---------------------------------------------------------------------------
// Prefix beam search

namespace {

struct PrefixMass {
  double blank = kLogZero;     // log mass of paths ending in blank
  double nonblank = kLogZero;  // log mass of paths ending in the last token
  double total() const { return log_add(blank, nonblank); }
};

// LM log probability of the prefix tokens only (no end marker); used while
// the prefix can still grow.
double lm_prefix_logprob(const CharNGramLM& lm, const std::vector<int>& prefix) {
  std::vector<int> padded(static_cast<std::size_t>(lm.order() - 1), -1);
  double acc = 0.0;
  for (int tok : prefix) {
    const std::vector<int> hist(padded.end() - (lm.order() - 1), padded.end());
    acc += lm.cond_log_prob(hist, tok);
    padded.push_back(tok);
  }
  return acc;
}

bool better(double score_a, const std::vector<int>& a, double score_b,
            const std::vector<int>& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<int> beam_decode(const LogProbs& lp, const CharNGramLM* lm,
                             const BeamConfig& cfg) {
  if (cfg.beam_width == 0 || cfg.beam_width < -1) {
    throw std::invalid_argument("beam_decode: beam width must be >= 1");
  }
  const bool unbounded = cfg.beam_width < 0;
  const int T = lp.frames();
  const int V = lp.vocab();

  std::map<std::vector<int>, PrefixMass> beam;
  beam[{}] = PrefixMass{0.0, kLogZero};

  auto prefix_score = [&](const std::vector<int>& p, const PrefixMass& m) {
    double s = m.total() + cfg.ins_bonus * static_cast<double>(p.size());
    if (lm && cfg.lm_weight != 0.0) {
      s += cfg.lm_weight * lm_prefix_logprob(*lm, p);
    }
    return s;
  };

  for (int t = 0; t < T; ++t) {
    std::map<std::vector<int>, PrefixMass> next;
    for (const auto& [p, m] : beam) {
      const double total = m.total();
      // stay on the same prefix via a blank
      {
        PrefixMass& nm = next[p];
        nm.blank = log_add(nm.blank, total + lp.at(t, kBlank));
      }
      // stay via a repeat of the trailing token (no new emission)
      if (!p.empty()) {
        PrefixMass& nm = next[p];
        nm.nonblank = log_add(nm.nonblank, m.nonblank + lp.at(t, p.back()));
      }
      // extend by one token
      for (int c = 1; c < V; ++c) {
        std::vector<int> np = p;
        np.push_back(c);
        const double base =
            (!p.empty() && c == p.back()) ? m.blank : total;
        if (base <= kLogZero) continue;
        PrefixMass& nm = next[np];
        nm.nonblank = log_add(nm.nonblank, base + lp.at(t, c));
      }
    }
    if (!unbounded && next.size() > static_cast<std::size_t>(cfg.beam_width)) {
      std::vector<std::pair<const std::vector<int>*, double>> scored;
      scored.reserve(next.size());
      for (const auto& [p, m] : next) scored.push_back({&p, prefix_score(p, m)});
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return better(a.second, *a.first, b.second, *b.first);
      });
      std::map<std::vector<int>, PrefixMass> pruned;
      for (int i = 0; i < cfg.beam_width; ++i) {
        pruned[*scored[static_cast<std::size_t>(i)].first] =
            next[*scored[static_cast<std::size_t>(i)].first];
      }
      next = std::move(pruned);
    }
    beam = std::move(next);
  }

  const std::vector<int>* best = nullptr;
  double best_score = 0.0;
  for (const auto& [p, m] : beam) {
    double s = m.total() + cfg.ins_bonus * static_cast<double>(p.size());
    if (lm && cfg.lm_weight != 0.0) s += cfg.lm_weight * lm_score(*lm, p);
    if (!best || better(s, p, best_score, *best)) {
      best = &p;
      best_score = s;
    }
  }
  return best ? *best : std::vector<int>{};
}

// ---------------------------------------------------------------------------
// Error rates

std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double wer(const std::vector<int>& ref, const std::vector<int>& hyp) {
  const std::size_t d = edit_distance(ref, hyp);
  return static_cast<double>(d) /
         static_cast<double>(std::max<std::size_t>(1, ref.size()));
}

namespace {
std::vector<int> chars_of(const std::vector<std::string>& tokens) {
  std::vector<int> out;
  for (const auto& t : tokens) {
    for (unsigned char c : t) out.push_back(static_cast<int>(c));
  }
  return out;
}
std::vector<int> ids_of(const std::vector<std::string>& tokens) {
  // stable int encoding for comparing token sequences without a vocabulary
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    out.push_back(static_cast<int>(fnv1a64(t) & 0x7fffffff));
  }
  return out;
}
}  // namespace

double wer_tokens(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  return wer(ids_of(ref), ids_of(hyp));
}

double cer_tokens(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  return wer(chars_of(ref), chars_of(hyp));
}

}  // namespace semivox
