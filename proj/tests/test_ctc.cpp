// tests/test_ctc.cpp

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

#include <cmath>
#include <limits>

#include <doctest.h>

#include "semivox/ctc.hpp"
#include "test_util.hpp"

using namespace semivox;
using testutil::fd_grad;
using testutil::max_grad_err;

namespace {

LogProbs from_probs(const std::vector<std::vector<double>>& rows) {
  LogProbs lp;
  lp.m = Tensor({rows.size(), rows[0].size()});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t v = 0; v < rows[t].size(); ++v) {
      lp.m.at(t, v) = std::log(rows[t][v]);
    }
  }
  return lp;
}

LogProbs random_logprobs(int T, int V, Rng& rng) {
  LogProbs lp;
  lp.m = Tensor({static_cast<std::size_t>(T), static_cast<std::size_t>(V)});
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    std::vector<double> p(static_cast<std::size_t>(V));
    for (auto& x : p) {
      x = rng.uniform(0.05, 1.0);
      sum += x;
    }
    for (int v = 0; v < V; ++v) {
      lp.m.at(static_cast<std::size_t>(t), static_cast<std::size_t>(v)) =
          std::log(p[static_cast<std::size_t>(v)] / sum);
    }
  }
  return lp;
}

std::vector<int> random_label(int max_len, int V, Rng& rng) {
  const int len = static_cast<int>(rng.uniform_int(0, max_len));
  std::vector<int> label(static_cast<std::size_t>(len));
  for (auto& t : label) t = static_cast<int>(rng.uniform_int(1, V - 1));
  return label;
}

}  // namespace

TEST_CASE("ctc loss on a single frame: one valid path") {
  const LogProbs lp = from_probs({{0.4, 0.6}});
  const CtcResult r = ctc_loss(lp, {1});
  CHECK(r.loss == doctest::Approx(-std::log(0.6)).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(0.5108256238).epsilon(1e-9));
}

TEST_CASE("ctc loss, empty label: all-blank path") {
  const LogProbs lp = from_probs({{0.5, 0.5}, {0.5, 0.5}});
  const CtcResult r = ctc_loss(lp, {});
  CHECK(r.loss == doctest::Approx(-std::log(0.25)).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(1.3862943611).epsilon(1e-9));
}

TEST_CASE("ctc loss, T=2 uniform, label 'a': paths {a., .a, aa}") {
  const LogProbs lp = from_probs({{0.5, 0.5}, {0.5, 0.5}});
  const CtcResult r = ctc_loss(lp, {1});
  CHECK(r.loss == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(0.2876820724).epsilon(1e-9));
  CHECK(r.loss == doctest::Approx(oracle_ctc_loss(lp, {1})).epsilon(1e-12));
}

TEST_CASE("ctc matches the exhaustive path oracle on random instances") {
  Rng rng(101);
  for (int it = 0; it < 120; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    const int V = static_cast<int>(rng.uniform_int(2, 4));
    const LogProbs lp = random_logprobs(T, V, rng);
    const std::vector<int> label = random_label(3, V, rng);
    const double oracle = oracle_ctc_loss(lp, label);
    if (std::isinf(oracle)) {
      CHECK_THROWS_AS(ctc_loss(lp, label), InfeasibleLabelError);
      continue;
    }
    const CtcResult r = ctc_loss(lp, label);
    CHECK(std::abs(r.loss - oracle) < 1e-9);
  }
}

TEST_CASE("infeasible labels raise a distinct error, matching oracle +inf") {
  const LogProbs lp = from_probs({{0.5, 0.5}});
  CHECK_THROWS_AS(ctc_loss(lp, {1, 1}), InfeasibleLabelError);
  CHECK(std::isinf(oracle_ctc_loss(lp, {1, 1})));
  CHECK(ctc_min_frames({1, 1}) == 3);
  CHECK(ctc_min_frames({1, 2}) == 2);
}

TEST_CASE("empty label oracle is the product of blank probabilities") {
  const LogProbs lp = from_probs({{0.7, 0.3}, {0.6, 0.4}});
  CHECK(oracle_ctc_loss(lp, {}) ==
        doctest::Approx(-std::log(0.7 * 0.6)).epsilon(1e-12));
}

TEST_CASE("ctc gradient matches central finite differences") {
  Rng rng(202);
  for (int it = 0; it < 12; ++it) {
    const int T = static_cast<int>(rng.uniform_int(2, 8));
    const int V = static_cast<int>(rng.uniform_int(2, 5));
    const LogProbs lp = random_logprobs(T, V, rng);
    std::vector<int> label = random_label(3, V, rng);
    if (T < ctc_min_frames(label)) label.clear();
    const CtcResult r = ctc_loss(lp, label);
    const Tensor fd = fd_grad(lp.m, [&](const Tensor& m) {
      LogProbs x;
      x.m = m;
      return ctc_loss(x, label, false).loss;
    });
    CHECK(max_grad_err(r.grad, fd, 1e-5) < 1e-5);
  }
}

TEST_CASE("ctc loss is nonnegative and zero only for a certain path") {
  Rng rng(303);
  for (int it = 0; it < 50; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    const int V = 3;
    const LogProbs lp = random_logprobs(T, V, rng);
    const std::vector<int> label = random_label(2, V, rng);
    if (T < ctc_min_frames(label)) continue;
    CHECK(ctc_loss(lp, label, false).loss >= 0.0);
  }
  // probability-1 path: certain one-hot emission
  LogProbs lp;
  lp.m = Tensor({2, 2}, kLogZero);
  lp.m.at(0, 1) = 0.0;
  lp.m.at(1, 1) = 0.0;
  CHECK(ctc_loss(lp, {1}, false).loss == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("moving mass toward the label monotonically decreases the loss") {
  // two frames; interpolate from mass on token 2 toward token 1 ("a")
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 10; ++step) {
    const double f = step / 10.0;
    const double pa = 0.05 + 0.9 * f;
    const double pb = 0.95 - 0.9 * f;
    const LogProbs lp = from_probs({{0.05, pa, pb}, {0.9, 0.05, 0.05}});
    const double loss = ctc_loss(lp, {1}, false).loss;
    CHECK(loss <= prev + 1e-12);
    prev = loss;
  }
}

TEST_CASE("greedy decoding applies the collapse rule") {
  // argmax frames a a blank b -> "ab"
  const LogProbs lp1 =
      from_probs({{0.2, 0.7, 0.1}, {0.1, 0.8, 0.1}, {0.9, 0.05, 0.05}, {0.1, 0.2, 0.7}});
  CHECK(greedy_decode(lp1) == std::vector<int>{1, 2});
  // all blank -> empty
  const LogProbs lp2 = from_probs({{0.8, 0.1, 0.1}, {0.8, 0.1, 0.1}});
  CHECK(greedy_decode(lp2).empty());
  // a blank a -> "aa"
  const LogProbs lp3 =
      from_probs({{0.1, 0.8, 0.1}, {0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}});
  CHECK(greedy_decode(lp3) == std::vector<int>{1, 1});
  // ties break toward the lowest index
  const LogProbs lp4 = from_probs({{0.4, 0.4, 0.2}});
  CHECK(greedy_decode(lp4).empty());  // blank wins the tie
  const LogProbs lp5 = from_probs({{0.2, 0.4, 0.4}});
  CHECK(greedy_decode(lp5) == std::vector<int>{1});
}

TEST_CASE("greedy on one-hot paths equals the collapse rule for all paths") {
  const int V = 4;
  for (int T = 1; T <= 6; ++T) {
    long long n_paths = 1;
    for (int i = 0; i < T; ++i) n_paths *= V;
    for (long long code = 0; code < n_paths; ++code) {
      std::vector<int> path(static_cast<std::size_t>(T));
      long long x = code;
      for (int t = 0; t < T; ++t) {
        path[static_cast<std::size_t>(t)] = static_cast<int>(x % V);
        x /= V;
      }
      LogProbs lp;
      lp.m = Tensor({static_cast<std::size_t>(T), static_cast<std::size_t>(V)},
                    std::log(0.01 / (V - 1)));
      for (int t = 0; t < T; ++t) {
        lp.m.at(static_cast<std::size_t>(t),
                static_cast<std::size_t>(path[static_cast<std::size_t>(t)])) =
            std::log(0.99);
      }
      CHECK(greedy_decode(lp) == collapse_path(path));
    }
  }
}

// Exhaustive decoding oracle: scores every label sequence of length <= T by
// the brute-force path enumeration plus LM and bonus terms.
namespace {
std::vector<int> exhaustive_best(const LogProbs& lp, const CharNGramLM* lm,
                                 double lm_weight, double ins_bonus) {
  const int T = lp.frames();
  const int V = lp.vocab();
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  bool have = false;
  std::function<void(std::vector<int>&)> visit = [&](std::vector<int>& y) {
    const double ctc = -oracle_ctc_loss(lp, y);
    if (!std::isinf(ctc)) {
      double s = ctc + ins_bonus * static_cast<double>(y.size());
      if (lm && lm_weight != 0.0) s += lm_weight * lm_score(*lm, y);
      const bool better =
          !have || s > best_score ||
          (s == best_score &&
           (y.size() < best.size() || (y.size() == best.size() && y < best)));
      if (better) {
        best = y;
        best_score = s;
        have = true;
      }
    }
    if (static_cast<int>(y.size()) == T) return;
    for (int c = 1; c < V; ++c) {
      y.push_back(c);
      visit(y);
      y.pop_back();
    }
  };
  std::vector<int> y;
  visit(y);
  return best;
}
}  // namespace

TEST_CASE("unbounded beam equals the exhaustive prefix-search oracle") {
  Rng rng(404);
  BeamConfig cfg;
  cfg.beam_width = -1;  // unbounded
  for (int it = 0; it < 60; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 5));
    const int V = static_cast<int>(rng.uniform_int(2, 4));
    const LogProbs lp = random_logprobs(T, V, rng);
    CHECK(beam_decode(lp, nullptr, cfg) == exhaustive_best(lp, nullptr, 0, 0));
  }
}

TEST_CASE("unbounded beam with LM fusion equals the oracle") {
  Rng rng(505);
  std::vector<std::vector<int>> texts = {{1, 2, 1}, {2, 1}, {1, 2}, {1, 1, 2}};
  const CharNGramLM lm = train_char_lm(texts, 2, 0.1, 3);
  BeamConfig cfg;
  cfg.beam_width = -1;
  cfg.lm_weight = 0.7;
  cfg.ins_bonus = 0.15;
  for (int it = 0; it < 40; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 4));
    const LogProbs lp = random_logprobs(T, 3, rng);
    CHECK(beam_decode(lp, &lm, cfg) ==
          exhaustive_best(lp, &lm, cfg.lm_weight, cfg.ins_bonus));
  }
}

TEST_CASE("beam with peaked distributions equals greedy") {
  Rng rng(606);
  BeamConfig cfg;
  cfg.beam_width = 16;
  for (int it = 0; it < 20; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    const int V = 4;
    LogProbs lp;
    lp.m = Tensor({static_cast<std::size_t>(T), static_cast<std::size_t>(V)},
                  std::log(0.02 / (V - 1)));
    for (int t = 0; t < T; ++t) {
      const auto peak = static_cast<std::size_t>(rng.uniform_int(0, V - 1));
      lp.m.at(static_cast<std::size_t>(t), peak) = std::log(0.98);
    }
    CHECK(beam_decode(lp, nullptr, cfg) == greedy_decode(lp));
  }
}

TEST_CASE("beam width 1 without LM equals greedy on unique-argmax inputs") {
  Rng rng(707);
  BeamConfig cfg;
  cfg.beam_width = 1;
  for (int it = 0; it < 30; ++it) {
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    LogProbs lp;
    lp.m = Tensor({static_cast<std::size_t>(T), 3}, std::log(0.05));
    for (int t = 0; t < T; ++t) {
      const auto peak = static_cast<std::size_t>(rng.uniform_int(0, 2));
      lp.m.at(static_cast<std::size_t>(t), peak) = std::log(0.9);
    }
    CHECK(beam_decode(lp, nullptr, cfg) == greedy_decode(lp));
  }
}

TEST_CASE("a strong LM that forbids a token keeps it out of the output") {
  // LM trained only on token-1 sequences; token 2 is (almost) forbidden
  std::vector<std::vector<int>> texts = {{1, 1}, {1}, {1, 1, 1}};
  const CharNGramLM lm = train_char_lm(texts, 2, 1e-6, 3);
  BeamConfig cfg;
  cfg.beam_width = -1;
  cfg.lm_weight = 30.0;
  // acoustics prefer token 2
  const LogProbs lp = from_probs({{0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}});
  const auto out = beam_decode(lp, &lm, cfg);
  for (int tok : out) CHECK(tok != 2);
}

TEST_CASE("invalid beam width is rejected") {
  const LogProbs lp = from_probs({{0.5, 0.5}});
  BeamConfig cfg;
  cfg.beam_width = 0;
  CHECK_THROWS_AS(beam_decode(lp, nullptr, cfg), std::invalid_argument);
}

TEST_CASE("degenerate single-sequence corpus drives P to 1 as k -> 0") {
  const std::vector<std::vector<int>> texts = {{1, 2}};
  const CharNGramLM lm = train_char_lm(texts, 2, 1e-9, 3);
  CHECK(std::exp(lm.score({1, 2})) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("conditional distributions sum to one") {
  Rng rng(808);
  std::vector<std::vector<int>> texts;
  for (int i = 0; i < 20; ++i) texts.push_back(random_label(6, 5, rng));
  const CharNGramLM lm = train_char_lm(texts, 4, 0.01, 5);
  for (int it = 0; it < 20; ++it) {
    const std::vector<int> hist = random_label(3, 5, rng);
    const auto dist = lm.cond_distribution(hist);
    double sum = 0.0;
    for (double p : dist) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("lm_score matches the hand-computed chain product") {
  // corpus: "ab", "ba", "ab" with order 2, k = 0.5, vocab {blank,a,b}
  const std::vector<std::vector<int>> texts = {{1, 2}, {2, 1}, {1, 2}};
  const double k = 0.5;
  const CharNGramLM lm = train_char_lm(texts, 2, k, 3);
  // outcomes per history: tokens {1,2} + end = 3
  // histories: BOS: a:2 b:1 (total 3); a: b:2 end:1 (3); b: a:1 end:2 (3)
  const double p1 = (2 + k) / (3 + 3 * k);  // P(a|BOS)
  const double p2 = (2 + k) / (3 + 3 * k);  // P(b|a)
  const double p3 = (2 + k) / (3 + 3 * k);  // P(end|b)
  const double expect = std::log(p1) + std::log(p2) + std::log(p3);
  CHECK(lm_score(lm, {1, 2}) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("wer basics and the quadratic DP oracle") {
  CHECK(wer({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(wer({1, 2}, {1}) == doctest::Approx(0.5));
  CHECK(wer({}, {1, 2, 3}) == doctest::Approx(3.0));  // per-hyp-token convention
  CHECK(wer({}, {}) == 0.0);

  // full-matrix reference implementation
  auto full_dp = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      for (std::size_t j = 1; j <= b.size(); ++j) {
        d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                            d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      }
    }
    return d[a.size()][b.size()];
  };
  Rng rng(909);
  for (int it = 0; it < 100; ++it) {
    const auto a = random_label(8, 5, rng);
    const auto b = random_label(8, 5, rng);
    CHECK(edit_distance(a, b) == full_dp(a, b));
  }
}

TEST_CASE("cer flattens multi-character tokens") {
  CHECK(cer_tokens({"p1", "p2"}, {"p1", "p2"}) == 0.0);
  // "p1 p2" vs "p1": chars p,1,p,2 vs p,1 -> 2 deletions / 4
  CHECK(cer_tokens({"p1", "p2"}, {"p1"}) == doctest::Approx(0.5));
}

TEST_CASE("logprob validation rejects bad rows") {
  LogProbs lp;
  lp.m = Tensor({1, 2}, std::log(0.8));
  CHECK_THROWS_AS(lp.validate(), std::invalid_argument);
  const LogProbs ok = from_probs({{0.3, 0.7}});
  CHECK_NOTHROW(ok.validate());
}
