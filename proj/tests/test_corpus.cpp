// tests/test_corpus.cpp

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
#include <filesystem>
#include <set>

#include <doctest.h>

#include "semivox/corpus.hpp"

using namespace semivox;

namespace {

SynthSpec test_spec(double noise = 0.0, std::uint64_t seed = 0) {
  SynthSpec s;
  s.freq = {{"a", 200.0}, {"b", 330.0}};
  s.tokens_per_second = 50.0;
  s.sample_rate = 2000;
  s.noise = noise;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("zero-noise synthesis is a pure sinusoid at the token frequency") {
  const SynthSpec spec = test_spec();
  const Utterance utt = synthesize(spec, {"a"});
  const int seg = spec.segment_samples();
  REQUIRE(static_cast<int>(utt.waveform.size()) == seg);
  for (int i = 0; i < seg; ++i) {
    const double expect = 0.8 * std::sin(2.0 * M_PI * 200.0 * i / 2000.0);
    CHECK(utt.waveform[static_cast<std::size_t>(i)] ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("synthesis is deterministic for identical spec and transcript") {
  const SynthSpec spec = test_spec(0.1, 99);
  const Utterance a = synthesize(spec, {"a", "b", "a"});
  const Utterance b = synthesize(spec, {"a", "b", "a"});
  CHECK(a.waveform == b.waveform);
}

TEST_CASE("different noise seeds differ in samples but not length") {
  const Utterance a = synthesize(test_spec(0.1, 7), {"a", "b"});
  const Utterance b = synthesize(test_spec(0.1, 8), {"a", "b"});
  CHECK(a.waveform.size() == b.waveform.size());
  CHECK(a.waveform != b.waveform);
}

TEST_CASE("unknown token is rejected by name") {
  CHECK_THROWS_WITH_AS(synthesize(test_spec(), {"z"}),
                       doctest::Contains("unknown token 'z'"),
                       std::invalid_argument);
}

TEST_CASE("waveform samples stay in [-1, 1] even with heavy noise") {
  SynthSpec spec = test_spec(0.5, 3);
  const Utterance utt = synthesize(spec, {"a", "b", "a", "b"});
  for (double s : utt.waveform) {
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);
  }
}

TEST_CASE("build_corpus echoes configured split sizes") {
  CorpusConfig cfg;
  cfg.pretrain_labeled = 20;
  cfg.pretrain_unlabeled = 200;
  cfg.finetune_size = 5;
  cfg.dev_size = 4;
  cfg.test_size = 3;
  const Corpus corpus = build_corpus(cfg);
  CHECK(corpus.manifests.at(kSplitPretrainLabeled).utterances.size() == 20);
  CHECK(corpus.manifests.at(kSplitPretrainUnlabeled).utterances.size() == 200);
  for (const auto& t : corpus_target_names()) {
    CHECK(corpus.manifests.at("finetune_" + t).utterances.size() == 5);
    CHECK(corpus.manifests.at("dev_" + t).utterances.size() == 4);
    CHECK(corpus.manifests.at("test_" + t).utterances.size() == 3);
  }
}

TEST_CASE("default labeled:unlabeled ratio matches the 100h:860h analogue") {
  const CorpusConfig cfg;
  CHECK(cfg.pretrain_labeled == 20);
  CHECK(cfg.pretrain_unlabeled == 172);
  CHECK(cfg.pretrain_unlabeled ==
        doctest::Approx(cfg.pretrain_labeled * 8.6));
}

TEST_CASE("cross-lingual vocabulary shares only the blank with the source") {
  const Corpus corpus = build_corpus(CorpusConfig{});
  const auto& alpha = corpus.vocabularies.at("alpha_char").tokens;
  const auto& beta = corpus.vocabularies.at("beta_char").tokens;
  std::set<std::string> a(alpha.begin(), alpha.end());
  std::set<std::string> shared;
  for (const auto& t : beta) {
    if (a.count(t)) shared.insert(t);
  }
  CHECK(shared == std::set<std::string>{"<blank>"});
}

TEST_CASE("corpus invariants: labels in vocab, no blanks, disjoint targets") {
  const Corpus corpus = build_corpus(CorpusConfig{});
  for (const auto& [name, m] : corpus.manifests) {
    const auto& vocab = corpus.vocabularies.at(m.vocabulary);
    for (const auto& u : m.utterances) {
      if (!u.labeled) {
        CHECK(u.transcript.empty());
        continue;
      }
      for (const auto& tok : u.transcript) {
        CHECK(tok != "<blank>");
        CHECK_NOTHROW(vocab.index_of(tok));
      }
    }
  }
  for (const auto& t : corpus_target_names()) {
    std::set<std::string> ids;
    std::size_t total = 0;
    for (const auto& role : {"finetune_", "dev_", "test_"}) {
      for (const auto& u : corpus.manifests.at(role + t).utterances) {
        ids.insert(u.id);
        ++total;
      }
    }
    CHECK(ids.size() == total);  // finetune/dev/test disjoint
  }
}

TEST_CASE("corpus is a pure function of the config") {
  CorpusConfig cfg;
  cfg.seed = 1234;
  const Corpus a = build_corpus(cfg);
  const Corpus b = build_corpus(cfg);
  REQUIRE(a.manifests.size() == b.manifests.size());
  for (const auto& [name, ma] : a.manifests) {
    const auto& mb = b.manifests.at(name);
    REQUIRE(ma.utterances.size() == mb.utterances.size());
    for (std::size_t i = 0; i < ma.utterances.size(); ++i) {
      CHECK(ma.utterances[i].waveform == mb.utterances[i].waveform);
      CHECK(ma.utterances[i].transcript == mb.utterances[i].transcript);
    }
  }
}

TEST_CASE("size constraint violations are rejected") {
  CorpusConfig cfg;
  cfg.labeled_overlap = true;
  cfg.pretrain_labeled = 50;
  cfg.pretrain_unlabeled = 10;
  CHECK_THROWS_AS(build_corpus(cfg), std::invalid_argument);
  CorpusConfig bad;
  bad.transcript_min = 5;
  bad.transcript_max = 2;
  CHECK_THROWS_AS(build_corpus(bad), std::invalid_argument);
}

TEST_CASE("labeled overlap mode reuses unlabeled audio") {
  CorpusConfig cfg;
  cfg.labeled_overlap = true;
  cfg.pretrain_labeled = 5;
  cfg.pretrain_unlabeled = 20;
  const Corpus corpus = build_corpus(cfg);
  const auto& lab = corpus.manifests.at(kSplitPretrainLabeled).utterances;
  const auto& pool = corpus.manifests.at(kSplitPretrainUnlabeled).utterances;
  REQUIRE(lab.size() == 5);
  for (std::size_t i = 0; i < lab.size(); ++i) {
    CHECK(lab[i].waveform == pool[i].waveform);
    CHECK(lab[i].labeled);
    CHECK(!lab[i].transcript.empty());
  }
}

TEST_CASE("phone relabel: identity, substitution, round trip") {
  const SynthSpec spec = test_spec();
  Utterance utt = synthesize(spec, {"a", "b"});
  utt.transcript = {"a", "b"};
  utt.labeled = true;

  std::map<std::string, std::vector<std::string>> identity = {{"a", {"a"}},
                                                              {"b", {"b"}}};
  CHECK(phone_relabel(utt, identity).transcript == utt.transcript);

  std::map<std::string, std::vector<std::string>> mapping = {
      {"a", {"p1", "p2"}}, {"b", {"p3"}}};
  const Utterance ph = phone_relabel(utt, mapping);
  CHECK(ph.transcript == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(ph.waveform == utt.waveform);

  // round trip through an invertible mapping, reconstructed in the test
  std::map<std::string, std::string> first_phone_to_char;
  std::map<std::string, std::size_t> expansion_len;
  for (const auto& [ch, phones] : mapping) {
    first_phone_to_char[phones.front()] = ch;
    expansion_len[phones.front()] = phones.size();
  }
  std::vector<std::string> recovered;
  for (std::size_t i = 0; i < ph.transcript.size();) {
    const auto& ch = first_phone_to_char.at(ph.transcript[i]);
    recovered.push_back(ch);
    i += expansion_len.at(ph.transcript[i]);
  }
  CHECK(recovered == utt.transcript);

  std::map<std::string, std::vector<std::string>> partial = {{"a", {"p1"}}};
  CHECK_THROWS_WITH_AS(phone_relabel(utt, partial),
                       doctest::Contains("no mapping for token 'b'"),
                       std::invalid_argument);
}

TEST_CASE("corpus phone map round-trips the built-in vocabularies") {
  const Corpus corpus = build_corpus(CorpusConfig{});
  const auto& m = corpus.manifests.at(kSplitPretrainLabeled);
  const auto& utt = m.utterances.front();
  const Utterance ph = phone_relabel(utt, corpus.phone_map);
  const auto& pv = corpus.vocabularies.at("alpha_phone");
  for (const auto& tok : ph.transcript) CHECK_NOTHROW(pv.index_of(tok));
  CHECK(ph.transcript.size() >= utt.transcript.size());
}

TEST_CASE("manifest write/load round trip regenerates identical waveforms") {
  namespace fs = std::filesystem;
  CorpusConfig cfg;
  cfg.pretrain_labeled = 3;
  cfg.pretrain_unlabeled = 4;
  cfg.finetune_size = 2;
  cfg.dev_size = 2;
  cfg.test_size = 2;
  const Corpus corpus = build_corpus(cfg);
  const std::string dir =
      (fs::temp_directory_path() / "semivox_corpus_test").string();
  fs::remove_all(dir);
  write_corpus(corpus, dir);
  const Corpus loaded = load_corpus(dir);
  REQUIRE(loaded.manifests.size() == corpus.manifests.size());
  for (const auto& [name, m] : corpus.manifests) {
    const auto& lm = loaded.manifests.at(name);
    REQUIRE(lm.utterances.size() == m.utterances.size());
    CHECK(lm.role == m.role);
    CHECK(lm.vocabulary == m.vocabulary);
    for (std::size_t i = 0; i < m.utterances.size(); ++i) {
      CHECK(lm.utterances[i].waveform == m.utterances[i].waveform);
      CHECK(lm.utterances[i].transcript == m.utterances[i].transcript);
      CHECK(lm.utterances[i].labeled == m.utterances[i].labeled);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("raw waveform dump is 32-bit little-endian") {
  namespace fs = std::filesystem;
  const Utterance utt = synthesize(test_spec(), {"a"});
  const std::string path =
      (fs::temp_directory_path() / "semivox_wave.f32").string();
  dump_waveform(utt, path);
  CHECK(fs::file_size(path) == utt.waveform.size() * 4);
  fs::remove(path);
}
