// semivox/corpus.hpp

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

#ifndef SEMIVOX_CORPUS_HPP_
#define SEMIVOX_CORPUS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace semivox {

// Token inventory. Index 0 is always the reserved CTC blank; it never
// appears in a transcript.
struct Vocabulary {
  std::string id;
  std::string level;  // "char" or "phone"
  std::vector<std::string> tokens;

  int index_of(const std::string& token) const;  // throws on unknown
  int size() const { return static_cast<int>(tokens.size()); }
  void validate() const;

  std::vector<int> encode(const std::vector<std::string>& transcript) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;
};

// Generation recipe for one utterance: each token renders as a fixed-length
// sinusoid segment at the token's frequency, plus seeded noise. The seed
// fully determines the samples.
struct SynthSpec {
  std::map<std::string, double> freq;  // token -> Hz, distinct per token
  double tokens_per_second = 50.0;
  double noise = 0.0;
  double tempo = 1.0;  // < 1 means slower speech (longer segments)
  int sample_rate = 2000;
  std::uint64_t seed = 0;

  int segment_samples() const;
  void validate() const;
};

struct Utterance {
  std::string id;
  std::vector<double> waveform;  // samples in [-1, 1]
  int sample_rate = 0;
  std::vector<std::string> transcript;  // empty when unlabeled
  std::string domain;
  std::string language;
  bool labeled = false;
  SynthSpec synth;
  std::vector<std::string> synth_tokens;  // tokens rendered into audio
};

struct Manifest {
  std::string role;  // pretrain-unlabeled | pretrain-labeled | finetune | dev | test
  std::string vocabulary;
  std::vector<Utterance> utterances;
};

struct CorpusConfig {
  std::uint64_t seed = 0;
  int sample_rate = 2000;
  double tokens_per_second = 50.0;
  std::string source_tokens = "abcdef";
  double freq_base = 150.0;
  double freq_step = 110.0;
  std::string crosslingual_tokens = "ghijkm";
  double crosslingual_freq_base = 205.0;
  double crosslingual_freq_step = 110.0;
  double noise = 0.05;
  double tempo = 1.0;
  double crossdomain_noise = 0.12;
  double crossdomain_tempo = 0.8;
  int transcript_min = 3;
  int transcript_max = 6;
  int pretrain_labeled = 20;
  int pretrain_unlabeled = 172;
  int finetune_size = 12;
  int dev_size = 16;
  int test_size = 16;
  // When true the labeled pre-training audio is a relabeled prefix of the
  // unlabeled pool instead of fresh utterances.
  bool labeled_overlap = false;

  void validate() const;
};

struct Corpus {
  std::map<std::string, Vocabulary> vocabularies;
  std::map<std::string, std::vector<std::string>> phone_map;  // char -> phones
  std::map<std::string, Manifest> manifests;
};

// Renders a transcript into audio. Identical (spec, transcript) pairs give
// bit-identical waveforms. Unknown tokens are rejected by name.
Utterance synthesize(const SynthSpec& spec,
                     const std::vector<std::string>& transcript);

// Builds the full toy corpus: source-language pre-training splits plus
// in-domain, cross-domain and cross-lingual fine-tune/dev/test splits.
Corpus build_corpus(const CorpusConfig& config);

// Rewrites a transcript into the phone vocabulary through a total
// char -> phone-sequence mapping. Audio is untouched.
Utterance phone_relabel(const Utterance& utt,
                        const std::map<std::string, std::vector<std::string>>& mapping);

// Split names used by build_corpus.
inline const char* kSplitPretrainLabeled = "pretrain_labeled";
inline const char* kSplitPretrainUnlabeled = "pretrain_unlabeled";
std::vector<std::string> corpus_target_names();  // in_domain, cross_domain, cross_lingual

// Disk format: one JSON manifest per split plus a vocabulary table.
// Waveforms are regenerated on load, never stored.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);
Manifest load_manifest(const std::string& path);

// Optional raw-sample dump, 32-bit IEEE-754 little-endian.
void dump_waveform(const Utterance& utt, const std::string& path);

}  // namespace semivox

#endif  // SEMIVOX_CORPUS_HPP_
