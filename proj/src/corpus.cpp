// semivox/corpus.cpp

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

#include "semivox/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "semivox/fileutil.hpp"
#include "semivox/rng.hpp"

namespace semivox {

using nlohmann::json;

namespace {
constexpr double kToneAmplitude = 0.8;
constexpr const char* kBlankToken = "<blank>";
}  // namespace

int Vocabulary::index_of(const std::string& token) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == token) return static_cast<int>(i);
  }
  throw std::invalid_argument("vocabulary '" + id + "': unknown token '" +
                              token + "'");
}

void Vocabulary::validate() const {
  if (tokens.size() < 2) {
    throw std::invalid_argument("vocabulary '" + id + "': needs >= 2 tokens");
  }
  if (level != "char" && level != "phone") {
    throw std::invalid_argument("vocabulary '" + id + "': bad level " + level);
  }
  std::set<std::string> seen(tokens.begin(), tokens.end());
  if (seen.size() != tokens.size()) {
    throw std::invalid_argument("vocabulary '" + id + "': duplicate tokens");
  }
}

std::vector<int> Vocabulary::encode(
    const std::vector<std::string>& transcript) const {
  std::vector<int> ids;
  ids.reserve(transcript.size());
  for (const auto& t : transcript) {
    const int ix = index_of(t);
    if (ix == 0) {
      throw std::invalid_argument("transcript contains the blank token");
    }
    ids.push_back(ix);
  }
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int ix : ids) {
    if (ix <= 0 || ix >= size()) {
      throw std::invalid_argument("token id out of range");
    }
    out.push_back(tokens[static_cast<std::size_t>(ix)]);
  }
  return out;
}

int SynthSpec::segment_samples() const {
  return static_cast<int>(
      std::lround(sample_rate / (tokens_per_second * tempo)));
}

void SynthSpec::validate() const {
  if (sample_rate <= 0 || tokens_per_second <= 0.0 || tempo <= 0.0) {
    throw std::invalid_argument("synth spec: nonpositive rate");
  }
  if (noise < 0.0) throw std::invalid_argument("synth spec: negative noise");
  std::set<long> freqs;
  for (const auto& [tok, f] : freq) {
    if (f <= 0.0 || f >= sample_rate / 2.0) {
      throw std::invalid_argument("synth spec: frequency out of range for '" +
                                  tok + "'");
    }
    if (!freqs.insert(std::lround(f * 1000)).second) {
      throw std::invalid_argument("synth spec: duplicate frequency");
    }
  }
}

Utterance synthesize(const SynthSpec& spec,
                     const std::vector<std::string>& transcript) {
  spec.validate();
  const int seg = spec.segment_samples();
  Utterance utt;
  utt.sample_rate = spec.sample_rate;
  utt.synth = spec;
  utt.synth_tokens = transcript;
  utt.waveform.reserve(transcript.size() * static_cast<std::size_t>(seg));
  for (const auto& tok : transcript) {
    auto it = spec.freq.find(tok);
    if (it == spec.freq.end()) {
      throw std::invalid_argument("synthesize: unknown token '" + tok + "'");
    }
    const double omega = 2.0 * M_PI * it->second / spec.sample_rate;
    for (int i = 0; i < seg; ++i) {
      utt.waveform.push_back(kToneAmplitude * std::sin(omega * i));
    }
  }
  if (spec.noise > 0.0) {
    Rng rng(derive_seed(spec.seed, "synth-noise"));
    for (auto& s : utt.waveform) {
      s += spec.noise * rng.gaussian();
      s = std::clamp(s, -1.0, 1.0);
    }
  }
  if (utt.waveform.empty()) {
    throw std::invalid_argument("synthesize: empty transcript");
  }
  return utt;
}

void CorpusConfig::validate() const {
  if (pretrain_labeled < 0 || pretrain_unlabeled < 0) {
    throw std::invalid_argument("corpus config: negative split size");
  }
  if (labeled_overlap && pretrain_labeled > pretrain_unlabeled) {
    throw std::invalid_argument(
        "corpus config: labeled exceeds the unlabeled pool it overlaps");
  }
  if (finetune_size < 1 || dev_size < 1 || test_size < 1) {
    throw std::invalid_argument("corpus config: target splits need >= 1");
  }
  if (transcript_min < 1 || transcript_max < transcript_min) {
    throw std::invalid_argument("corpus config: bad transcript length range");
  }
  std::set<char> src(source_tokens.begin(), source_tokens.end());
  std::set<char> xl(crosslingual_tokens.begin(), crosslingual_tokens.end());
  if (src.size() != source_tokens.size() ||
      xl.size() != crosslingual_tokens.size()) {
    throw std::invalid_argument("corpus config: duplicate tokens");
  }
  for (char c : xl) {
    if (src.count(c)) {
      throw std::invalid_argument(
          "corpus config: cross-lingual tokens overlap source tokens");
    }
  }
}

std::vector<std::string> corpus_target_names() {
  return {"in_domain", "cross_domain", "cross_lingual"};
}

namespace {

Vocabulary make_char_vocab(const std::string& id, const std::string& chars) {
  Vocabulary v;
  v.id = id;
  v.level = "char";
  v.tokens.push_back(kBlankToken);
  for (char c : chars) v.tokens.push_back(std::string(1, c));
  v.validate();
  return v;
}

std::map<std::string, double> freq_map(const std::string& chars, double base,
                                       double step) {
  std::map<std::string, double> m;
  int i = 0;
  for (char c : chars) m[std::string(1, c)] = base + step * i++;
  return m;
}

std::vector<std::string> sample_transcript(const CorpusConfig& cfg,
                                           const std::string& chars,
                                           Rng& rng) {
  const int len = static_cast<int>(
      rng.uniform_int(cfg.transcript_min, cfg.transcript_max));
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    const auto ix = rng.uniform_int(0, static_cast<std::int64_t>(chars.size()) - 1);
    out.push_back(std::string(1, chars[static_cast<std::size_t>(ix)]));
  }
  return out;
}

struct SplitPlan {
  std::string name;
  std::string role;
  std::string vocab;
  std::string domain;
  std::string language;
  std::string chars;
  double noise, tempo;
  std::map<std::string, double> freq;
  int count;
  bool labeled;
};

Manifest build_split(const CorpusConfig& cfg, const SplitPlan& plan) {
  Manifest m;
  m.role = plan.role;
  m.vocabulary = plan.vocab;
  Rng text_rng(derive_seed(cfg.seed, "text:" + plan.name));
  m.utterances.resize(static_cast<std::size_t>(plan.count));
  // pre-draw transcripts and seeds so synthesis order is free to vary
  std::vector<std::vector<std::string>> texts(m.utterances.size());
  std::vector<std::uint64_t> seeds(m.utterances.size());
  for (std::size_t i = 0; i < m.utterances.size(); ++i) {
    texts[i] = sample_transcript(cfg, plan.chars, text_rng);
    seeds[i] = derive_seed(cfg.seed, "synth:" + plan.name, i);
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(m.utterances.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    SynthSpec spec;
    spec.freq = plan.freq;
    spec.tokens_per_second = cfg.tokens_per_second;
    spec.sample_rate = cfg.sample_rate;
    spec.noise = plan.noise;
    spec.tempo = plan.tempo;
    spec.seed = seeds[i];
    Utterance utt = synthesize(spec, texts[i]);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_%04zu", i);
    utt.id = plan.name + buf;
    utt.domain = plan.domain;
    utt.language = plan.language;
    utt.labeled = plan.labeled;
    if (plan.labeled) utt.transcript = texts[i];
    m.utterances[i] = std::move(utt);
  }
  return m;
}

}  // namespace

Corpus build_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.vocabularies["alpha_char"] = make_char_vocab("alpha_char", cfg.source_tokens);
  corpus.vocabularies["beta_char"] =
      make_char_vocab("beta_char", cfg.crosslingual_tokens);

  // Phone inventory: alternate 1- and 2-phone expansions per source char.
  {
    Vocabulary pv;
    pv.id = "alpha_phone";
    pv.level = "phone";
    pv.tokens.push_back(kBlankToken);
    int pidx = 0;
    for (std::size_t i = 0; i < cfg.source_tokens.size(); ++i) {
      const std::string ch(1, cfg.source_tokens[i]);
      std::vector<std::string> phones;
      const int n_phones = (i % 2 == 0) ? 1 : 2;
      for (int j = 0; j < n_phones; ++j) {
        phones.push_back("p" + std::to_string(pidx++));
      }
      corpus.phone_map[ch] = phones;
      for (const auto& p : phones) pv.tokens.push_back(p);
    }
    pv.validate();
    corpus.vocabularies["alpha_phone"] = pv;
  }

  const auto src_freq =
      freq_map(cfg.source_tokens, cfg.freq_base, cfg.freq_step);
  const auto xl_freq = freq_map(cfg.crosslingual_tokens,
                                cfg.crosslingual_freq_base,
                                cfg.crosslingual_freq_step);

  std::vector<SplitPlan> plans;
  plans.push_back({kSplitPretrainUnlabeled, "pretrain-unlabeled", "alpha_char",
                   "studio", "alpha", cfg.source_tokens, cfg.noise, cfg.tempo,
                   src_freq, cfg.pretrain_unlabeled, false});
  if (!cfg.labeled_overlap) {
    plans.push_back({kSplitPretrainLabeled, "pretrain-labeled", "alpha_char",
                     "studio", "alpha", cfg.source_tokens, cfg.noise,
                     cfg.tempo, src_freq, cfg.pretrain_labeled, true});
  }
  struct TargetPlan {
    std::string name, vocab, domain, language, chars;
    double noise, tempo;
    std::map<std::string, double> freq;
  };
  const std::vector<TargetPlan> targets = {
      {"in_domain", "alpha_char", "studio", "alpha", cfg.source_tokens,
       cfg.noise, cfg.tempo, src_freq},
      {"cross_domain", "alpha_char", "field", "alpha", cfg.source_tokens,
       cfg.crossdomain_noise, cfg.crossdomain_tempo, src_freq},
      {"cross_lingual", "beta_char", "studio", "beta", cfg.crosslingual_tokens,
       cfg.noise, cfg.tempo, xl_freq},
  };
  for (const auto& t : targets) {
    const std::vector<std::pair<std::string, int>> sub = {
        {"finetune", cfg.finetune_size},
        {"dev", cfg.dev_size},
        {"test", cfg.test_size}};
    for (const auto& [role, count] : sub) {
      plans.push_back({role + "_" + t.name, role, t.vocab, t.domain,
                       t.language, t.chars, t.noise, t.tempo, t.freq, count,
                       true});
    }
  }

  for (const auto& plan : plans) {
    corpus.manifests[plan.name] = build_split(cfg, plan);
  }

  if (cfg.labeled_overlap) {
    // L^S audio is the prefix of the unlabeled pool, with labels attached.
    Manifest lab;
    lab.role = "pretrain-labeled";
    lab.vocabulary = "alpha_char";
    const auto& pool = corpus.manifests[kSplitPretrainUnlabeled].utterances;
    for (int i = 0; i < cfg.pretrain_labeled; ++i) {
      Utterance u = pool[static_cast<std::size_t>(i)];
      u.id = std::string(kSplitPretrainLabeled) + "_" + std::to_string(i);
      u.labeled = true;
      u.transcript = u.synth_tokens;
      lab.utterances.push_back(std::move(u));
    }
    corpus.manifests[kSplitPretrainLabeled] = std::move(lab);
  }
  return corpus;
}

Utterance phone_relabel(
    const Utterance& utt,
    const std::map<std::string, std::vector<std::string>>& mapping) {
  Utterance out = utt;
  out.transcript.clear();
  for (const auto& tok : utt.transcript) {
    auto it = mapping.find(tok);
    if (it == mapping.end()) {
      throw std::invalid_argument("phone_relabel: no mapping for token '" +
                                  tok + "'");
    }
    for (const auto& p : it->second) out.transcript.push_back(p);
  }
  return out;
}

namespace {

json synth_to_json(const SynthSpec& s, const std::vector<std::string>& tokens) {
  json j;
  j["seed"] = s.seed;
  j["sample_rate"] = s.sample_rate;
  j["tokens_per_second"] = s.tokens_per_second;
  j["noise"] = s.noise;
  j["tempo"] = s.tempo;
  j["freq"] = s.freq;
  j["tokens"] = tokens;
  return j;
}

SynthSpec synth_from_json(const json& j, std::vector<std::string>* tokens) {
  SynthSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.sample_rate = j.at("sample_rate").get<int>();
  s.tokens_per_second = j.at("tokens_per_second").get<double>();
  s.noise = j.at("noise").get<double>();
  s.tempo = j.at("tempo").get<double>();
  s.freq = j.at("freq").get<std::map<std::string, double>>();
  *tokens = j.at("tokens").get<std::vector<std::string>>();
  return s;
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& dir) {
  ensure_dir(dir);
  json vocabs;
  for (const auto& [id, v] : corpus.vocabularies) {
    vocabs["vocabularies"][id] = {{"level", v.level}, {"tokens", v.tokens}};
  }
  vocabs["phone_map"] = corpus.phone_map;
  atomic_write_file(dir + "/vocabs.json", vocabs.dump(2) + "\n");

  for (const auto& [name, m] : corpus.manifests) {
    json j;
    j["role"] = m.role;
    j["vocabulary"] = m.vocabulary;
    j["utterances"] = json::array();
    for (const auto& u : m.utterances) {
      json ju;
      ju["id"] = u.id;
      ju["transcript"] = u.transcript;
      ju["domain"] = u.domain;
      ju["language"] = u.language;
      ju["labeled"] = u.labeled;
      ju["synth"] = synth_to_json(u.synth, u.synth_tokens);
      j["utterances"].push_back(std::move(ju));
    }
    atomic_write_file(dir + "/manifest_" + name + ".json", j.dump(2) + "\n");
  }
}

Manifest load_manifest(const std::string& path) {
  const json j = json::parse(read_file(path));
  Manifest m;
  m.role = j.at("role").get<std::string>();
  m.vocabulary = j.at("vocabulary").get<std::string>();
  for (const auto& ju : j.at("utterances")) {
    std::vector<std::string> tokens;
    const SynthSpec spec = synth_from_json(ju.at("synth"), &tokens);
    Utterance u = synthesize(spec, tokens);
    u.id = ju.at("id").get<std::string>();
    u.transcript = ju.at("transcript").get<std::vector<std::string>>();
    u.domain = ju.at("domain").get<std::string>();
    u.language = ju.at("language").get<std::string>();
    u.labeled = ju.at("labeled").get<bool>();
    if (!u.labeled && !u.transcript.empty()) {
      throw std::invalid_argument("manifest: unlabeled utterance " + u.id +
                                  " carries a transcript");
    }
    m.utterances.push_back(std::move(u));
  }
  return m;
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  const json vocabs = json::parse(read_file(dir + "/vocabs.json"));
  for (const auto& [id, jv] : vocabs.at("vocabularies").items()) {
    Vocabulary v;
    v.id = id;
    v.level = jv.at("level").get<std::string>();
    v.tokens = jv.at("tokens").get<std::vector<std::string>>();
    v.validate();
    corpus.vocabularies[id] = std::move(v);
  }
  corpus.phone_map = vocabs.at("phone_map")
                         .get<std::map<std::string, std::vector<std::string>>>();
  namespace fs = std::filesystem;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind("manifest_", 0) != 0) continue;
    const std::string name =
        fname.substr(9, fname.size() - 9 - 5);  // strip prefix + ".json"
    corpus.manifests[name] = load_manifest(entry.path().string());
  }
  return corpus;
}

void dump_waveform(const Utterance& utt, const std::string& path) {
  std::string bytes;
  bytes.resize(utt.waveform.size() * 4);
  for (std::size_t i = 0; i < utt.waveform.size(); ++i) {
    const float f = static_cast<float>(utt.waveform[i]);
    std::memcpy(&bytes[i * 4], &f, 4);
  }
  atomic_write_file(path, bytes);
}

}  // namespace semivox
