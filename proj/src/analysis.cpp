// semivox/analysis.cpp

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

#include "semivox/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "semivox/fileutil.hpp"

namespace semivox {

std::vector<std::string> model_layer_names(const ModelConfig& cfg,
                                           bool include_conv) {
  std::vector<std::string> names;
  if (include_conv) {
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
      names.push_back("conv" + std::to_string(i));
    }
    names.push_back("feat");
  }
  for (int l = 0; l <= cfg.n_layers; ++l) {
    names.push_back("ctx" + std::to_string(l));
  }
  return names;
}

namespace {

// Eval-mode forward collecting every intermediate sequence by name.
std::map<std::string, Tensor> layer_outputs(const Checkpoint& ckpt,
                                            const Utterance& utt) {
  const ModelConfig& cfg = ckpt.config;
  Graph g;
  BoundParams bp = bind_parameters(g, ckpt.params, {});
  std::map<std::string, Tensor> out;

  Tensor x({utt.waveform.size(), static_cast<std::size_t>(1)});
  std::copy(utt.waveform.begin(), utt.waveform.end(), x.data.begin());
  NodeP h = g.constant(std::move(x));
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const std::string name = "encoder.conv" + std::to_string(i);
    h = g.conv1d(h, bp.at(name + ".weight"), bp.at(name + ".bias"),
                 cfg.conv[i].stride);
    h = cfg.activation == "relu" ? g.relu(h) : g.gelu(h);
    out["conv" + std::to_string(i)] = h->value;
  }
  h = g.layer_norm(h, bp.at("encoder.norm.gamma"), bp.at("encoder.norm.beta"));
  h = g.add_row_vector(g.matmul(h, bp.at("encoder.proj.weight")),
                       bp.at("encoder.proj.bias"));
  out["feat"] = h->value;
  auto c = context_forward(g, bp, cfg, h);
  for (std::size_t l = 0; l < c.size(); ++l) {
    out["ctx" + std::to_string(l)] = c[l]->value;
  }
  return out;
}

void center_columns(Tensor& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t j = 0; j < cols; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mu += m.at(i, j);
    mu /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) m.at(i, j) -= mu;
  }
}

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    }
  }
  return m;
}

// Whitened view: left singular vectors spanning `retain` of the variance.
Eigen::MatrixXd whitened_view(const Tensor& t, double retain) {
  Eigen::MatrixXd m = to_eigen(t);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double total = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) total += sv(i) * sv(i);
  if (total <= 0.0) {
    throw std::invalid_argument("cca: zero-variance view");
  }
  Eigen::Index r = 0;
  double acc = 0.0;
  while (r < sv.size() && acc < retain * total - 1e-12) {
    acc += sv(r) * sv(r);
    ++r;
  }
  if (r < 2) {
    throw std::invalid_argument(
        "cca: rank deficiency, fewer than 2 retained components");
  }
  return svd.matrixU().leftCols(r);
}

}  // namespace

std::vector<ActivationMatrix> collect_activations(
    const Checkpoint& ckpt, const Manifest& probe,
    const std::vector<std::string>& layers) {
  if (probe.utterances.empty()) {
    throw std::invalid_argument("collect_activations: empty probe split");
  }
  std::vector<std::map<std::string, Tensor>> per_utt(probe.utterances.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0;
       ip < static_cast<std::ptrdiff_t>(probe.utterances.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    per_utt[i] = layer_outputs(ckpt, probe.utterances[i]);
  }
  std::vector<ActivationMatrix> out;
  for (const auto& layer : layers) {
    std::size_t n = 0, d = 0;
    for (const auto& m : per_utt) {
      auto it = m.find(layer);
      if (it == m.end()) {
        throw std::invalid_argument("collect_activations: unknown layer " +
                                    layer);
      }
      n += it->second.rows();
      d = it->second.cols();
    }
    ActivationMatrix am;
    am.layer = layer;
    am.mat = Tensor({n, d});
    std::size_t row = 0;
    for (const auto& m : per_utt) {
      const Tensor& t = m.at(layer);
      for (std::size_t i = 0; i < t.rows(); ++i, ++row) {
        for (std::size_t j = 0; j < d; ++j) am.mat.at(row, j) = t.at(i, j);
      }
    }
    center_columns(am.mat);
    am.centered = true;
    out.push_back(std::move(am));
  }
  return out;
}

double cca_similarity(const Tensor& a, const Tensor& b, double retain) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("cca: views need the same sample count");
  }
  if (a.rows() <= a.cols() || b.rows() <= b.cols()) {
    throw std::invalid_argument(
        "cca: N <= d; collect more probe data before comparing");
  }
  if (retain <= 0.0 || retain > 1.0) {
    throw std::invalid_argument("cca: retention fraction out of range");
  }
  Tensor ac = a, bc = b;
  center_columns(ac);
  center_columns(bc);
  const Eigen::MatrixXd ua = whitened_view(ac, retain);
  const Eigen::MatrixXd ub = whitened_view(bc, retain);
  const Eigen::MatrixXd cross = ua.transpose() * ub;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cross);
  const auto& sv = svd.singularValues();
  const Eigen::Index k = std::min(ua.cols(), ub.cols());
  double mean = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    mean += std::clamp(sv(i), 0.0, 1.0);
  }
  return mean / static_cast<double>(k);
}

CCAResult layer_curve(const Checkpoint& pretrained, const Checkpoint& finetuned,
                      const Manifest& probe, double retain, bool include_conv) {
  const auto layers = model_layer_names(pretrained.config, include_conv);
  const auto a = collect_activations(pretrained, probe, layers);
  const auto b = collect_activations(finetuned, probe, layers);
  CCAResult res;
  res.retain = retain;
  res.layer_similarity.resize(layers.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ip = 0; ip < static_cast<std::ptrdiff_t>(layers.size()); ++ip) {
    const auto i = static_cast<std::size_t>(ip);
    res.layer_similarity[i] = {layers[i],
                               cca_similarity(a[i].mat, b[i].mat, retain)};
  }
  return res;
}

double relative_reduction(double baseline_wer, double new_wer) {
  if (baseline_wer == 0.0) {
    throw std::invalid_argument("relative_reduction: zero baseline");
  }
  return 100.0 * (baseline_wer - new_wer) / baseline_wer;
}

namespace {

void write_csv(const std::string& path, const std::string& provenance,
               const std::string& header, const std::string& body) {
  std::ostringstream out;
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << header << "\n" << body;
  atomic_write_file(path, out.str());
}

}  // namespace

void write_results_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  std::ostringstream body;
  char buf[64];
  for (const auto& [method, split, value] : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    body << method << "," << split << "," << buf << "\n";
  }
  write_csv(path, provenance, "method,split,wer", body.str());
}

void write_cca_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  std::ostringstream body;
  char buf[64];
  for (const auto& [pair, layer, value] : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    body << pair << "," << layer << "," << buf << "\n";
  }
  write_csv(path, provenance, "checkpoint_pair,layer,similarity", body.str());
}

void write_reductions_csv(
    const std::string& path, const std::string& provenance,
    const std::vector<std::pair<std::string, double>>& rows) {
  std::ostringstream body;
  char buf[64];
  for (const auto& [cmp, value] : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    body << cmp << "," << buf << "\n";
  }
  write_csv(path, provenance, "comparison,percent", body.str());
}

}  // namespace semivox
