// Copyright 2026 The fsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fsed/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fsed/errors.hpp"

namespace fsed {
namespace {

// Moves a uniform random subset of size k to the front of v.
template <typename T>
void partial_shuffle(std::vector<T>& v, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
    std::swap(v[i], v[pick(rng)]);
  }
}

std::vector<double> lattice_point(std::size_t index, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  std::size_t n = index + 1;
  for (std::size_t k = 0; k < dim && n > 0; ++k, n /= 3) {
    const std::size_t digit = n % 3;
    v[k] = digit == 0 ? 0.0 : (digit == 1 ? 1.0 : -1.0);
  }
  if (n > 0) throw UsageError("synth: too many classes for d_in=" + std::to_string(dim));
  return v;
}

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

ClassIndex::ClassIndex(const Dataset& dataset) {
  for (std::size_t s = 0; s < dataset.sentences.size(); ++s) {
    LabelId trigger = kOutside;
    for (LabelId l : dataset.sentences[s].labels) {
      if (l != kOutside) {
        trigger = l;
        break;
      }
    }
    if (trigger != kOutside) by_class_[trigger].push_back(s);
  }
}

std::vector<LabelId> ClassIndex::eligible(std::size_t min_sentences) const {
  std::vector<LabelId> out;
  for (const auto& [label, sentences] : by_class_) {
    if (sentences.size() >= min_sentences) out.push_back(label);
  }
  return out;
}

Episode sample_episode(const Dataset& dataset, const ClassIndex& index, std::size_t n_way,
                       std::size_t k_shot, std::size_t m_query, Rng& rng) {
  if (n_way == 0 || k_shot == 0 || m_query == 0) throw UsageError("N, K and M must be positive");
  auto classes = index.eligible(k_shot + m_query);
  if (classes.size() < n_way) {
    throw SamplingError("need " + std::to_string(n_way) + " event types with at least " +
                        std::to_string(k_shot + m_query) + " sentences each, but the " +
                        split_name(dataset.split) + " set has only " + std::to_string(classes.size()));
  }
  Episode ep;
  ep.n_way = n_way;
  partial_shuffle(classes, n_way, rng);
  ep.class_map.push_back(kOutside);
  ep.class_map.insert(ep.class_map.end(), classes.begin(), classes.begin() + static_cast<long>(n_way));
  for (std::size_t c = 1; c <= n_way; ++c) {
    auto pool = index.by_class().at(ep.class_map[c]);
    partial_shuffle(pool, k_shot + m_query, rng);
    ep.support.insert(ep.support.end(), pool.begin(), pool.begin() + static_cast<long>(k_shot));
    ep.query.insert(ep.query.end(), pool.begin() + static_cast<long>(k_shot),
                    pool.begin() + static_cast<long>(k_shot + m_query));
  }
  return ep;
}

Episode sample_episode(const Dataset& dataset, std::size_t n_way, std::size_t k_shot,
                       std::size_t m_query, Rng& rng) {
  return sample_episode(dataset, ClassIndex(dataset), n_way, k_shot, m_query, rng);
}

std::vector<std::size_t> contrastive_rows(const std::vector<LocalLabel>& labels, std::size_t o_cap, Rng& rng) {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> outside;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 0 ? outside : rows).push_back(i);
  }
  if (outside.size() > o_cap) {
    partial_shuffle(outside, o_cap, rng);
    outside.resize(o_cap);
  }
  rows.insert(rows.end(), outside.begin(), outside.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

EpisodeTensors assemble(const Dataset& dataset, const Episode& episode, std::size_t o_cap, Rng& rng) {
  auto local = [&](LabelId global) -> LocalLabel {
    for (std::size_t c = 1; c < episode.class_map.size(); ++c) {
      if (episode.class_map[c] == global) return static_cast<LocalLabel>(c);
    }
    return 0;
  };
  auto stack = [&](const std::vector<std::size_t>& sentences, Tensor& out, std::vector<LocalLabel>& labels) {
    std::size_t tokens = 0;
    for (std::size_t s : sentences) tokens += dataset.sentences.at(s).length();
    out = Tensor({tokens, dataset.dim});
    labels.clear();
    labels.reserve(tokens);
    double* dst = out.data().data();
    for (std::size_t s : sentences) {
      const auto& rec = dataset.sentences[s];
      dst = std::copy(rec.embeddings.values().begin(), rec.embeddings.values().end(), dst);
      for (LabelId l : rec.labels) labels.push_back(l == kOutside ? 0 : local(l));
    }
  };

  EpisodeTensors t;
  t.n_way = episode.n_way;
  stack(episode.support, t.support, t.support_labels);
  stack(episode.query, t.query, t.query_labels);
  t.support_contrast_rows = contrastive_rows(t.support_labels, o_cap, rng);
  t.query_contrast_rows = contrastive_rows(t.query_labels, o_cap, rng);
  return t;
}

void SynthSpec::validate() const {
  if (class_count == 0 || sentences_per_class == 0 || sentence_length == 0 || d_in == 0) {
    throw UsageError("synth: counts, length and dimension must be positive");
  }
  if (!(cluster_separation >= 0.0) || !(o_noise_scale >= 0.0) || !(trigger_noise_scale >= 0.0)) {
    throw UsageError("synth: separation and noise scales must be non-negative");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) {
    throw UsageError("synth: overlap_fraction must lie in [0, 1]");
  }
}

Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  std::uniform_int_distribution<std::size_t> position(0, spec.sentence_length - 1);
  std::uniform_int_distribution<std::size_t> any_class(0, spec.class_count - 1);

  std::vector<std::string> names{"O"};
  std::vector<std::vector<double>> centers;
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    names.push_back("event_" + std::to_string(spec.first_class + k));
    auto c = lattice_point(spec.first_class + k, spec.d_in);
    for (double& v : c) v *= spec.cluster_separation;
    centers.push_back(std::move(c));
  }

  Dataset ds;
  ds.labels = LabelSpace(std::move(names));
  ds.dim = static_cast<std::uint32_t>(spec.d_in);
  const std::size_t n = spec.sentence_length;
  const std::size_t d = spec.d_in;
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    for (std::size_t s = 0; s < spec.sentences_per_class; ++s) {
      SentenceRecord rec;
      rec.id = ds.sentences.size();
      rec.labels.assign(n, kOutside);
      rec.embeddings = Tensor({n, d});
      const std::size_t trigger = position(rng);
      rec.labels[trigger] = static_cast<LabelId>(k + 1);
      for (std::size_t t = 0; t < n; ++t) {
        auto row = rec.embeddings.row(t);
        if (t == trigger) {
          for (std::size_t j = 0; j < d; ++j) row[j] = centers[k][j] + spec.trigger_noise_scale * gauss(rng);
        } else if (unit(rng) < spec.overlap_fraction) {
          // Ambiguous non-trigger: part-way toward some event center.
          const auto& c = centers[any_class(rng)];
          const double reach = 0.5 + 0.5 * unit(rng);
          for (std::size_t j = 0; j < d; ++j) row[j] = reach * c[j] + spec.trigger_noise_scale * gauss(rng);
        } else {
          for (std::size_t j = 0; j < d; ++j) row[j] = spec.o_noise_scale * gauss(rng);
        }
        for (double& v : row) v = to_float_precision(v);
      }
      ds.sentences.push_back(std::move(rec));
    }
  }
  return ds;
}

}  // namespace fsed
