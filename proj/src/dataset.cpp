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

#include "fsed/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_set>

#include "fsed/binary_io.hpp"
#include "fsed/errors.hpp"

namespace fsed {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

using Kind = DataError::Kind;

}  // namespace

namespace io {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(Kind::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(Kind::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(Kind::kIo, "write failed: " + path);
}

}  // namespace io

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty() || names_[0] != "O") {
    throw DataError(Kind::kBadLabelSpace, "label space must start with \"O\"");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw DataError(Kind::kBadLabelSpace, "duplicate label name \"" + n + "\"");
  }
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
    case Split::kUnspecified: break;
  }
  return "unspecified";
}

void Dataset::validate() const {
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& rec = sentences[s];
    const std::string where = "sentence " + std::to_string(rec.id);
    if (rec.labels.empty()) throw DataError(Kind::kInvalid, where + " is empty");
    if (rec.embeddings.rank() != 2 || rec.embeddings.rows() != rec.labels.size() ||
        rec.embeddings.cols() != dim) {
      throw DataError(Kind::kInvalid, where + ": embedding shape " + shape_string(rec.embeddings.shape()) +
                                          " does not match n=" + std::to_string(rec.labels.size()) +
                                          " d=" + std::to_string(dim));
    }
    for (LabelId l : rec.labels) {
      if (!labels.contains(l)) {
        throw DataError(Kind::kLabelOutOfRange, where + ": label id " + std::to_string(l) + " out of range");
      }
    }
    if (!rec.embeddings.all_finite()) throw DataError(Kind::kNonFinite, where + ": non-finite embedding");
  }
}

std::vector<LabelId> Dataset::present_event_labels() const {
  std::set<LabelId> seen;
  for (const auto& rec : sentences) {
    for (LabelId l : rec.labels) {
      if (l != kOutside) seen.insert(l);
    }
  }
  return {seen.begin(), seen.end()};
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats st;
  st.class_count = dataset.present_event_labels().size();
  std::size_t tokens = 0;
  for (const auto& rec : dataset.sentences) {
    tokens += rec.length();
    for (LabelId l : rec.labels) st.trigger_count += l != kOutside;
  }
  if (!dataset.sentences.empty()) {
    st.avg_sentence_length = static_cast<double>(tokens) / static_cast<double>(dataset.sentences.size());
  }
  return st;
}

std::string format_stats(const DatasetStats& stats) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "classes=%zu triggers=%zu avg_len=%.1f", stats.class_count,
                stats.trigger_count, stats.avg_sentence_length);
  return buf;
}

std::vector<std::uint8_t> encode_emb1(const Dataset& dataset) {
  dataset.validate();
  io::Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(dataset.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.labels.size()));
  for (const auto& name : dataset.labels.names()) {
    if (name.size() > 0xFFFF) throw DataError(Kind::kInvalid, "label name longer than 65535 bytes");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name);
  }
  w.put<std::uint64_t>(dataset.sentences.size());
  for (const auto& rec : dataset.sentences) {
    w.put<std::uint64_t>(rec.id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.length()));
    for (LabelId l : rec.labels) w.put<std::uint32_t>(l);
    for (double v : rec.embeddings.values()) w.put<float>(static_cast<float>(v));
  }
  return std::move(w.bytes());
}

Dataset decode_emb1(const std::vector<std::uint8_t>& bytes, Split split) {
  io::Reader r(bytes);
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != std::string(kMagic, 4)) {
    throw DataError(Kind::kBadMagic, "bad magic, expected \"EMB1\"", 0);
  }
  r.get_bytes(4, "magic");
  const std::uint64_t version_at = r.offset();
  if (const auto version = r.get<std::uint32_t>("version"); version != kVersion) {
    throw DataError(Kind::kBadVersion, "unsupported EMB1 version " + std::to_string(version), version_at);
  }
  Dataset ds;
  ds.split = split;
  ds.dim = r.get<std::uint32_t>("dimension");
  const auto label_count = r.get<std::uint32_t>("label count");
  std::vector<std::string> names;
  names.reserve(std::min<std::size_t>(label_count, r.remaining() / 2));
  for (std::uint32_t i = 0; i < label_count; ++i) {
    const auto len = r.get<std::uint16_t>("label name length");
    names.push_back(r.get_bytes(len, "label name"));
  }
  const std::uint64_t labels_at = r.offset();
  try {
    ds.labels = LabelSpace(std::move(names));
  } catch (const DataError& e) {
    throw DataError(Kind::kBadLabelSpace, e.what(), labels_at);
  }

  const auto count = r.get<std::uint64_t>("sentence count");
  for (std::uint64_t s = 0; s < count; ++s) {
    SentenceRecord rec;
    rec.id = r.get<std::uint64_t>("sentence id");
    const std::uint64_t n_at = r.offset();
    const auto n = r.get<std::uint32_t>("token count");
    if (n == 0) throw DataError(Kind::kInvalid, "sentence with zero tokens", n_at);
    rec.labels.resize(n);
    for (auto& l : rec.labels) {
      const std::uint64_t at = r.offset();
      l = r.get<std::uint32_t>("label id");
      if (!ds.labels.contains(l)) {
        throw DataError(Kind::kLabelOutOfRange, "label id " + std::to_string(l) + " out of range", at);
      }
    }
    const std::size_t values = static_cast<std::size_t>(n) * ds.dim;
    if (r.remaining() / sizeof(float) < values) {
      throw DataError(Kind::kTruncated, "truncated record: embedding rows of sentence " + std::to_string(rec.id),
                      r.offset());
    }
    std::vector<double> data(values);
    for (auto& v : data) {
      const std::uint64_t at = r.offset();
      const float f = r.get<float>("embedding");
      if (!std::isfinite(f)) throw DataError(Kind::kNonFinite, "non-finite embedding value", at);
      v = static_cast<double>(f);
    }
    rec.embeddings = Tensor::matrix(n, ds.dim, std::move(data));
    ds.sentences.push_back(std::move(rec));
  }
  if (!r.at_end()) throw DataError(Kind::kInvalid, "trailing bytes after last sentence", r.offset());
  ds.validate();
  return ds;
}

Dataset load_emb1(const std::filesystem::path& path, Split split) {
  try {
    return decode_emb1(io::read_file(path.string()), split);
  } catch (const DataError& e) {
    throw DataError(e, path.string() + ": ");
  }
}

void write_emb1(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file(path.string(), encode_emb1(dataset));
}

void check_disjoint_labels(const std::vector<const Dataset*>& splits) {
  for (std::size_t a = 0; a < splits.size(); ++a) {
    std::set<std::string> names;
    for (LabelId l : splits[a]->present_event_labels()) names.insert(splits[a]->labels.name(l));
    for (std::size_t b = a + 1; b < splits.size(); ++b) {
      for (LabelId l : splits[b]->present_event_labels()) {
        const auto& name = splits[b]->labels.name(l);
        if (names.contains(name)) {
          throw DataError(Kind::kInvalid, "event type \"" + name + "\" appears in both the " +
                                              split_name(splits[a]->split) + " and " +
                                              split_name(splits[b]->split) + " splits");
        }
      }
    }
  }
}

}  // namespace fsed
