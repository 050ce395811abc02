// Copyright 2026 The mtltag Authors
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

#include "mtltag/corpus_cache.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mtltag/error.hpp"

namespace mtltag {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'T', 'L', 'T', 'C', 'R', 'P', 'S'};
constexpr std::uint32_t kSourceTag = 1;
constexpr std::uint32_t kVocabTag = 2;
constexpr std::uint32_t kSentenceTag = 3;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }
  const std::string& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("corpus cache: truncated section");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_section(std::ostream& out, std::uint32_t tag, const std::string& payload) {
  Writer head;
  head.u32(tag);
  head.u64(payload.size());
  out.write(head.bytes().data(), static_cast<std::streamsize>(head.bytes().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

std::string source_payload(const ColumnSpec& columns, const SourceFingerprint& source) {
  Writer w;
  w.u64(source.size);
  w.u64(source.hash);
  w.u64(columns.token_column);
  w.u32(static_cast<std::uint32_t>(columns.label_columns.size()));
  for (const auto& [task, col] : columns.label_columns) {
    w.str(task);
    w.u64(col);
  }
  return w.bytes();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

SourceFingerprint fingerprint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  return {content.size(), fnv1a64(content)};
}

void write_corpus_cache(std::ostream& out, const Corpus& corpus, const ColumnSpec& columns,
                        const SourceFingerprint& source) {
  out.write(kMagic.data(), kMagic.size());
  Writer version;
  version.u32(kCorpusCacheVersion);
  out.write(version.bytes().data(), 4);

  write_section(out, kSourceTag, source_payload(columns, source));

  Vocabulary words;
  std::vector<std::string> tasks;
  std::vector<Vocabulary> labels;
  for (const auto& [task, col] : columns.label_columns) {
    tasks.push_back(task);
    labels.emplace_back();
  }
  for (const auto& sentence : corpus.sentences) {
    for (const auto& token : sentence) {
      words.add(token.surface);
      for (std::size_t k = 0; k < tasks.size(); ++k) labels[k].add(token.labels.at(tasks[k]));
    }
  }

  Writer vocab;
  vocab.u32(static_cast<std::uint32_t>(words.size()));
  for (const auto& w : words.entries()) vocab.str(w);
  vocab.u32(static_cast<std::uint32_t>(tasks.size()));
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    vocab.str(tasks[k]);
    vocab.u32(static_cast<std::uint32_t>(labels[k].size()));
    for (const auto& l : labels[k].entries()) vocab.str(l);
  }
  write_section(out, kVocabTag, vocab.bytes());

  Writer sents;
  sents.u64(corpus.sentences.size());
  for (const auto& sentence : corpus.sentences) {
    sents.u32(static_cast<std::uint32_t>(sentence.size()));
    for (const auto& token : sentence) {
      sents.u32(static_cast<std::uint32_t>(*words.find(token.surface)));
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        sents.u32(static_cast<std::uint32_t>(*labels[k].find(token.labels.at(tasks[k]))));
      }
    }
  }
  write_section(out, kSentenceTag, sents.bytes());
}

std::optional<Corpus> read_corpus_cache(std::istream& in, const ColumnSpec& columns,
                                        const SourceFingerprint& source) {
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  if (data.size() < 12 || std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0) {
    throw DataError("corpus cache: bad magic bytes");
  }
  Reader head(std::string_view(data).substr(8, 4));
  if (const auto v = head.u32(); v != kCorpusCacheVersion) {
    throw DataError("corpus cache: unsupported version " + std::to_string(v));
  }

  std::vector<std::string> words;
  std::vector<std::string> tasks;
  std::vector<std::vector<std::string>> labels;
  std::optional<Corpus> corpus;
  bool source_ok = false;

  std::size_t pos = 12;
  while (pos < data.size()) {
    Reader sect_head(std::string_view(data).substr(pos, std::min<std::size_t>(12, data.size() - pos)));
    const std::uint32_t tag = sect_head.u32();
    const std::uint64_t length = sect_head.u64();
    pos += 12;
    if (pos + length > data.size()) throw DataError("corpus cache: truncated section");
    Reader r(std::string_view(data).substr(pos, length));
    pos += length;

    if (tag == kSourceTag) {
      if (r.u64() != source.size || r.u64() != source.hash) return std::nullopt;
      ColumnSpec cached;
      cached.token_column = r.u64();
      const std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        std::string task = r.str();
        cached.label_columns[task] = r.u64();
      }
      if (!(cached == columns)) return std::nullopt;
      source_ok = true;
    } else if (tag == kVocabTag) {
      const std::uint32_t nw = r.u32();
      words.reserve(nw);
      for (std::uint32_t i = 0; i < nw; ++i) words.push_back(r.str());
      const std::uint32_t nt = r.u32();
      for (std::uint32_t k = 0; k < nt; ++k) {
        tasks.push_back(r.str());
        const std::uint32_t nl = r.u32();
        labels.emplace_back();
        for (std::uint32_t i = 0; i < nl; ++i) labels.back().push_back(r.str());
      }
    } else if (tag == kSentenceTag) {
      if (!source_ok) throw DataError("corpus cache: sentences before source section");
      corpus.emplace();
      const std::uint64_t ns = r.u64();
      for (std::uint64_t s = 0; s < ns; ++s) {
        Sentence sentence(r.u32());
        for (auto& token : sentence) {
          const std::uint32_t w = r.u32();
          if (w >= words.size()) throw DataError("corpus cache: word index out of range");
          token.surface = words[w];
          for (std::size_t k = 0; k < tasks.size(); ++k) {
            const std::uint32_t l = r.u32();
            if (l >= labels[k].size()) throw DataError("corpus cache: label index out of range");
            token.labels.emplace(tasks[k], labels[k][l]);
          }
        }
        corpus->sentences.push_back(std::move(sentence));
      }
    }
    // Unknown tags are skipped so later versions can append sections.
  }
  if (!source_ok || !corpus) throw DataError("corpus cache: missing sections");
  return corpus;
}

std::filesystem::path corpus_cache_path(const std::filesystem::path& source,
                                        const ColumnSpec& columns,
                                        const std::filesystem::path& cache_dir) {
  std::string key = std::filesystem::absolute(source).lexically_normal().string();
  key += '|' + std::to_string(columns.token_column);
  for (const auto& [task, col] : columns.label_columns) key += '|' + task + '=' + std::to_string(col);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return cache_dir / (source.filename().string() + "." + hex + ".mtlcache");
}

Corpus load_corpus(const std::filesystem::path& source, const ColumnSpec& columns,
                   const std::optional<std::filesystem::path>& cache_dir) {
  if (!cache_dir) return read_conll_file(source, columns);
  const SourceFingerprint fp = fingerprint_file(source);
  const auto cache = corpus_cache_path(source, columns, *cache_dir);
  if (std::ifstream in{cache, std::ios::binary}) {
    try {
      if (auto cached = read_corpus_cache(in, columns, fp)) return *std::move(cached);
    } catch (const DataError&) {
      // Unreadable cache: rebuild below.
    }
  }
  Corpus corpus = read_conll_file(source, columns);
  std::filesystem::create_directories(*cache_dir);
  std::ofstream out(cache, std::ios::binary | std::ios::trunc);
  if (out) write_corpus_cache(out, corpus, columns, fp);
  return corpus;
}

}  // namespace mtltag
