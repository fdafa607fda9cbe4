#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "promptrel/corpus.hpp"
#include "promptrel/detail/strings.hpp"

namespace promptrel {

namespace detail {
using StringIndex =
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>;
}

// Frozen pretrained word vectors. Entries keep file order so that loading,
// saving, and reporting are deterministic. Words containing an underscore
// (phrase entries in the pretrained files) are dropped at load time.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return words_.size(); }
  // One parameter per vector component.
  std::size_t parameter_count() const { return words_.size() * dim_; }

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<double>& vector_at(std::size_t i) const {
    return vectors_[i];
  }

  const std::vector<double>* find_exact(std::string_view word) const {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : &vectors_[it->second];
  }

  struct Hit {
    const std::string* word;  // the resolved vocabulary entry
    const std::vector<double>* vec;
  };

  // Exact-case match first, then ASCII-lowercased; absent otherwise.
  std::optional<Hit> lookup(std::string_view token) const {
    if (auto it = index_.find(token); it != index_.end()) {
      return Hit{&words_[it->second], &vectors_[it->second]};
    }
    std::string lowered = detail::ascii_lower(token);
    if (lowered != token) {
      if (auto it = index_.find(lowered); it != index_.end()) {
        return Hit{&words_[it->second], &vectors_[it->second]};
      }
    }
    return std::nullopt;
  }

  // First occurrence wins; returns false when the word is already present.
  bool insert(std::string word, std::vector<double> vec) {
    if (vec.size() != dim_) {
      throw std::invalid_argument("vector size does not match table dim");
    }
    auto [it, inserted] = index_.emplace(std::move(word), words_.size());
    if (!inserted) return false;
    words_.push_back(it->first);
    vectors_.push_back(std::move(vec));
    return true;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<std::vector<double>> vectors_;
  detail::StringIndex index_;
};

// One learned scalar per vocabulary word.
class WeightTable {
 public:
  WeightTable() = default;

  static WeightTable ones_like(const EmbeddingTable& emb) {
    WeightTable w;
    w.words_ = emb.words();
    w.values_.assign(w.words_.size(), 1.0);
    for (std::size_t i = 0; i < w.words_.size(); ++i) {
      w.index_.emplace(w.words_[i], i);
    }
    return w;
  }

  std::size_t size() const { return words_.size(); }
  std::size_t parameter_count() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  double value_at(std::size_t i) const { return values_[i]; }

  std::optional<double> find(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return values_[it->second];
  }

  double at(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) {
      throw std::runtime_error("no weight for word '" + std::string(word) +
                               "'");
    }
    return values_[it->second];
  }

  double* find_mut(std::string_view word) {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : &values_[it->second];
  }

  void insert(std::string word, double value) {
    auto [it, inserted] = index_.emplace(std::move(word), words_.size());
    if (!inserted) {
      throw std::runtime_error("duplicate word '" + it->first + "'");
    }
    words_.push_back(it->first);
    values_.push_back(value);
  }

  bool operator==(const WeightTable& other) const {
    return words_ == other.words_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<double> values_;
  detail::StringIndex index_;
};

// Sentence-level inverse document frequencies: ln(N / (1 + n_w)), where N is
// the corpus sentence count and n_w the number of sentences containing w.
// Words seen in every sentence go slightly negative and stay that way.
class IdfTable {
 public:
  IdfTable() = default;

  std::size_t size() const { return words_.size(); }
  std::size_t n_sentences() const { return n_sentences_; }
  const std::vector<std::string>& words() const { return words_; }
  double value_at(std::size_t i) const { return values_[i]; }

  std::optional<double> find(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return values_[it->second];
  }

  // Unseen words take n_w = 0 under the 1 + n_w smoothing: ln(N / 1).
  double unseen_value() const {
    return std::log(static_cast<double>(n_sentences_));
  }

  double value_or_unseen(std::string_view word) const {
    auto it = index_.find(word);
    return it == index_.end() ? unseen_value() : values_[it->second];
  }

  void set_n_sentences(std::size_t n) {
    if (n < 1) throw std::invalid_argument("sentence count must be >= 1");
    n_sentences_ = n;
  }

  void insert(std::string word, double value) {
    auto [it, inserted] = index_.emplace(std::move(word), words_.size());
    if (!inserted) {
      throw std::runtime_error("duplicate word '" + it->first + "'");
    }
    words_.push_back(it->first);
    values_.push_back(value);
  }

 private:
  std::size_t n_sentences_ = 1;
  std::vector<std::string> words_;
  std::vector<double> values_;
  detail::StringIndex index_;
};

// Counts each word at most once per sentence, then applies the log formula.
// Entries keep first-occurrence order.
inline IdfTable build_idf(const SegmentedCorpus& corpus) {
  if (corpus.sentence_count == 0) {
    throw std::runtime_error("cannot build IDF table from an empty corpus");
  }
  std::vector<std::string> order;
  detail::StringIndex index;
  std::vector<std::size_t> sentence_freq;
  std::vector<std::size_t> last_seen_sentence;
  std::size_t sentence_ordinal = 0;
  for (const auto& doc : corpus.documents) {
    for (const Sentence& sent : doc) {
      ++sentence_ordinal;
      for (const Token& tok : sent.tokens) {
        auto [it, inserted] = index.emplace(tok, order.size());
        if (inserted) {
          order.push_back(tok);
          sentence_freq.push_back(0);
          last_seen_sentence.push_back(0);
        }
        std::size_t w = it->second;
        if (last_seen_sentence[w] != sentence_ordinal) {
          last_seen_sentence[w] = sentence_ordinal;
          ++sentence_freq[w];
        }
      }
    }
  }
  IdfTable table;
  table.set_n_sentences(corpus.sentence_count);
  const double n = static_cast<double>(corpus.sentence_count);
  for (std::size_t w = 0; w < order.size(); ++w) {
    table.insert(std::move(order[w]),
                 std::log(n / (1.0 + static_cast<double>(sentence_freq[w]))));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Embedding file formats
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<std::size_t, std::size_t> parse_embedding_header(
    std::string_view line, const std::filesystem::path& path) {
  std::size_t sp = line.find(' ');
  std::size_t vocab = 0, dim = 0;
  if (sp == std::string_view::npos || !parse_size(line.substr(0, sp), vocab) ||
      !parse_size(line.substr(sp + 1), dim) || dim == 0) {
    throw std::runtime_error(path.string() +
                             ": malformed header, expected 'vocab_size dim'");
  }
  return {vocab, dim};
}

inline bool contains_underscore(std::string_view word) {
  return word.find('_') != std::string_view::npos;
}

}  // namespace detail

// Text format: header `vocab_size dim`, then one `word v1 ... v_dim` row per
// word, space-separated. A non-null `vocabulary` drops every word outside it
// at load time; the set must hold each surface form lookups should resolve,
// lowercased forms included, since dropped words are invisible to lookup.
inline EmbeddingTable load_embeddings_text(
    const std::filesystem::path& path,
    const std::unordered_set<std::string>* vocabulary = nullptr) {
  const std::string data = detail::read_file(path);
  std::size_t header_end = data.find('\n');
  if (header_end == std::string::npos) {
    throw std::runtime_error(path.string() + ": missing header line");
  }
  auto [declared, dim] =
      detail::parse_embedding_header(std::string_view(data).substr(0, header_end), path);

  EmbeddingTable table(dim);
  std::size_t rows = 0;
  std::size_t start = header_end + 1;
  while (start < data.size()) {
    std::size_t nl = data.find('\n', start);
    const bool last = nl == std::string::npos;
    std::string_view line(data.data() + start,
                          (last ? data.size() : nl) - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      ++rows;
      std::size_t sp = line.find(' ');
      if (sp == std::string_view::npos || sp == 0) {
        throw std::runtime_error(path.string() + ": malformed row " +
                                 std::to_string(rows));
      }
      std::string_view word = line.substr(0, sp);
      std::vector<double> vec;
      vec.reserve(dim);
      std::size_t pos = sp + 1;
      while (pos <= line.size()) {
        std::size_t next = line.find(' ', pos);
        std::string_view field =
            line.substr(pos, (next == std::string_view::npos ? line.size() : next) - pos);
        if (!field.empty()) {
          double v;
          if (!detail::parse_double(field, v)) {
            throw std::runtime_error(path.string() +
                                     ": non-numeric component '" +
                                     std::string(field) + "' for word '" +
                                     std::string(word) + "'");
          }
          vec.push_back(v);
        }
        if (next == std::string_view::npos) break;
        pos = next + 1;
      }
      if (vec.size() != dim) {
        throw std::runtime_error(
            path.string() + ": dimension mismatch for word '" +
            std::string(word) + "': expected " + std::to_string(dim) +
            " components, found " + std::to_string(vec.size()));
      }
      if (!detail::contains_underscore(word) &&
          (!vocabulary || vocabulary->count(std::string(word)) != 0)) {
        table.insert(std::string(word), std::move(vec));
      }
    }
    if (last) break;
    start = nl + 1;
  }
  if (rows != declared) {
    throw std::runtime_error(path.string() + ": header declares " +
                             std::to_string(declared) + " words but file has " +
                             std::to_string(rows) + " rows");
  }
  return table;
}

// Binary format: ASCII header `vocab_size<SP>dim<LF>`, then per word the
// word bytes, a single space, and dim little-endian float32 values,
// optionally followed by LF. Floats are widened to double. `vocabulary`
// filters as in load_embeddings_text; dropped records are skipped without
// decoding, which keeps huge pretrained files loadable at small vocabularies.
inline EmbeddingTable load_embeddings_binary(
    const std::filesystem::path& path,
    const std::unordered_set<std::string>* vocabulary = nullptr) {
  const std::string data = detail::read_file(path);
  std::size_t header_end = data.find('\n');
  if (header_end == std::string::npos) {
    throw std::runtime_error(path.string() + ": missing header line");
  }
  auto [declared, dim] = detail::parse_embedding_header(
      std::string_view(data).substr(0, header_end), path);

  EmbeddingTable table(dim);
  std::size_t pos = header_end + 1;
  const std::size_t vector_bytes = dim * 4;
  for (std::size_t rec = 0; rec < declared; ++rec) {
    while (pos < data.size() && data[pos] == '\n') ++pos;
    std::size_t word_end = data.find(' ', pos);
    if (pos >= data.size() || word_end == std::string::npos) {
      throw std::runtime_error(
          path.string() + ": truncated file, header declares " +
          std::to_string(declared) + " words but record " +
          std::to_string(rec + 1) + " is incomplete");
    }
    std::string_view word(data.data() + pos, word_end - pos);
    if (word.empty()) {
      throw std::runtime_error(path.string() + ": empty word in record " +
                               std::to_string(rec + 1));
    }
    pos = word_end + 1;
    if (pos + vector_bytes > data.size()) {
      throw std::runtime_error(
          path.string() + ": truncated file, expected " +
          std::to_string(vector_bytes) + " vector bytes for word '" +
          std::string(word) + "', only " + std::to_string(data.size() - pos) +
          " available");
    }
    if (!detail::contains_underscore(word) &&
        (!vocabulary || vocabulary->count(std::string(word)) != 0)) {
      std::vector<double> vec(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const unsigned char* b =
            reinterpret_cast<const unsigned char*>(data.data() + pos + i * 4);
        std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                          (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) |
                          (static_cast<std::uint32_t>(b[3]) << 24);
        float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) {
          throw std::runtime_error(path.string() +
                                   ": non-finite component for word '" +
                                   std::string(word) + "'");
        }
        vec[i] = static_cast<double>(f);
      }
      table.insert(std::string(word), std::move(vec));
    }
    pos += vector_bytes;
  }
  while (pos < data.size() && data[pos] == '\n') ++pos;
  if (pos != data.size()) {
    throw std::runtime_error(path.string() + ": unexpected trailing bytes");
  }
  return table;
}

// Writes the binary layout without per-record LFs; values narrow back to
// float32 exactly (they were widened from float32 on load).
inline void write_embeddings_binary(const EmbeddingTable& table,
                                    const std::filesystem::path& path) {
  std::string out;
  out += std::to_string(table.vocab_size());
  out += ' ';
  out += std::to_string(table.dim());
  out += '\n';
  for (std::size_t w = 0; w < table.vocab_size(); ++w) {
    out += table.words()[w];
    out += ' ';
    for (double v : table.vector_at(w)) {
      std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      out += static_cast<char>(u & 0xFF);
      out += static_cast<char>((u >> 8) & 0xFF);
      out += static_cast<char>((u >> 16) & 0xFF);
      out += static_cast<char>((u >> 24) & 0xFF);
    }
  }
  detail::write_file(path, out);
}

inline std::string serialize_embeddings_text(const EmbeddingTable& table) {
  std::string out;
  out += std::to_string(table.vocab_size());
  out += ' ';
  out += std::to_string(table.dim());
  out += '\n';
  for (std::size_t w = 0; w < table.vocab_size(); ++w) {
    out += table.words()[w];
    for (double v : table.vector_at(w)) {
      out += ' ';
      out += detail::format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline void save_embeddings_text(const EmbeddingTable& table,
                                 const std::filesystem::path& path) {
  detail::write_file(path, serialize_embeddings_text(table));
}

// ---------------------------------------------------------------------------
// Weight and IDF persistence: `word<TAB>value<LF>` rows with shortest
// round-trip decimals, so save followed by load reproduces tables exactly.
// ---------------------------------------------------------------------------

inline std::string serialize_weights(const WeightTable& weights) {
  std::string out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out += weights.words()[i];
    out += '\t';
    out += detail::format_double(weights.value_at(i));
    out += '\n';
  }
  return out;
}

inline void save_weights(const WeightTable& weights,
                         const std::filesystem::path& path) {
  detail::write_file(path, serialize_weights(weights));
}

inline WeightTable load_weights(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  WeightTable table;
  for (const auto& row : detail::read_tsv(data, path, 2)) {
    double value;
    if (!detail::parse_double(row.fields[1], value)) {
      throw std::runtime_error(path.string() + ":" +
                               std::to_string(row.line_no) +
                               ": unparseable weight '" +
                               std::string(row.fields[1]) + "'");
    }
    std::string word(row.fields[0]);
    if (table.find(word)) {
      throw std::runtime_error(path.string() + ":" +
                               std::to_string(row.line_no) +
                               ": duplicate word '" + word + "'");
    }
    table.insert(std::move(word), value);
  }
  return table;
}

inline void save_idf(const IdfTable& idf, const std::filesystem::path& path) {
  std::string out;
  out += "#N=";
  out += std::to_string(idf.n_sentences());
  out += '\n';
  for (std::size_t i = 0; i < idf.size(); ++i) {
    out += idf.words()[i];
    out += '\t';
    out += detail::format_double(idf.value_at(i));
    out += '\n';
  }
  detail::write_file(path, out);
}

inline IdfTable load_idf(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  std::size_t header_end = data.find('\n');
  std::string_view header =
      std::string_view(data).substr(0, header_end == std::string::npos
                                           ? data.size()
                                           : header_end);
  if (!header.starts_with("#N=")) {
    throw std::runtime_error(path.string() +
                             ": missing '#N=<sentence_count>' header");
  }
  std::size_t n = 0;
  if (!detail::parse_size(header.substr(3), n) || n < 1) {
    throw std::runtime_error(path.string() + ": invalid sentence count '" +
                             std::string(header.substr(3)) + "'");
  }
  IdfTable table;
  table.set_n_sentences(n);
  const std::string body =
      header_end == std::string::npos ? "" : data.substr(header_end + 1);
  for (const auto& row : detail::read_tsv(body, path, 2)) {
    double value;
    if (!detail::parse_double(row.fields[1], value)) {
      throw std::runtime_error(path.string() + ":" +
                               std::to_string(row.line_no + 1) +
                               ": unparseable IDF value '" +
                               std::string(row.fields[1]) + "'");
    }
    std::string word(row.fields[0]);
    if (table.find(word)) {
      throw std::runtime_error(path.string() + ":" +
                               std::to_string(row.line_no + 1) +
                               ": duplicate word '" + word + "'");
    }
    table.insert(std::move(word), value);
  }
  return table;
}

}  // namespace promptrel
