#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "promptrel/detail/strings.hpp"

namespace promptrel {

// A token never holds whitespace and is never empty.
using Token = std::string;

struct Sentence {
  std::vector<Token> tokens;
  std::size_t doc_index = 0;
  std::size_t sent_index = 0;
};

struct SegmentedCorpus {
  std::vector<std::vector<Sentence>> documents;
  std::size_t token_count = 0;
  std::size_t sentence_count = 0;
};

struct LabeledSample {
  std::string prompt_id;
  std::string essay_id;
  Sentence sentence;
};

struct LabeledDataset {
  std::vector<std::string> prompt_order;  // prompt ids in file order
  std::unordered_map<std::string, std::vector<Sentence>> prompts;
  std::vector<LabeledSample> samples;
};

namespace detail {

// Punctuation detached from chunk edges as standalone tokens.
inline bool is_detachable_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case ';':
    case ':':
    case '!':
    case '?':
    case '"':
    case '\'':
    case '(':
    case ')':
    case '[':
    case ']':
      return true;
    default:
      return false;
  }
}

inline bool is_blank_line(std::string_view line) {
  for (char c : line) {
    if (!is_ascii_space(c)) return false;
  }
  return true;
}

}  // namespace detail

// Splits on whitespace, then peels leading and trailing punctuation off each
// chunk as separate single-character tokens. Case is preserved; internal
// hyphens and apostrophes stay inside the token ("o'clock", "long-term").
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && detail::is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < n && !detail::is_ascii_space(text[j])) ++j;
    if (j > i) {
      std::string_view chunk = text.substr(i, j - i);
      std::size_t b = 0;
      std::size_t e = chunk.size();
      while (b < e && detail::is_detachable_punct(chunk[b])) {
        out.emplace_back(1, chunk[b]);
        ++b;
      }
      std::size_t core_end = e;
      while (core_end > b && detail::is_detachable_punct(chunk[core_end - 1])) {
        --core_end;
      }
      if (core_end > b) {
        out.emplace_back(chunk.substr(b, core_end - b));
      }
      for (std::size_t k = core_end; k < e; ++k) {
        out.emplace_back(1, chunk[k]);
      }
    }
    i = j;
  }
  return out;
}

// Builds a corpus from raw token lists, assigning contiguous sentence
// indices per document. Empty documents are dropped.
inline SegmentedCorpus make_corpus(
    const std::vector<std::vector<std::vector<Token>>>& docs) {
  SegmentedCorpus corpus;
  for (const auto& doc : docs) {
    if (doc.empty()) continue;
    std::vector<Sentence> sentences;
    sentences.reserve(doc.size());
    const std::size_t doc_index = corpus.documents.size();
    for (std::size_t s = 0; s < doc.size(); ++s) {
      sentences.push_back(Sentence{doc[s], doc_index, s});
      corpus.token_count += doc[s].size();
    }
    corpus.sentence_count += sentences.size();
    corpus.documents.push_back(std::move(sentences));
  }
  return corpus;
}

// Plain corpus format: UTF-8, one sentence per line, blank line between
// documents. Lines are tokenized; empty documents are dropped.
inline SegmentedCorpus load_plain_corpus(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  if (std::size_t bad = detail::find_invalid_utf8(data); bad != detail::kNpos) {
    throw std::runtime_error(path.string() + ": invalid UTF-8 at byte " +
                             std::to_string(bad));
  }
  std::vector<std::vector<std::vector<Token>>> docs;
  std::vector<std::vector<Token>> current;
  std::size_t start = 0;
  while (start <= data.size()) {
    std::size_t nl = data.find('\n', start);
    const bool last = nl == std::string::npos;
    std::string_view line(data.data() + start,
                          (last ? data.size() : nl) - start);
    if (detail::is_blank_line(line)) {
      if (!current.empty()) {
        docs.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(tokenize(line));
    }
    if (last) break;
    start = nl + 1;
  }
  if (!current.empty()) docs.push_back(std::move(current));
  return make_corpus(docs);
}

inline std::string serialize_plain_corpus(const SegmentedCorpus& corpus) {
  std::string out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (d > 0) out += '\n';
    for (const Sentence& sent : corpus.documents[d]) {
      for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
        if (t > 0) out += ' ';
        out += sent.tokens[t];
      }
      out += '\n';
    }
  }
  return out;
}

inline void save_plain_corpus(const SegmentedCorpus& corpus,
                              const std::filesystem::path& path) {
  detail::write_file(path, serialize_plain_corpus(corpus));
}

// Prompt text is segmented at '.', '!' or '?' followed by whitespace.
inline std::vector<std::vector<Token>> split_prompt_text(
    std::string_view text) {
  std::vector<std::vector<Token>> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool boundary = (c == '.' || c == '!' || c == '?') &&
                    i + 1 < text.size() &&
                    detail::is_ascii_space(text[i + 1]);
    if (boundary) {
      auto tokens = tokenize(text.substr(start, i + 1 - start));
      if (!tokens.empty()) sentences.push_back(std::move(tokens));
      start = i + 1;
    }
  }
  auto tokens = tokenize(text.substr(start));
  if (!tokens.empty()) sentences.push_back(std::move(tokens));
  return sentences;
}

namespace detail {

struct TsvRow {
  std::size_t line_no;  // 1-based
  std::vector<std::string_view> fields;
};

// Reads a no-header TSV, enforcing an exact field count per row. Blank
// lines are skipped; TAB and LF are forbidden inside fields by the format.
inline std::vector<TsvRow> read_tsv(const std::string& data,
                                    const std::filesystem::path& path,
                                    std::size_t expected_fields) {
  if (std::size_t bad = find_invalid_utf8(data); bad != kNpos) {
    throw std::runtime_error(path.string() + ": invalid UTF-8 at byte " +
                             std::to_string(bad));
  }
  std::vector<TsvRow> rows;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= data.size()) {
    std::size_t nl = data.find('\n', start);
    const bool last = nl == std::string::npos;
    std::string_view line(data.data() + start,
                          (last ? data.size() : nl) - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      auto fields = split_tabs(line);
      if (fields.size() != expected_fields) {
        throw std::runtime_error(
            path.string() + ":" + std::to_string(line_no) + ": expected " +
            std::to_string(expected_fields) + " tab-separated fields, found " +
            std::to_string(fields.size()));
      }
      rows.push_back(TsvRow{line_no, std::move(fields)});
    }
    if (last) break;
    start = nl + 1;
  }
  return rows;
}

}  // namespace detail

// Prompts file: `prompt_id<TAB>prompt_text`, one prompt per row.
inline LabeledDataset load_prompts(const std::filesystem::path& prompts_path) {
  LabeledDataset dataset;
  const std::string data = detail::read_file(prompts_path);
  for (const auto& row : detail::read_tsv(data, prompts_path, 2)) {
    std::string prompt_id(row.fields[0]);
    if (prompt_id.empty()) {
      throw std::runtime_error(prompts_path.string() + ":" +
                               std::to_string(row.line_no) +
                               ": empty prompt_id");
    }
    if (dataset.prompts.count(prompt_id) > 0) {
      throw std::runtime_error(prompts_path.string() + ":" +
                               std::to_string(row.line_no) +
                               ": duplicate prompt_id '" + prompt_id + "'");
    }
    auto token_lists = split_prompt_text(row.fields[1]);
    if (token_lists.empty()) {
      throw std::runtime_error(prompts_path.string() + ":" +
                               std::to_string(row.line_no) + ": prompt '" +
                               prompt_id + "' has no sentences");
    }
    std::vector<Sentence> sentences;
    const std::size_t prompt_ordinal = dataset.prompt_order.size();
    for (std::size_t s = 0; s < token_lists.size(); ++s) {
      sentences.push_back(
          Sentence{std::move(token_lists[s]), prompt_ordinal, s});
    }
    dataset.prompt_order.push_back(prompt_id);
    dataset.prompts.emplace(std::move(prompt_id), std::move(sentences));
  }
  return dataset;
}

// Sentences file: `prompt_id<TAB>essay_id<TAB>sentence_text`. Every
// prompt_id must exist in the prompts file.
inline LabeledDataset load_labeled_dataset(
    const std::filesystem::path& prompts_path,
    const std::filesystem::path& sentences_path) {
  LabeledDataset dataset = load_prompts(prompts_path);
  const std::string data = detail::read_file(sentences_path);
  for (const auto& row : detail::read_tsv(data, sentences_path, 3)) {
    std::string prompt_id(row.fields[0]);
    if (dataset.prompts.count(prompt_id) == 0) {
      throw std::runtime_error(sentences_path.string() + ":" +
                               std::to_string(row.line_no) +
                               ": unknown prompt_id '" + prompt_id + "'");
    }
    Sentence sentence{tokenize(row.fields[2]), dataset.samples.size(), 0};
    dataset.samples.push_back(LabeledSample{
        std::move(prompt_id), std::string(row.fields[1]), std::move(sentence)});
  }
  return dataset;
}

}  // namespace promptrel
