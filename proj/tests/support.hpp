#pragma once

// Shared fixtures for the unit and acceptance suites. Header is framework
// free so both can include it.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "promptrel/promptrel.hpp"

namespace testsupport {

namespace pr = promptrel;

// Self-cleaning directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("promptrel-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the built CLI with the given argument string, capturing stdout,
// stderr and the exit status.
inline CliResult run_cli(const std::string& args,
                         const std::filesystem::path& scratch) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path errfile =
      scratch / ("cli-stderr-" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string(PROMPTREL_CLI_PATH) + " " + args + " 2>" +
                    errfile.string();
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
    result.out.append(buf, n);
  }
  int rc = pclose(pipe);
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.err = pr::detail::read_file(errfile);
  return result;
}

inline pr::Sentence make_sentence(std::vector<std::string> tokens,
                                  std::size_t doc = 0, std::size_t sent = 0) {
  pr::Sentence s;
  s.tokens = std::move(tokens);
  s.doc_index = doc;
  s.sent_index = sent;
  return s;
}

// Random unit vectors, one per word.
inline pr::EmbeddingTable random_unit_embeddings(
    const std::vector<std::string>& words, std::size_t dim,
    std::uint64_t seed) {
  pr::EmbeddingTable table(dim);
  pr::Rng rng(seed);
  for (const std::string& word : words) {
    std::vector<double> vec(dim);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& x : vec) {
        x = rng.normal(0.0, 1.0);
        norm2 += x * x;
      }
    } while (norm2 == 0.0);
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : vec) x *= inv;
    table.insert(word, std::move(vec));
  }
  return table;
}

// Independent TF-IDF recount: scans the corpus from scratch per call, with
// the same log formula the library documents.
inline std::map<std::string, double> naive_tfidf(
    const pr::Sentence& sentence, const pr::SegmentedCorpus& corpus) {
  std::size_t n_sentences = 0;
  for (const auto& doc : corpus.documents) n_sentences += doc.size();
  std::map<std::string, double> out;
  std::map<std::string, std::size_t> tf;
  for (const auto& tok : sentence.tokens) tf[tok]++;
  for (const auto& [word, count] : tf) {
    std::size_t n_w = 0;
    for (const auto& doc : corpus.documents) {
      for (const auto& sent : doc) {
        for (const auto& tok : sent.tokens) {
          if (tok == word) {
            ++n_w;
            break;
          }
        }
      }
    }
    out[word] = static_cast<double>(count) *
                std::log(static_cast<double>(n_sentences) /
                         (1.0 + static_cast<double>(n_w)));
  }
  return out;
}

// Two disjoint 30-word topic vocabularies plus 10 shared fillers, documents
// drawn from one topic each with filler noise, and a held-out labeled set
// over one prompt per topic.
struct TwoTopicFixture {
  std::vector<std::string> topic_a, topic_b, fillers;
  pr::SegmentedCorpus corpus;
  pr::EmbeddingTable emb;
  pr::LabeledDataset heldout;
};

struct TwoTopicParams {
  std::size_t docs = 200;
  std::size_t sents_per_doc = 10;
  std::size_t tokens_per_sent = 8;
  double filler_p = 0.5;
  std::size_t dim = 25;
  std::size_t heldout_sentences = 200;
  std::size_t heldout_tokens = 5;
  double heldout_filler_p = 0.6;
  std::uint64_t seed = 2024;
};

inline TwoTopicFixture make_two_topic(const TwoTopicParams& p = {}) {
  TwoTopicFixture fx;
  for (int i = 0; i < 30; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "alpha%02d", i);
    fx.topic_a.push_back(buf);
    std::snprintf(buf, sizeof buf, "beta%02d", i);
    fx.topic_b.push_back(buf);
  }
  for (int i = 0; i < 10; ++i) {
    fx.fillers.push_back("fill" + std::to_string(i));
  }
  std::vector<std::string> vocab = fx.topic_a;
  vocab.insert(vocab.end(), fx.topic_b.begin(), fx.topic_b.end());
  vocab.insert(vocab.end(), fx.fillers.begin(), fx.fillers.end());
  fx.emb = random_unit_embeddings(vocab, p.dim, p.seed);

  pr::Rng rng(p.seed + 1);
  auto draw_token = [&](const std::vector<std::string>& topic,
                        double filler_p) -> const std::string& {
    if (rng.uniform_unit() < filler_p) {
      return fx.fillers[static_cast<std::size_t>(
          rng.uniform_below(fx.fillers.size()))];
    }
    return topic[static_cast<std::size_t>(rng.uniform_below(topic.size()))];
  };
  auto draw_sentence = [&](const std::vector<std::string>& topic,
                           std::size_t len, double filler_p) {
    std::vector<pr::Token> tokens;
    tokens.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      tokens.push_back(draw_token(topic, filler_p));
    }
    return tokens;
  };

  std::vector<std::vector<std::vector<pr::Token>>> docs;
  for (std::size_t d = 0; d < p.docs; ++d) {
    const auto& topic = (d % 2 == 0) ? fx.topic_a : fx.topic_b;
    std::vector<std::vector<pr::Token>> doc;
    for (std::size_t s = 0; s < p.sents_per_doc; ++s) {
      doc.push_back(draw_sentence(topic, p.tokens_per_sent, p.filler_p));
    }
    docs.push_back(std::move(doc));
  }
  fx.corpus = pr::make_corpus(docs);

  // Held-out prompts are pure topic text; held-out sentences carry filler
  // noise like the training data.
  fx.heldout.prompt_order = {"topic-a", "topic-b"};
  for (int which = 0; which < 2; ++which) {
    const auto& topic = (which == 0) ? fx.topic_a : fx.topic_b;
    std::vector<pr::Sentence> prompt;
    for (std::size_t s = 0; s < 3; ++s) {
      prompt.push_back(make_sentence(draw_sentence(topic, 6, 0.0), 0, s));
    }
    fx.heldout.prompts.emplace(fx.heldout.prompt_order[which],
                               std::move(prompt));
  }
  for (std::size_t i = 0; i < p.heldout_sentences; ++i) {
    int which = static_cast<int>(i % 2);
    const auto& topic = (which == 0) ? fx.topic_a : fx.topic_b;
    pr::LabeledSample sample;
    sample.prompt_id = fx.heldout.prompt_order[static_cast<std::size_t>(which)];
    sample.essay_id = "e" + std::to_string(i);
    sample.sentence = make_sentence(
        draw_sentence(topic, p.heldout_tokens, p.heldout_filler_p), i, 0);
    fx.heldout.samples.push_back(std::move(sample));
  }
  return fx;
}

// TSV fixtures for CLI runs.
inline std::string join_tokens(const std::vector<pr::Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline void write_prompts_tsv(const pr::LabeledDataset& data,
                              const std::filesystem::path& path) {
  std::string out;
  for (const std::string& id : data.prompt_order) {
    out += id;
    out += '\t';
    const auto& sentences = data.prompts.at(id);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      if (s > 0) out += ' ';
      out += join_tokens(sentences[s].tokens);
      out += '.';
    }
    out += '\n';
  }
  pr::detail::write_file(path, out);
}

inline void write_sentences_tsv(const pr::LabeledDataset& data,
                                const std::filesystem::path& path) {
  std::string out;
  for (const auto& sample : data.samples) {
    out += sample.prompt_id;
    out += '\t';
    out += sample.essay_id;
    out += '\t';
    out += join_tokens(sample.sentence.tokens);
    out += '\n';
  }
  pr::detail::write_file(path, out);
}

}  // namespace testsupport
