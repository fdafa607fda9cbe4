#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptrel/corpus.hpp"
#include "promptrel/detail/strings.hpp"
#include "promptrel/embeddings.hpp"
#include "promptrel/rng.hpp"
#include "promptrel/vectorizers.hpp"

namespace promptrel {

// One labeled sentence scored against every prompt. scores lines up with
// the matrix's prompt_ids.
struct ScoreRow {
  std::string true_prompt_id;
  std::string essay_id;
  std::vector<double> scores;
};

struct ScoreMatrix {
  std::vector<std::string> prompt_ids;
  std::vector<ScoreRow> rows;
};

// Scores every labeled sentence against every prompt vector with the given
// method. Column order follows the dataset's prompt order; row order follows
// the sample order.
inline ScoreMatrix score_all(const LabeledDataset& data, const Method& method) {
  ScoreMatrix m;
  m.prompt_ids = data.prompt_order;
  std::vector<SentenceVec> prompt_vecs;
  prompt_vecs.reserve(m.prompt_ids.size());
  for (const std::string& id : m.prompt_ids) {
    prompt_vecs.push_back(prompt_vec(data.prompts.at(id), method));
  }
  m.rows.reserve(data.samples.size());
  for (const LabeledSample& sample : data.samples) {
    ScoreRow row;
    row.true_prompt_id = sample.prompt_id;
    row.essay_id = sample.essay_id;
    SentenceVec sv = sentence_vec(sample.sentence, method);
    row.scores.reserve(prompt_vecs.size());
    for (const SentenceVec& pv : prompt_vecs) {
      row.scores.push_back(cosine(sv, pv));
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

// Uniform scores in [0, 1), drawn row by row then column by column, so a
// fixed seed gives a fixed matrix.
inline ScoreMatrix score_random(const LabeledDataset& data, std::uint64_t seed) {
  ScoreMatrix m;
  m.prompt_ids = data.prompt_order;
  Rng rng(seed);
  m.rows.reserve(data.samples.size());
  for (const LabeledSample& sample : data.samples) {
    ScoreRow row;
    row.true_prompt_id = sample.prompt_id;
    row.essay_id = sample.essay_id;
    row.scores.reserve(m.prompt_ids.size());
    for (std::size_t c = 0; c < m.prompt_ids.size(); ++c) {
      row.scores.push_back(rng.uniform_unit());
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

// Every row scores 1 for the prompt with the most labeled sentences and 0
// elsewhere. A tie on the count goes to the lexicographically smallest
// prompt id.
inline ScoreMatrix score_majority(const LabeledDataset& data) {
  if (data.prompt_order.empty()) {
    throw std::invalid_argument("majority baseline needs at least one prompt");
  }
  detail::StringIndex counts_index;
  std::vector<std::size_t> counts(data.prompt_order.size(), 0);
  for (std::size_t i = 0; i < data.prompt_order.size(); ++i) {
    counts_index.emplace(data.prompt_order[i], i);
  }
  for (const LabeledSample& sample : data.samples) {
    counts[counts_index.at(sample.prompt_id)]++;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best] ||
        (counts[i] == counts[best] &&
         data.prompt_order[i] < data.prompt_order[best])) {
      best = i;
    }
  }
  ScoreMatrix m;
  m.prompt_ids = data.prompt_order;
  m.rows.reserve(data.samples.size());
  for (const LabeledSample& sample : data.samples) {
    ScoreRow row;
    row.true_prompt_id = sample.prompt_id;
    row.essay_id = sample.essay_id;
    row.scores.assign(m.prompt_ids.size(), 0.0);
    row.scores[best] = 1.0;
    m.rows.push_back(std::move(row));
  }
  return m;
}

// Blends two matrices over the same rows and prompts. Each row of each
// input is min-max normalized to [0, 1] first (a constant row maps to 0.5
// everywhere), then combined as alpha * a + (1 - alpha) * b.
inline ScoreMatrix score_combination(const ScoreMatrix& a, const ScoreMatrix& b,
                                     double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must be in [0, 1]");
  }
  if (a.prompt_ids != b.prompt_ids || a.rows.size() != b.rows.size()) {
    throw std::invalid_argument("combination inputs have different shapes");
  }
  auto normalized = [](const std::vector<double>& scores) {
    double lo = *std::min_element(scores.begin(), scores.end());
    double hi = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    if (hi == lo) {
      std::fill(out.begin(), out.end(), 0.5);
      return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out[i] = (scores[i] - lo) / (hi - lo);
    }
    return out;
  };
  ScoreMatrix m;
  m.prompt_ids = a.prompt_ids;
  m.rows.reserve(a.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const ScoreRow& ra = a.rows[r];
    const ScoreRow& rb = b.rows[r];
    if (ra.true_prompt_id != rb.true_prompt_id ||
        ra.essay_id != rb.essay_id ||
        ra.scores.size() != m.prompt_ids.size() ||
        rb.scores.size() != m.prompt_ids.size()) {
      throw std::invalid_argument("combination inputs have mismatched rows");
    }
    std::vector<double> na = normalized(ra.scores);
    std::vector<double> nb = normalized(rb.scores);
    ScoreRow row;
    row.true_prompt_id = ra.true_prompt_id;
    row.essay_id = ra.essay_id;
    row.scores.resize(m.prompt_ids.size());
    for (std::size_t c = 0; c < row.scores.size(); ++c) {
      row.scores[c] = alpha * na[c] + (1.0 - alpha) * nb[c];
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

struct EvalReport {
  std::string method;
  double accuracy = 0.0;
  double mrr = 0.0;
  std::size_t n_sentences = 0;
  // Pairs (prompt_id, accuracy over that prompt's sentences), in the
  // matrix's prompt order.
  std::vector<std::pair<std::string, double>> per_prompt_accuracy;
};

// Accuracy and mean reciprocal rank over a score matrix. A row counts as
// correct only when the true prompt's score is the unique maximum. The rank
// of the true prompt averages over ties: with c scores strictly greater and
// k scores equal to it (the true one included), rank = c + (k + 1) / 2, so
// MRR never drops below accuracy.
inline EvalReport metrics(const ScoreMatrix& m, const std::string& method) {
  if (m.rows.empty()) {
    throw std::invalid_argument("metrics need at least one scored row");
  }
  detail::StringIndex column;
  for (std::size_t i = 0; i < m.prompt_ids.size(); ++i) {
    column.emplace(m.prompt_ids[i], i);
  }
  EvalReport report;
  report.method = method;
  report.n_sentences = m.rows.size();
  std::vector<std::size_t> per_correct(m.prompt_ids.size(), 0);
  std::vector<std::size_t> per_total(m.prompt_ids.size(), 0);
  double rr_sum = 0.0;
  std::size_t correct = 0;
  for (const ScoreRow& row : m.rows) {
    auto it = column.find(row.true_prompt_id);
    if (it == column.end()) {
      throw std::invalid_argument("row labeled with prompt '" +
                                  row.true_prompt_id +
                                  "' absent from the score matrix");
    }
    if (row.scores.size() != m.prompt_ids.size()) {
      throw std::invalid_argument("score row width differs from prompt count");
    }
    const double truth = row.scores[it->second];
    std::size_t greater = 0, tied = 0;
    for (double s : row.scores) {
      if (s > truth) ++greater;
      else if (s == truth) ++tied;
    }
    double rank = static_cast<double>(greater) +
                  (static_cast<double>(tied) + 1.0) / 2.0;
    rr_sum += 1.0 / rank;
    per_total[it->second]++;
    if (greater == 0 && tied == 1) {
      ++correct;
      per_correct[it->second]++;
    }
  }
  report.accuracy = static_cast<double>(correct) /
                    static_cast<double>(m.rows.size());
  report.mrr = rr_sum / static_cast<double>(m.rows.size());
  for (std::size_t i = 0; i < m.prompt_ids.size(); ++i) {
    if (per_total[i] == 0) continue;
    report.per_prompt_accuracy.emplace_back(
        m.prompt_ids[i], static_cast<double>(per_correct[i]) /
                             static_cast<double>(per_total[i]));
  }
  return report;
}

// Serializes a matrix as TSV: a header row of true_prompt_id, essay_id and
// the prompt ids, then one row per sentence with shortest round-trip
// score formatting.
inline std::string serialize_score_matrix(const ScoreMatrix& m) {
  std::string out = "true_prompt_id\tessay_id";
  for (const std::string& id : m.prompt_ids) {
    out += '\t';
    out += id;
  }
  out += '\n';
  for (const ScoreRow& row : m.rows) {
    out += row.true_prompt_id;
    out += '\t';
    out += row.essay_id;
    for (double s : row.scores) {
      out += '\t';
      out += detail::format_double(s);
    }
    out += '\n';
  }
  return out;
}

inline void save_score_matrix(const ScoreMatrix& m, const std::string& path) {
  detail::write_file(path, serialize_score_matrix(m));
}

namespace detail {

inline std::string format_fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

}  // namespace detail

// One-line JSON evaluation record. config_json, when non-empty, is an
// already serialized object echoing the run's inputs.
inline std::string eval_report_record(const EvalReport& report,
                                      const std::string& config_json = "") {
  std::string out = "{\"method\":\"";
  out += detail::json_escape(report.method);
  out += "\",\"accuracy\":";
  out += detail::format_fixed4(report.accuracy);
  out += ",\"mrr\":";
  out += detail::format_fixed4(report.mrr);
  out += ",\"n_sentences\":";
  out += std::to_string(report.n_sentences);
  out += ",\"per_prompt_accuracy\":{";
  for (std::size_t i = 0; i < report.per_prompt_accuracy.size(); ++i) {
    if (i > 0) out += ',';
    out += '"';
    out += detail::json_escape(report.per_prompt_accuracy[i].first);
    out += "\":";
    out += detail::format_fixed4(report.per_prompt_accuracy[i].second);
  }
  out += '}';
  if (!config_json.empty()) {
    out += ",\"config\":";
    out += config_json;
  }
  out += '}';
  return out;
}

struct WordScore {
  std::string word;
  double score = 0.0;   // cosine of the weighted word vector with the prompt
  double weight = 0.0;  // the word's learned weight
};

// The k vocabulary words whose weighted embeddings point most along the
// prompt's weighted vector. Sorted by score descending, ties by word
// ascending; k is clamped to the vocabulary size.
inline std::vector<WordScore> top_words_for_prompt(
    const std::vector<Sentence>& prompt_sentences, const EmbeddingTable& emb,
    const WeightTable& weights, std::size_t k) {
  Method method = Method::weighted(emb, weights);
  SentenceVec pv = prompt_vec(prompt_sentences, method);
  std::vector<WordScore> all;
  all.reserve(emb.vocab_size());
  for (std::size_t i = 0; i < emb.vocab_size(); ++i) {
    const std::string& word = emb.words()[i];
    const double g = weights.at(word);
    std::vector<double> scaled(emb.dim());
    for (std::size_t d = 0; d < scaled.size(); ++d) {
      scaled[d] = g * emb.vector_at(i)[d];
    }
    all.push_back({word, detail::cosine_dense(scaled, pv.dense), g});
  }
  std::sort(all.begin(), all.end(), [](const WordScore& a, const WordScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.word < b.word;
  });
  if (k < all.size()) all.resize(k);
  return all;
}

struct WeightExtremes {
  std::vector<std::pair<std::string, double>> bottom;  // ascending weight
  std::vector<std::pair<std::string, double>> top;     // descending weight
};

// The k lightest and k heaviest words. Ties break by word ascending; k is
// clamped to the vocabulary size.
inline WeightExtremes inspect_weights(const WeightTable& weights,
                                      std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  all.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    all.emplace_back(weights.words()[i], weights.value_at(i));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  if (k > all.size()) k = all.size();
  WeightExtremes out;
  out.bottom.assign(all.begin(), all.begin() + static_cast<long>(k));
  out.top.assign(all.rbegin(), all.rbegin() + static_cast<long>(k));
  return out;
}

}  // namespace promptrel
