#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "promptrel/corpus.hpp"
#include "promptrel/detail/strings.hpp"
#include "promptrel/embeddings.hpp"
#include "promptrel/rng.hpp"
#include "promptrel/vectorizers.hpp"

namespace promptrel {

struct TrainerConfig {
  double learning_rate = 0.1;
  double neighbor_stddev = 2.5;
  int epochs = 5;
  std::uint64_t seed = 0;
  // The hinge floor is fixed at 0: cost = max(u.z - u.v, 0) on unit vectors.

  void validate() const {
    if (!(learning_rate > 0.0)) {
      throw std::invalid_argument("learning_rate must be > 0");
    }
    if (!(neighbor_stddev > 0.0)) {
      throw std::invalid_argument("neighbor_stddev must be > 0");
    }
    if (epochs < 1) {
      throw std::invalid_argument("epochs must be >= 1");
    }
  }
};

struct TrainReport {
  std::vector<double> epoch_mean_cost;
  std::uint64_t triples_processed = 0;
  std::uint64_t triples_skipped = 0;
};

// One-line JSON record of a training run. config_json, when non-empty, is an
// already serialized object echoing the run's inputs.
inline std::string train_report_record(const TrainReport& report,
                                       const std::string& config_json = "") {
  std::string out = "{\"epoch_mean_cost\":[";
  for (std::size_t i = 0; i < report.epoch_mean_cost.size(); ++i) {
    if (i > 0) out += ',';
    out += detail::format_double(report.epoch_mean_cost[i]);
  }
  out += "],\"triples_processed\":";
  out += std::to_string(report.triples_processed);
  out += ",\"triples_skipped\":";
  out += std::to_string(report.triples_skipped);
  if (!config_json.empty()) {
    out += ",\"config\":";
    out += config_json;
  }
  out += '}';
  return out;
}

// Draws a nearby sentence from the anchor's document: a Normal(0, stddev)
// offset rounded to the nearest integer, rejecting zero and positions
// outside the document. Returns nullptr when the document has a single
// sentence, in which case the caller skips the anchor.
inline const Sentence* sample_positive(const SegmentedCorpus& corpus,
                                       const Sentence& anchor, double stddev,
                                       Rng& rng) {
  const auto& doc = corpus.documents.at(anchor.doc_index);
  if (doc.size() < 2) return nullptr;
  while (true) {
    long offset = std::lround(rng.normal(0.0, stddev));
    if (offset == 0) continue;
    long pos = static_cast<long>(anchor.sent_index) + offset;
    if (pos < 0 || pos >= static_cast<long>(doc.size())) continue;
    return &doc[static_cast<std::size_t>(pos)];
  }
}

namespace detail {

inline std::vector<const Sentence*> flatten(const SegmentedCorpus& corpus) {
  std::vector<const Sentence*> flat;
  flat.reserve(corpus.sentence_count);
  for (const auto& doc : corpus.documents) {
    for (const Sentence& sent : doc) flat.push_back(&sent);
  }
  return flat;
}

inline bool same_sentence(const Sentence& a, const Sentence& b) {
  return a.doc_index == b.doc_index && a.sent_index == b.sent_index;
}

inline const Sentence* sample_negative_flat(
    const std::vector<const Sentence*>& flat, const Sentence& anchor,
    Rng& rng) {
  while (true) {
    std::size_t i = static_cast<std::size_t>(rng.uniform_below(flat.size()));
    if (!same_sentence(*flat[i], anchor)) return flat[i];
  }
}

}  // namespace detail

// Uniform over every sentence in the corpus except the anchor itself; a
// negative from the anchor's own document is allowed.
inline const Sentence& sample_negative(const SegmentedCorpus& corpus,
                                       const Sentence& anchor, Rng& rng) {
  if (corpus.sentence_count < 2) {
    throw std::invalid_argument("negative sampling needs >= 2 sentences");
  }
  auto flat = detail::flatten(corpus);
  return *detail::sample_negative_flat(flat, anchor, rng);
}

namespace detail {

// Tokens of a sentence resolved against the embedding vocabulary; misses
// are dropped.
struct ResolvedSentence {
  std::vector<EmbeddingTable::Hit> hits;
  std::vector<double> sum;   // weighted embedding sum
  double norm = 0.0;

  bool degenerate() const { return norm == 0.0; }
};

inline ResolvedSentence resolve(const Sentence& sentence,
                                const EmbeddingTable& emb,
                                const WeightTable& weights) {
  ResolvedSentence r;
  r.sum.assign(emb.dim(), 0.0);
  for (const Token& tok : sentence.tokens) {
    if (auto hit = emb.lookup(tok)) {
      const double g = weights.at(*hit->word);
      for (std::size_t i = 0; i < r.sum.size(); ++i) {
        r.sum[i] += g * (*hit->vec)[i];
      }
      r.hits.push_back(*hit);
    }
  }
  r.norm = norm_dense(r.sum);
  return r;
}

}  // namespace detail

// Partial derivatives of the triple cost with respect to the per-word
// weights, in first-touch order. Empty when the hinge is inactive.
struct TripleEval {
  double cost = 0.0;
  std::vector<std::pair<std::string, double>> gradient;
};

// Evaluates cost and gradient for one (anchor, nearby, random) triple.
//
// With raw weighted sums U, V, Z and unit vectors u = U/|U| etc., the active
// cost is c = u.z - u.v. Differentiating through the normalization, using
// d(u)/dU = (I - u u^T)/|U|:
//
//   dc/dU = ((z - v) - u (u.(z - v))) / |U|
//   dc/dV = (v (u.v) - u) / |V|
//   dc/dZ = (u - z (u.z)) / |Z|
//
// and dU/dg_w adds the word's embedding once per occurrence in the anchor
// (likewise for V and Z), so a word appearing in several of the three
// sentences accumulates every contribution.
//
// Returns nullopt when any of the three sentences maps to the zero vector
// under the current weights (degenerate triple; the caller skips it).
inline std::optional<TripleEval> evaluate_triple(const Sentence& u,
                                                 const Sentence& v,
                                                 const Sentence& z,
                                                 const EmbeddingTable& emb,
                                                 const WeightTable& weights) {
  detail::ResolvedSentence ru = detail::resolve(u, emb, weights);
  detail::ResolvedSentence rv = detail::resolve(v, emb, weights);
  detail::ResolvedSentence rz = detail::resolve(z, emb, weights);
  if (ru.degenerate() || rv.degenerate() || rz.degenerate()) {
    return std::nullopt;
  }
  const std::size_t dim = emb.dim();

  std::vector<double> uh(dim), vh(dim), zh(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    uh[i] = ru.sum[i] / ru.norm;
    vh[i] = rv.sum[i] / rv.norm;
    zh[i] = rz.sum[i] / rz.norm;
  }
  const double uv = detail::dot_dense(uh, vh);
  const double uz = detail::dot_dense(uh, zh);
  const double margin = uz - uv;

  TripleEval eval;
  if (margin <= 0.0) {
    eval.cost = 0.0;
    return eval;  // hinge inactive: zero gradient everywhere
  }
  eval.cost = margin;

  std::vector<double> du(dim), dv(dim), dz(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    du[i] = ((zh[i] - vh[i]) - uh[i] * margin) / ru.norm;
    dv[i] = (vh[i] * uv - uh[i]) / rv.norm;
    dz[i] = (uh[i] - zh[i] * uz) / rz.norm;
  }

  // Accumulate per-word contributions in first-touch order.
  detail::StringIndex index;
  auto accumulate = [&](const detail::ResolvedSentence& r,
                        const std::vector<double>& d) {
    for (const auto& hit : r.hits) {
      double contribution = detail::dot_dense(d, *hit.vec);
      auto [it, inserted] = index.emplace(*hit.word, eval.gradient.size());
      if (inserted) {
        eval.gradient.emplace_back(*hit.word, contribution);
      } else {
        eval.gradient[it->second].second += contribution;
      }
    }
  };
  accumulate(ru, du);
  accumulate(rv, dv);
  accumulate(rz, dz);
  return eval;
}

// Cost only; nullopt signals a degenerate triple.
inline std::optional<double> triple_cost(const Sentence& u, const Sentence& v,
                                         const Sentence& z,
                                         const EmbeddingTable& emb,
                                         const WeightTable& weights) {
  auto eval = evaluate_triple(u, v, z, emb, weights);
  if (!eval) return std::nullopt;
  return eval->cost;
}

// Gradient only; nullopt signals a degenerate triple. The map is empty when
// the cost is zero.
inline std::optional<std::vector<std::pair<std::string, double>>>
triple_gradient(const Sentence& u, const Sentence& v, const Sentence& z,
                const EmbeddingTable& emb, const WeightTable& weights) {
  auto eval = evaluate_triple(u, v, z, emb, weights);
  if (!eval) return std::nullopt;
  return std::move(eval->gradient);
}

struct TrainResult {
  WeightTable weights;
  TrainReport report;
};

// Learns per-word weights over frozen embeddings. All weights start at 1.
// Each epoch visits every sentence once in a seeded shuffled order; for each
// usable anchor one nearby positive and one uniform negative are drawn, and
// an active hinge applies one plain gradient-descent step to exactly the
// words of the triple. The run is fully deterministic given (corpus,
// embeddings, config).
//
// Skipped and not trained on: anchors in single-sentence documents, anchors
// whose current weighted vector is zero (for example all-OOV sentences), and
// triples whose positive or negative maps to the zero vector.
inline TrainResult train(
    const SegmentedCorpus& corpus, const EmbeddingTable& emb,
    const TrainerConfig& config,
    const std::function<void(int epoch, const WeightTable&)>& on_epoch = {}) {
  config.validate();
  if (corpus.sentence_count == 0) {
    throw std::runtime_error("cannot train on an empty corpus");
  }
  if (emb.vocab_size() == 0) {
    throw std::runtime_error("cannot train with an empty embedding table");
  }

  TrainResult result;
  result.weights = WeightTable::ones_like(emb);
  Rng rng(config.seed);

  const std::vector<const Sentence*> flat = detail::flatten(corpus);
  std::vector<std::size_t> anchor_order(flat.size());
  for (std::size_t i = 0; i < anchor_order.size(); ++i) anchor_order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(anchor_order, rng);
    double cost_sum = 0.0;
    std::uint64_t processed = 0;
    for (std::size_t a : anchor_order) {
      const Sentence& u = *flat[a];
      if (corpus.documents[u.doc_index].size() < 2) {
        ++result.report.triples_skipped;
        continue;
      }
      if (detail::resolve(u, emb, result.weights).degenerate()) {
        ++result.report.triples_skipped;
        continue;
      }
      const Sentence* v = sample_positive(corpus, u, config.neighbor_stddev, rng);
      const Sentence* z = detail::sample_negative_flat(flat, u, rng);
      auto eval = evaluate_triple(u, *v, *z, emb, result.weights);
      if (!eval) {
        ++result.report.triples_skipped;
        continue;
      }
      ++processed;
      cost_sum += eval->cost;
      if (eval->cost > 0.0) {
        for (const auto& [word, partial] : eval->gradient) {
          double* g = result.weights.find_mut(word);
          *g -= config.learning_rate * partial;
        }
      }
    }
    result.report.triples_processed += processed;
    // An epoch whose draws all degenerate records mean cost 0; whether the
    // corpus is trainable at all is judged over the whole run.
    result.report.epoch_mean_cost.push_back(
        processed == 0 ? 0.0 : cost_sum / static_cast<double>(processed));
    if (on_epoch) on_epoch(epoch, result.weights);
  }
  if (result.report.triples_processed == 0) {
    throw std::runtime_error("corpus has no trainable triple");
  }
  return result;
}

}  // namespace promptrel
