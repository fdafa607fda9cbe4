#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptrel/corpus.hpp"
#include "promptrel/embeddings.hpp"

namespace promptrel {

// A sentence (or prompt) mapped into one of two vector spaces: dense
// embedding space, or the sparse lexical space used by TF-IDF. The sparse
// map is ordered so every consumer iterates components deterministically.
struct SentenceVec {
  enum class Kind { Dense, Sparse };

  Kind kind = Kind::Dense;
  std::vector<double> dense;
  std::map<std::string, double> sparse;
  std::size_t contributing = 0;  // tokens that produced a component

  static SentenceVec dense_zero(std::size_t dim) {
    SentenceVec v;
    v.dense.assign(dim, 0.0);
    return v;
  }
};

namespace detail {

inline double dot_dense(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_dense(const std::vector<double>& a) {
  return std::sqrt(dot_dense(a, a));
}

// Cosine with the zero-vector convention: either norm 0 gives 0.
inline double cosine_dense(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  double na = norm_dense(a);
  double nb = norm_dense(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_dense(a, b) / (na * nb);
}

inline double dot_sparse(const std::map<std::string, double>& a,
                         const std::map<std::string, double>& b) {
  double s = 0.0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  for (const auto& [word, value] : small) {
    auto it = big.find(word);
    if (it != big.end()) s += value * it->second;
  }
  return s;
}

inline double norm_sparse(const std::map<std::string, double>& a) {
  double s = 0.0;
  for (const auto& [word, value] : a) s += value * value;
  return std::sqrt(s);
}

}  // namespace detail

// Term frequency times IDF, over the union of the IDF vocabulary and the
// sentence's own words; words the IDF corpus never saw take ln(N / 1).
inline SentenceVec vec_tfidf(const Sentence& sentence, const IdfTable& idf) {
  SentenceVec out;
  out.kind = SentenceVec::Kind::Sparse;
  std::map<std::string, std::size_t> counts;
  for (const Token& tok : sentence.tokens) ++counts[tok];
  for (const auto& [word, tf] : counts) {
    out.sparse[word] = static_cast<double>(tf) * idf.value_or_unseen(word);
  }
  out.contributing = sentence.tokens.size();
  return out;
}

// Plain sum of looked-up embeddings; misses are skipped.
inline SentenceVec vec_sum(const Sentence& sentence,
                           const EmbeddingTable& emb) {
  SentenceVec out = SentenceVec::dense_zero(emb.dim());
  for (const Token& tok : sentence.tokens) {
    if (auto hit = emb.lookup(tok)) {
      for (std::size_t i = 0; i < out.dense.size(); ++i) {
        out.dense[i] += (*hit->vec)[i];
      }
      ++out.contributing;
    }
  }
  return out;
}

// Embedding sum with each word vector scaled by its IDF value. The IDF
// lookup uses the raw token; the embedding lookup has its case fallback.
inline SentenceVec vec_idf_emb(const Sentence& sentence,
                               const EmbeddingTable& emb,
                               const IdfTable& idf) {
  SentenceVec out = SentenceVec::dense_zero(emb.dim());
  for (const Token& tok : sentence.tokens) {
    if (auto hit = emb.lookup(tok)) {
      const double scale = idf.value_or_unseen(tok);
      for (std::size_t i = 0; i < out.dense.size(); ++i) {
        out.dense[i] += scale * (*hit->vec)[i];
      }
      ++out.contributing;
    }
  }
  return out;
}

// Embedding sum with each word vector scaled by its learned weight. The
// weight is looked up under the resolved vocabulary entry, so a token that
// matched via the lowercase fallback uses that entry's weight.
inline SentenceVec vec_weighted(const Sentence& sentence,
                                const EmbeddingTable& emb,
                                const WeightTable& weights) {
  SentenceVec out = SentenceVec::dense_zero(emb.dim());
  for (const Token& tok : sentence.tokens) {
    if (auto hit = emb.lookup(tok)) {
      const double scale = weights.at(*hit->word);
      for (std::size_t i = 0; i < out.dense.size(); ++i) {
        out.dense[i] += scale * (*hit->vec)[i];
      }
      ++out.contributing;
    }
  }
  return out;
}

inline double cosine(const SentenceVec& x, const SentenceVec& y) {
  if (x.kind != y.kind) {
    throw std::invalid_argument("cosine: mixed dense and sparse vectors");
  }
  if (x.kind == SentenceVec::Kind::Dense) {
    return detail::cosine_dense(x.dense, y.dense);
  }
  double nx = detail::norm_sparse(x.sparse);
  double ny = detail::norm_sparse(y.sparse);
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return detail::dot_sparse(x.sparse, y.sparse) / (nx * ny);
}

// Selects one of the four vectorization methods together with the tables it
// needs. Construct through the factories so the required tables are present.
enum class MethodKind { TfIdf, EmbeddingSum, IdfEmbedding, Weighted };

struct Method {
  MethodKind kind = MethodKind::TfIdf;
  const IdfTable* idf = nullptr;
  const EmbeddingTable* emb = nullptr;
  const WeightTable* weights = nullptr;

  static Method tfidf(const IdfTable& idf) {
    return Method{MethodKind::TfIdf, &idf, nullptr, nullptr};
  }
  static Method embedding_sum(const EmbeddingTable& emb) {
    return Method{MethodKind::EmbeddingSum, nullptr, &emb, nullptr};
  }
  static Method idf_embedding(const EmbeddingTable& emb, const IdfTable& idf) {
    return Method{MethodKind::IdfEmbedding, &idf, &emb, nullptr};
  }
  static Method weighted(const EmbeddingTable& emb,
                         const WeightTable& weights) {
    return Method{MethodKind::Weighted, nullptr, &emb, &weights};
  }
};

inline const char* method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::TfIdf: return "tfidf";
    case MethodKind::EmbeddingSum: return "sum";
    case MethodKind::IdfEmbedding: return "idf-emb";
    case MethodKind::Weighted: return "weighted";
  }
  return "unknown";
}

inline SentenceVec sentence_vec(const Sentence& sentence,
                                const Method& method) {
  switch (method.kind) {
    case MethodKind::TfIdf:
      return vec_tfidf(sentence, *method.idf);
    case MethodKind::EmbeddingSum:
      return vec_sum(sentence, *method.emb);
    case MethodKind::IdfEmbedding:
      return vec_idf_emb(sentence, *method.emb, *method.idf);
    case MethodKind::Weighted:
      return vec_weighted(sentence, *method.emb, *method.weights);
  }
  throw std::logic_error("unreachable method kind");
}

// Arithmetic mean of the per-sentence vectors; sentences that map to the
// zero vector still count in the denominator.
inline SentenceVec prompt_vec(const std::vector<Sentence>& prompt_sentences,
                              const Method& method) {
  if (prompt_sentences.empty()) {
    throw std::invalid_argument("prompt has no sentences");
  }
  SentenceVec acc = sentence_vec(prompt_sentences[0], method);
  for (std::size_t s = 1; s < prompt_sentences.size(); ++s) {
    SentenceVec v = sentence_vec(prompt_sentences[s], method);
    if (acc.kind == SentenceVec::Kind::Dense) {
      if (v.dense.size() != acc.dense.size()) {
        throw std::invalid_argument("prompt sentences differ in dimension");
      }
      for (std::size_t i = 0; i < acc.dense.size(); ++i) {
        acc.dense[i] += v.dense[i];
      }
    } else {
      for (const auto& [word, value] : v.sparse) {
        acc.sparse[word] += value;
      }
    }
    acc.contributing += v.contributing;
  }
  const double inv = 1.0 / static_cast<double>(prompt_sentences.size());
  if (acc.kind == SentenceVec::Kind::Dense) {
    for (double& c : acc.dense) c *= inv;
  } else {
    for (auto& [word, value] : acc.sparse) value *= inv;
  }
  return acc;
}

}  // namespace promptrel
