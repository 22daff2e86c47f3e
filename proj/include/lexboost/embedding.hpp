#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "lexboost/scorers.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class EmbeddingSource { Ingested, TfidfBuiltin };

/// One row per document, aligned to corpus ordinals. No row is all-zero.
template <typename Scalar>
struct BasicEmbeddingMatrix {
  RowMatrix<Scalar> vectors;
  EmbeddingSource source = EmbeddingSource::Ingested;

  Eigen::Index rows() const noexcept { return vectors.rows(); }
  Eigen::Index dim() const noexcept { return vectors.cols(); }
  auto row(DocOrdinal doc) const { return vectors.row(static_cast<Eigen::Index>(doc)); }
};

using EmbeddingMatrix = BasicEmbeddingMatrix<double>;

/// Cosine similarity; 0 when either side is the zero vector.
template <typename A, typename B>
typename A::Scalar cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

/// Built-in embedder: components tf(d,t) * ln(N / df(t)) over the index
/// vocabulary, L2-normalized. A document whose terms all have idf 0 gets the
/// uniform unit vector over its own terms.
EmbeddingMatrix embed_tfidf(const Index& index);

/// The query counterpart of embed_tfidf: qtf * ln(N / df) over in-vocabulary
/// query terms, same fallback. The zero vector when no query term is indexed.
Vector<double> embed_query_tfidf(const Query& query, const Index& index);

/// Reads JSON lines ({"id": ..., "vector": [...]}) or the binary format
/// (detected by its magic) and aligns rows to `ids`. Ids absent from the
/// corpus are ignored. Throws MissingEmbedding, DimensionMismatch,
/// ZeroVector, DuplicateId, MalformedInput.
EmbeddingMatrix ingest_embeddings(const std::filesystem::path& path, const DocIdTable& ids);

/// Unaligned id -> vector table (used for query vectors). Same formats and
/// per-row checks as ingest_embeddings.
std::unordered_map<std::string, Vector<double>> read_vectors(const std::filesystem::path& path);

void save_embeddings_binary(const std::filesystem::path& path, const DocIdTable& ids,
                            const EmbeddingMatrix& emb);
void save_embeddings_jsonl(const std::filesystem::path& path, const DocIdTable& ids,
                           const EmbeddingMatrix& emb);

}  // namespace lexboost
