#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <thread>
#include <vector>

#include "lexboost/embedding.hpp"
#include "lexboost/error.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost {

enum class Similarity : std::uint32_t { Cosine = 0, Dot = 1 };

struct Neighbor {
  DocOrdinal doc;
  double similarity;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Directed k-nearest-neighbour graph over a corpus. Each list holds exactly
/// min(k, N - 1) entries, similarity descending, neighbour ordinal ascending
/// on ties, never the document itself.
class CorpusGraph {
 public:
  CorpusGraph() = default;
  CorpusGraph(DocIdTable ids, std::size_t k, Similarity similarity,
              std::vector<std::vector<Neighbor>> lists);

  std::size_t k() const noexcept { return k_; }
  std::size_t num_docs() const noexcept { return lists_.size(); }
  Similarity similarity() const noexcept { return similarity_; }
  const DocIdTable& doc_ids() const noexcept { return ids_; }

  /// First n stored neighbours of `doc`. Throws NeighborCountExceedsGraph
  /// when n > k, InvalidParameter when n == 0, UnknownDocument for a bad
  /// ordinal.
  std::span<const Neighbor> neighbors(DocOrdinal doc, std::size_t n) const;
  std::span<const Neighbor> neighbors(DocOrdinal doc) const { return neighbors(doc, k_); }

  /// Same as neighbors(doc, n) without argument checks; the caller
  /// guarantees doc < num_docs() and 1 <= n <= k().
  std::span<const Neighbor> neighbors_unchecked(DocOrdinal doc, std::size_t n) const noexcept {
    const auto& list = lists_[doc];
    return {list.data(), n < list.size() ? n : list.size()};
  }

  friend bool operator==(const CorpusGraph&, const CorpusGraph&) = default;

 private:
  DocIdTable ids_;
  std::size_t k_ = 0;
  Similarity similarity_ = Similarity::Cosine;
  std::vector<std::vector<Neighbor>> lists_;
};

inline std::span<const Neighbor> neighbors(const CorpusGraph& graph, DocOrdinal doc, std::size_t n) {
  return graph.neighbors(doc, n);
}

namespace detail {

// Strict left-to-right accumulation in double. Every pair is summed in the
// same order, so duplicate rows (or rows scaled by a power of two) produce
// exactly tied similarities.
template <typename RowA, typename RowB>
double ordered_dot(const RowA& a, const RowB& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

inline bool neighbor_before(const Neighbor& a, const Neighbor& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.doc < b.doc;
}

}  // namespace detail

/// Exact brute-force top-k neighbours (O(N^2 * dim)). Rows are processed in
/// parallel; the result does not depend on the thread count.
template <typename Scalar>
CorpusGraph build_graph(const BasicEmbeddingMatrix<Scalar>& emb, DocIdTable ids, std::size_t k = 16,
                        Similarity similarity = Similarity::Cosine, unsigned threads = 0) {
  const auto n = static_cast<std::size_t>(emb.rows());
  if (k == 0) throw Error(ErrorCode::InvalidParameter, "k must be >= 1");
  if (ids.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "embedding rows do not match the document table");
  }
  if (n < 2) throw Error(ErrorCode::CorpusTooSmall, "corpus too small: need at least 2 documents");

  std::vector<double> norms(n, 1.0);
  if (similarity == Similarity::Cosine) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = emb.row(static_cast<DocOrdinal>(i));
      norms[i] = std::sqrt(detail::ordered_dot(r, r));
      if (!(norms[i] > 0.0)) throw Error(ErrorCode::ZeroVector, "zero vector for " + ids.id(static_cast<DocOrdinal>(i)));
    }
  }

  const std::size_t keep = std::min(k, n - 1);
  std::vector<std::vector<Neighbor>> lists(n);

  auto build_rows = [&](std::size_t begin, std::size_t end) {
    std::vector<Neighbor> candidates;
    candidates.reserve(n - 1);
    for (std::size_t i = begin; i < end; ++i) {
      candidates.clear();
      const auto ri = emb.row(static_cast<DocOrdinal>(i));
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dot = detail::ordered_dot(ri, emb.row(static_cast<DocOrdinal>(j)));
        candidates.push_back({static_cast<DocOrdinal>(j), dot / (norms[i] * norms[j])});
      }
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                        candidates.end(), detail::neighbor_before);
      lists[i].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    }
  };

  unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    build_rows(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      pool.emplace_back(build_rows, begin, std::min(n, begin + chunk));
    }
  }
  return CorpusGraph(std::move(ids), k, similarity, std::move(lists));
}

/// Binary layout is described in docs/FORMATS.md.
void save_graph(const CorpusGraph& graph, const std::filesystem::path& path);
/// Throws CorruptGraph or VersionMismatch.
CorpusGraph load_graph(const std::filesystem::path& path);

}  // namespace lexboost
