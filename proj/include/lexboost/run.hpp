#pragma once

#include <span>
#include <string>
#include <vector>

#include "lexboost/text_index.hpp"

namespace lexboost {

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  /// Position in the corpus id table; kNoOrdinal for runs read from disk
  /// until resolve_ordinals() is called.
  DocOrdinal ordinal = kNoOrdinal;
};

/// Ranked list for one query. Rank of docs[i] is i + 1.
struct Run {
  std::string query_id;
  std::string tag;
  std::vector<ScoredDoc> docs;

  std::size_t size() const noexcept { return docs.size(); }
  bool empty() const noexcept { return docs.empty(); }
};

/// Score descending, doc_id ascending on ties.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

void sort_ranked(std::vector<ScoredDoc>& docs);

/// Scores non-increasing and doc ids unique. Throws MalformedInput otherwise.
void validate_run(const Run& run);

/// Fills ScoredDoc::ordinal from the id table. Throws UnknownDocument.
void resolve_ordinals(Run& run, const DocIdTable& ids);
void resolve_ordinals(std::span<Run> runs, const DocIdTable& ids);

}  // namespace lexboost
