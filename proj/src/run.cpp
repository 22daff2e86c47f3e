#include "lexboost/run.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexboost/error.hpp"

namespace lexboost {

void sort_ranked(std::vector<ScoredDoc>& docs) { std::sort(docs.begin(), docs.end(), ranks_before); }

void validate_run(const Run& run) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(run.docs.size());
  for (std::size_t i = 0; i < run.docs.size(); ++i) {
    const auto& d = run.docs[i];
    if (!seen.insert(d.doc_id).second) {
      throw Error(ErrorCode::MalformedInput, "query " + run.query_id + ": duplicate doc " + d.doc_id);
    }
    if (i > 0 && run.docs[i - 1].score < d.score) {
      throw Error(ErrorCode::MalformedInput,
                  "query " + run.query_id + ": scores increase at rank " + std::to_string(i + 1));
    }
  }
}

void resolve_ordinals(Run& run, const DocIdTable& ids) {
  for (auto& d : run.docs) {
    auto ordinal = ids.ordinal_of(d.doc_id);
    if (!ordinal) {
      throw Error(ErrorCode::UnknownDocument,
                  "query " + run.query_id + ": document not in corpus: " + d.doc_id);
    }
    d.ordinal = *ordinal;
  }
}

void resolve_ordinals(std::span<Run> runs, const DocIdTable& ids) {
  for (auto& run : runs) resolve_ordinals(run, ids);
}

}  // namespace lexboost
