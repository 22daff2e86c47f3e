#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "lexboost/corpus_graph.hpp"
#include "lexboost/embedding.hpp"
#include "lexboost/run.hpp"
#include "lexboost/scorers.hpp"

namespace lexboost {

/// What a neighbour contributes when it is not in the run being re-scored.
enum class MissingPolicy {
  Zero,           // contributes 0; fusion is pure lookups into the run
  ExactOnDemand,  // scored exactly through the forward index
};

std::string_view to_string(MissingPolicy policy) noexcept;
/// "zero" | "exact" (alias "exact_on_demand"). Throws InvalidParameter.
MissingPolicy parse_missing_policy(std::string_view name);

struct FusionConfig {
  double lambda = 0.7;
  std::size_t n = 16;
  MissingPolicy missing = MissingPolicy::Zero;

  /// Throws InvalidParameter (lambda outside [0, 1], n == 0) or
  /// NeighborCountExceedsGraph (n > graph.k()).
  void validate(const CorpusGraph& graph) const;
};

/// Everything needed to score a document outside the run.
struct ScorerContext {
  const Query* query = nullptr;
  const ScoringModel* model = nullptr;
  const Index* index = nullptr;
};

/// Work done by one or more lexboost_rescore calls.
struct FusionCounters {
  std::uint64_t lookups = 0;       // neighbour-score lookups into the run
  std::uint64_t scorer_calls = 0;  // on-demand score_document evaluations
};

/// Re-scores every document of `run` as
///   lambda * own + (1 - lambda) * mean(score of its top-n graph neighbours)
/// and re-ranks (score descending, doc_id ascending). Never adds or drops
/// documents. With lambda == 1 the input run is returned unchanged.
///
/// Neighbour scores come from the run itself; neighbours outside the run are
/// handled by cfg.missing (ExactOnDemand requires `ctx`). The mean divides by
/// the number of neighbours actually stored, which is n whenever the corpus
/// has more than n documents.
///
/// Takes the run by value: pass an rvalue to re-score in place.
///
/// Throws NeighborCountExceedsGraph, UnknownDocument (run document not in
/// the graph's corpus), InvalidParameter.
Run lexboost_rescore(Run run, const CorpusGraph& graph, const FusionConfig& cfg,
                     const ScorerContext* ctx = nullptr, FusionCounters* counters = nullptr);

/// Re-scores the first min(top_k, |run|) documents by cosine(query_vector,
/// doc vector) and re-sorts them (stable on cosine ties). The remaining tail
/// keeps its order with scores block_min - 1, block_min - 2, ...
/// Run documents must carry ordinals. Throws DimensionMismatch,
/// UnknownDocument, InvalidParameter.
Run rerank_with_embeddings(const Run& run, const Vector<double>& query_vector, const EmbeddingMatrix& emb,
                           std::size_t top_k = 1000);

struct LexBoostStage {
  const CorpusGraph* graph = nullptr;
  FusionConfig config;
};

struct RerankStage {
  const EmbeddingMatrix* embeddings = nullptr;
  std::size_t top_k = 1000;
};

/// lexical -> [lexboost] -> [rerank].
struct PipelineSpec {
  ScoringModel model = ScoringModel::bm25();
  std::size_t cutoff = 1000;
  std::optional<LexBoostStage> lexboost;
  std::optional<RerankStage> rerank;
};

/// Runs the stages in order. The run tag is the model name followed by
/// "+lexboost" / "+rerank" for each stage that changed the run (a lambda == 1
/// LexBoost stage is the identity and leaves no trace). `query_vector` is
/// required when a rerank stage is present.
Run run_pipeline(const Query& query, const PipelineSpec& spec, const Index& index,
                 const Vector<double>* query_vector = nullptr, FusionCounters* counters = nullptr);

}  // namespace lexboost
