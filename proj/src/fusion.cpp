#include "lexboost/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lexboost/error.hpp"

namespace lexboost {

std::string_view to_string(MissingPolicy policy) noexcept {
  return policy == MissingPolicy::Zero ? "zero" : "exact";
}

MissingPolicy parse_missing_policy(std::string_view name) {
  if (name == "zero") return MissingPolicy::Zero;
  if (name == "exact" || name == "exact_on_demand") return MissingPolicy::ExactOnDemand;
  throw Error(ErrorCode::InvalidParameter, "unknown missing policy: " + std::string(name));
}

void FusionConfig::validate(const CorpusGraph& graph) const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "lambda must be in [0, 1]");
  }
  if (n == 0) throw Error(ErrorCode::InvalidParameter, "n must be >= 1");
  if (n > graph.k()) {
    throw Error(ErrorCode::NeighborCountExceedsGraph,
                "graph stores only k=" + std::to_string(graph.k()) + " neighbors, asked for n=" + std::to_string(n));
  }
}

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

// Ordinal-indexed score table reused across calls on the same thread; only
// the slots a run touched are reset afterwards.
class ScoreTable {
 public:
  void load(const Run& run, std::size_t num_docs) {
    if (slots_.size() < num_docs) slots_.resize(num_docs, kAbsent);
    for (const auto& d : run.docs) slots_[d.ordinal] = d.score;
    loaded_ = &run;
  }
  double get(DocOrdinal doc) const { return slots_[doc]; }
  void clear() {
    if (loaded_ == nullptr) return;
    for (const auto& d : loaded_->docs) slots_[d.ordinal] = kAbsent;
    loaded_ = nullptr;
  }

 private:
  std::vector<double> slots_;
  const Run* loaded_ = nullptr;
};

struct TableGuard {
  ScoreTable& table;
  ~TableGuard() { table.clear(); }
};

void check_documents(const Run& run, const DocIdTable& ids) {
  for (const auto& d : run.docs) {
    if (d.ordinal >= ids.size() || ids.id(d.ordinal) != d.doc_id) {
      throw Error(ErrorCode::UnknownDocument, "query " + run.query_id + ": document not in graph corpus: " + d.doc_id);
    }
  }
}

// Ordinals were checked against the graph and n against k before this
// runs. Every neighbour score is read from the table, which holds the input
// scores, so documents can be re-scored in place. A null scorer means
// absent neighbours count as zero.
void fuse_scores(Run& run, const CorpusGraph& graph, const FusionConfig& cfg, const ScoreTable& table,
                 const QueryScorer* scorer, FusionCounters& work) {
  const double own_weight = cfg.lambda;
  const double neighbor_weight = 1.0 - cfg.lambda;
  for (auto& d : run.docs) {
    const auto neighbours = graph.neighbors_unchecked(d.ordinal, cfg.n);
    double sum = 0.0;
    if (scorer != nullptr) {
      for (const auto& nb : neighbours) {
        double s = table.get(nb.doc);
        if (std::isnan(s)) {
          s = scorer->score(nb.doc);
          ++work.scorer_calls;
        }
        sum += s;
      }
    } else {
      // Four independent partial sums keep the adds from serializing.
      auto value = [&table](const Neighbor& nb) {
        const double s = table.get(nb.doc);
        return s == s ? s : 0.0;
      };
      double part[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t i = 0;
      for (; i + 4 <= neighbours.size(); i += 4) {
        for (std::size_t j = 0; j < 4; ++j) part[j] += value(neighbours[i + j]);
      }
      for (; i < neighbours.size(); ++i) part[0] += value(neighbours[i]);
      sum = (part[0] + part[1]) + (part[2] + part[3]);
    }
    work.lookups += neighbours.size();
    d.score = own_weight * d.score + neighbor_weight / static_cast<double>(neighbours.size()) * sum;
  }
}

}  // namespace

Run lexboost_rescore(Run run, const CorpusGraph& graph, const FusionConfig& cfg, const ScorerContext* ctx,
                     FusionCounters* counters) {
  cfg.validate(graph);
  if (cfg.lambda == 1.0) return run;

  const bool exact = cfg.missing == MissingPolicy::ExactOnDemand;
  if (exact && (ctx == nullptr || ctx->query == nullptr || ctx->model == nullptr || ctx->index == nullptr)) {
    throw Error(ErrorCode::InvalidParameter, "missing policy 'exact' needs a scorer context");
  }
  if (std::any_of(run.docs.begin(), run.docs.end(), [](const auto& d) { return d.ordinal == kNoOrdinal; })) {
    resolve_ordinals(run, graph.doc_ids());
  }
  check_documents(run, graph.doc_ids());

  std::optional<QueryScorer> scorer;
  if (exact) {
    if (ctx->index->num_docs() != graph.num_docs()) {
      throw Error(ErrorCode::UnknownDocument, "index and graph cover different corpora");
    }
    scorer.emplace(*ctx->query, *ctx->model, *ctx->index);
  }

  FusionCounters work;
  {
    thread_local ScoreTable table;
    table.load(run, graph.num_docs());
    TableGuard guard{table};
    fuse_scores(run, graph, cfg, table, scorer ? &*scorer : nullptr, work);
  }
  sort_ranked(run.docs);
  run.tag += "+lexboost";

  if (counters != nullptr) {
    counters->lookups += work.lookups;
    counters->scorer_calls += work.scorer_calls;
  }
  return run;
}

Run rerank_with_embeddings(const Run& run, const Vector<double>& query_vector, const EmbeddingMatrix& emb,
                           std::size_t top_k) {
  if (top_k == 0) throw Error(ErrorCode::InvalidParameter, "top_k must be >= 1");
  if (query_vector.size() != emb.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query vector has dim " + std::to_string(query_vector.size()) +
                                                  ", embeddings have dim " + std::to_string(emb.dim()));
  }
  for (const auto& d : run.docs) {
    if (d.ordinal >= static_cast<std::size_t>(emb.rows())) {
      throw Error(ErrorCode::UnknownDocument, "query " + run.query_id + ": no embedding for " + d.doc_id);
    }
  }

  Run out{run.query_id, run.tag + "+rerank", run.docs};
  const std::size_t block = std::min(top_k, out.docs.size());
  if (block == 0) return out;

  auto head = out.docs.begin() + static_cast<std::ptrdiff_t>(block);
  for (auto it = out.docs.begin(); it != head; ++it) it->score = cosine(query_vector, emb.row(it->ordinal).transpose());
  std::stable_sort(out.docs.begin(), head, [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });

  const double block_min = out.docs[block - 1].score;
  for (std::size_t i = block; i < out.docs.size(); ++i) {
    out.docs[i].score = block_min - static_cast<double>(i - block + 1);
  }
  return out;
}

Run run_pipeline(const Query& query, const PipelineSpec& spec, const Index& index, const Vector<double>* query_vector,
                 FusionCounters* counters) {
  if (spec.rerank && query_vector == nullptr) {
    throw Error(ErrorCode::InvalidParameter, "rerank stage needs a query vector");
  }
  if (spec.lexboost && spec.lexboost->graph == nullptr) throw Error(ErrorCode::InvalidParameter, "lexboost stage has no graph");
  if (spec.rerank && spec.rerank->embeddings == nullptr) {
    throw Error(ErrorCode::InvalidParameter, "rerank stage has no embeddings");
  }

  Run run = retrieve(query, spec.model, index, spec.cutoff);
  if (spec.lexboost) {
    ScorerContext ctx{&query, &spec.model, &index};
    run = lexboost_rescore(std::move(run), *spec.lexboost->graph, spec.lexboost->config, &ctx, counters);
  }
  if (spec.rerank) {
    run = rerank_with_embeddings(run, *query_vector, *spec.rerank->embeddings, spec.rerank->top_k);
  }
  return run;
}

}  // namespace lexboost
