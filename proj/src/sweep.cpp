#include "lexboost/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "lexboost/error.hpp"
#include "lexboost/significance.hpp"

namespace lexboost {

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

std::vector<std::size_t> default_neighbor_counts() { return {2, 4, 8, 16}; }

namespace {

std::vector<Run> apply_rerank(std::vector<Run> runs, const SweepSpec& spec,
                              const std::unordered_map<std::string, Vector<double>>* query_vectors) {
  if (!spec.pipeline.rerank) return runs;
  for (auto& run : runs) {
    auto it = query_vectors->find(run.query_id);
    if (it == query_vectors->end()) {
      throw Error(ErrorCode::MissingEmbedding, "missing query vector for " + run.query_id);
    }
    run = rerank_with_embeddings(run, it->second, *spec.pipeline.rerank->embeddings, spec.pipeline.rerank->top_k);
  }
  return runs;
}

}  // namespace

std::vector<SweepRow> sweep(std::span<const Query> queries, const SweepSpec& spec, const Index& index,
                            const Qrels& qrels, const std::unordered_map<std::string, Vector<double>>* query_vectors) {
  if (spec.lambdas.empty() || spec.neighbor_counts.empty() || spec.metrics.empty()) {
    throw Error(ErrorCode::InvalidParameter, "sweep grids must be non-empty");
  }
  if (!spec.pipeline.lexboost || spec.pipeline.lexboost->graph == nullptr) {
    throw Error(ErrorCode::InvalidParameter, "sweep needs a corpus graph");
  }
  if (spec.pipeline.rerank && (spec.pipeline.rerank->embeddings == nullptr || query_vectors == nullptr)) {
    throw Error(ErrorCode::InvalidParameter, "rerank stage needs embeddings and query vectors");
  }
  const auto& graph = *spec.pipeline.lexboost->graph;
  for (auto n : spec.neighbor_counts) {
    FusionConfig{1.0, n, spec.pipeline.lexboost->config.missing}.validate(graph);
  }
  for (auto lambda : spec.lambdas) {
    FusionConfig{lambda, 1, spec.pipeline.lexboost->config.missing}.validate(graph);
  }

  std::vector<Run> first_stage;
  first_stage.reserve(queries.size());
  for (const auto& q : queries) first_stage.push_back(retrieve(q, spec.pipeline.model, index, spec.pipeline.cutoff));

  const auto baseline = evaluate(apply_rerank(first_stage, spec, query_vectors), qrels, spec.metrics, spec.gain);

  std::vector<SweepRow> rows;
  rows.reserve(spec.lambdas.size() * spec.neighbor_counts.size() * spec.metrics.size());
  for (double lambda : spec.lambdas) {
    for (std::size_t n : spec.neighbor_counts) {
      const FusionConfig cfg{lambda, n, spec.pipeline.lexboost->config.missing};
      std::vector<Run> runs;
      runs.reserve(queries.size());
      for (std::size_t i = 0; i < queries.size(); ++i) {
        ScorerContext ctx{&queries[i], &spec.pipeline.model, &index};
        runs.push_back(lexboost_rescore(first_stage[i], graph, cfg, &ctx));
      }
      const auto report = evaluate(apply_rerank(std::move(runs), spec, query_vectors), qrels, spec.metrics, spec.gain);
      for (std::size_t m = 0; m < spec.metrics.size(); ++m) {
        const auto& cell = report.metrics[m];
        auto [a, b] = align_by_query(cell.per_query, baseline.metrics[m].per_query);
        const double p = a.size() >= 2 ? paired_t_test(a, b).p : std::numeric_limits<double>::quiet_NaN();
        rows.push_back({lambda, n, cell.metric, cell.mean, p});
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "lambda,n,metric,value,p_vs_baseline\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f,%zu,", r.lambda, r.n);
    out << buf << r.metric;
    if (std::isnan(r.p_vs_baseline)) {
      std::snprintf(buf, sizeof buf, ",%.6f,nan\n", r.value);
    } else {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", r.value, r.p_vs_baseline);
    }
    out << buf;
  }
}

std::optional<SweepRow> best_cell(std::span<const SweepRow> rows, const std::string& metric,
                                  std::optional<std::size_t> n) {
  std::optional<SweepRow> best;
  for (const auto& r : rows) {
    if (r.metric != metric || (n && r.n != *n)) continue;
    if (!best || r.value > best->value || (r.value == best->value && r.lambda > best->lambda)) best = r;
  }
  return best;
}

}  // namespace lexboost
