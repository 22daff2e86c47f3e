#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexboost/evaluation.hpp"
#include "lexboost/fusion.hpp"

namespace lexboost {

/// 0, 0.05, ..., 1 (21 values).
std::vector<double> default_lambda_grid();
/// 2, 4, 8, 16.
std::vector<std::size_t> default_neighbor_counts();

struct SweepSpec {
  /// Model, cutoff, graph, missing policy and optional rerank stage; the
  /// lexboost lambda and n are overridden per cell.
  PipelineSpec pipeline;
  std::vector<double> lambdas = default_lambda_grid();
  std::vector<std::size_t> neighbor_counts = default_neighbor_counts();
  std::vector<MetricSpec> metrics;
  Gain gain = Gain::Linear;
};

struct SweepRow {
  double lambda = 1.0;
  std::size_t n = 0;
  std::string metric;
  double value = 0.0;
  /// Paired t-test against the lambda = 1 baseline; NaN with fewer than two
  /// evaluated queries.
  double p_vs_baseline = 1.0;
};

/// One row per (lambda, n, metric), in grid order. First-stage retrieval is
/// computed once per query and shared by every cell. `query_vectors` is
/// required when the pipeline has a rerank stage.
std::vector<SweepRow> sweep(std::span<const Query> queries, const SweepSpec& spec, const Index& index,
                            const Qrels& qrels,
                            const std::unordered_map<std::string, Vector<double>>* query_vectors = nullptr);

/// Header `lambda,n,metric,value,p_vs_baseline`.
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

/// Highest-valued cell for `metric` (optionally restricted to one n); ties
/// go to the larger lambda, i.e. the cell closest to the baseline.
std::optional<SweepRow> best_cell(std::span<const SweepRow> rows, const std::string& metric,
                                  std::optional<std::size_t> n = std::nullopt);

}  // namespace lexboost
