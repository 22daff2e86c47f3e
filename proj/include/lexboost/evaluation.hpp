#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexboost/run.hpp"

namespace lexboost {

/// doc_id -> grade for one query.
using QueryJudgments = std::unordered_map<std::string, int>;

/// Graded relevance judgments, (query_id, doc_id) -> grade >= 0.
class Qrels {
 public:
  /// Last write wins; returns false when the pair was already judged.
  bool set(const std::string& query_id, const std::string& doc_id, int grade);

  /// 0 for unjudged pairs.
  int grade(std::string_view query_id, std::string_view doc_id) const;
  /// Empty judgments for unknown queries.
  const QueryJudgments& judgments(std::string_view query_id) const;
  /// Sorted query ids.
  std::vector<std::string> query_ids() const;
  std::size_t num_queries() const noexcept { return by_query_.size(); }
  bool empty() const noexcept { return by_query_.empty(); }

 private:
  std::map<std::string, QueryJudgments, std::less<>> by_query_;
};

/// TREC qrels: `qid 0 docid rel` per line. Duplicates (last wins) and an
/// empty file are reported through `warnings`. Throws MalformedInput with the
/// line number for malformed lines and negative grades.
Qrels load_qrels(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// TREC run lines `qid Q0 docid rank score tag`, score with 6 decimals.
void write_run(std::span<const Run> runs, std::ostream& out);
void write_run(std::span<const Run> runs, const std::filesystem::path& path);
/// Runs in order of first appearance. Throws MalformedInput when ranks of a
/// query are not 1, 2, 3, ... in file order.
std::vector<Run> load_run(const std::filesystem::path& path);

enum class Gain { Linear, Exponential };

/// Binary-relevance AP at `rel_threshold`; 0 when the query has no relevant
/// documents.
double average_precision(const Run& run, const QueryJudgments& judged, int rel_threshold = 1);
/// DCG@k / IDCG@k; 0 when IDCG is 0.
double ndcg_at(const Run& run, const QueryJudgments& judged, std::size_t k, Gain gain = Gain::Linear);
/// Fraction of documents with grade >= rel_threshold found in the top k; 0
/// when there are none.
double recall_at(const Run& run, const QueryJudgments& judged, std::size_t k, int rel_threshold = 2);

struct MetricSpec {
  enum class Kind { AveragePrecision, Ndcg, Recall };
  Kind kind = Kind::AveragePrecision;
  std::size_t k = 0;  // unused for AP
  int rel_threshold = 1;
  std::string name;
};

/// "map", "ndcg@K", "recall@K" (grade >= 2), "recallT@K" (grade >= T).
/// `map_threshold` is the binarization used for "map". Throws
/// InvalidParameter.
MetricSpec parse_metric(std::string_view name, int map_threshold = 1);
std::vector<MetricSpec> parse_metrics(std::string_view comma_separated, int map_threshold = 1);

/// Whether the query contributes to the metric's mean (it has at least one
/// document counting toward the denominator).
bool is_evaluable(const MetricSpec& metric, const QueryJudgments& judged);
double compute_metric(const MetricSpec& metric, const Run& run, const QueryJudgments& judged,
                      Gain gain = Gain::Linear);

struct MetricResult {
  std::string metric;
  std::map<std::string, double> per_query;  // evaluated queries only
  std::vector<std::string> excluded;        // judged queries without relevant documents
  double mean = 0.0;
};

struct MetricReport {
  std::string tag;
  std::vector<MetricResult> metrics;

  const MetricResult& at(std::string_view metric) const;
};

/// Evaluates over the query ids present in `qrels`. A judged query missing
/// from `runs` is scored as an empty run.
MetricReport evaluate(std::span<const Run> runs, const Qrels& qrels, std::span<const MetricSpec> metrics,
                      Gain gain = Gain::Linear);

/// Tab-separated `metric  query  value`, trec_eval style, with an `all` row
/// per metric and a `num_q` / `num_excluded` row.
void write_report(const MetricReport& report, std::ostream& out, bool per_query = false);

}  // namespace lexboost
