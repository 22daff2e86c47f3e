#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lexboost/run.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost {

enum class ModelKind { BM25, PL2, DPH, QLD };

std::string_view to_string(ModelKind kind) noexcept;
/// Case-insensitive "bm25" | "pl2" | "dph" | "qld". Throws UnknownModel.
ModelKind parse_model_kind(std::string_view name);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Pl2Params {
  double c = 1.0;
};

struct DphParams {};

struct QldParams {
  double mu = 1000.0;
};

/// A first-stage lexical relevance model with validated parameters.
class ScoringModel {
 public:
  using Params = std::variant<Bm25Params, Pl2Params, DphParams, QldParams>;

  /// Throws InvalidParameter unless k1 > 0, 0 <= b <= 1, c > 0, mu > 0.
  explicit ScoringModel(Params params);

  static ScoringModel bm25(double k1 = 1.2, double b = 0.75) { return ScoringModel(Bm25Params{k1, b}); }
  static ScoringModel pl2(double c = 1.0) { return ScoringModel(Pl2Params{c}); }
  static ScoringModel dph() { return ScoringModel(DphParams{}); }
  static ScoringModel qld(double mu = 1000.0) { return ScoringModel(QldParams{mu}); }
  /// Model of the given kind with default parameters.
  static ScoringModel with_defaults(ModelKind kind);

  ModelKind kind() const noexcept { return static_cast<ModelKind>(params_.index()); }
  const Params& params() const noexcept { return params_; }

 private:
  Params params_;
};

struct Query {
  std::string query_id;
  std::string text;
  std::vector<std::string> terms;
};

Query make_query(std::string query_id, std::string text, const TokenizerConfig& tokenizer = {});

/// `<qid>\t<text>` per line.
std::vector<Query> read_queries_tsv(const std::filesystem::path& path,
                                    const TokenizerConfig& tokenizer = {});

struct QueryTerm {
  TermId id;
  double qtf;
  double weight;  // idf (BM25), F/N (PL2), N/F (DPH), mu * P(t|C) (QLD)
};

/// A query bound to a model and an index: collection-present query terms with
/// multiplicity folded into qtf, ordered by term id. Reuse one instance to
/// score many documents for the same query.
class QueryScorer {
 public:
  QueryScorer(const Query& query, const ScoringModel& model, const Index& index);

  const std::vector<QueryTerm>& terms() const noexcept { return terms_; }

  /// Exact score of `doc` via the forward index.
  double score(DocOrdinal doc) const;

  /// Contribution of one query term occurring tf > 0 times in a document of
  /// length dl. Degenerate DFR cases contribute nothing.
  double term_score(const QueryTerm& qt, std::uint32_t tf, double dl) const;

  /// Document-level term added after the per-term sum (the QLD length prior;
  /// zero for the other models).
  double doc_adjustment(double dl) const;

 private:
  ModelKind kind_;
  const Index& index_;
  std::vector<QueryTerm> terms_;
  std::uint64_t scored_occurrences_ = 0;
  double k1_ = 0.0, b_ = 0.0, c_ = 0.0, mu_ = 0.0;
};

/// Score of one document under `model`. Terms are visited in term-id order,
/// the same order retrieve() accumulates in, so both paths are bit-identical.
double score_document(const Query& query, DocOrdinal doc, const ScoringModel& model,
                      const Index& index);

/// Scores every document containing at least one collection-present query
/// term, ranks by score descending (doc_id ascending on ties), and keeps the
/// top `cutoff`. An empty query yields an empty run.
Run retrieve(const Query& query, const ScoringModel& model, const Index& index,
             std::size_t cutoff = 1000);

}  // namespace lexboost
