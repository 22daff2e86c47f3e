#include "lexboost/scorers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <type_traits>

#include "lexboost/error.hpp"

namespace lexboost {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::BM25: return "bm25";
    case ModelKind::PL2: return "pl2";
    case ModelKind::DPH: return "dph";
    case ModelKind::QLD: return "qld";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bm25") return ModelKind::BM25;
  if (lower == "pl2") return ModelKind::PL2;
  if (lower == "dph") return ModelKind::DPH;
  if (lower == "qld") return ModelKind::QLD;
  throw Error(ErrorCode::UnknownModel, "unknown model: " + std::string(name));
}

ScoringModel::ScoringModel(Params params) : params_(params) {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::InvalidParameter, what); };
  if (auto* p = std::get_if<Bm25Params>(&params_)) {
    if (!(p->k1 > 0.0)) invalid("bm25: k1 must be > 0");
    if (!(p->b >= 0.0 && p->b <= 1.0)) invalid("bm25: b must be in [0, 1]");
  } else if (auto* p = std::get_if<Pl2Params>(&params_)) {
    if (!(p->c > 0.0)) invalid("pl2: c must be > 0");
  } else if (auto* p = std::get_if<QldParams>(&params_)) {
    if (!(p->mu > 0.0)) invalid("qld: mu must be > 0");
  }
}

ScoringModel ScoringModel::with_defaults(ModelKind kind) {
  switch (kind) {
    case ModelKind::BM25: return bm25();
    case ModelKind::PL2: return pl2();
    case ModelKind::DPH: return dph();
    case ModelKind::QLD: return qld();
  }
  throw Error(ErrorCode::UnknownModel, "unknown model kind");
}

Query make_query(std::string query_id, std::string text, const TokenizerConfig& tokenizer) {
  Query q{std::move(query_id), std::move(text), {}};
  q.terms = tokenize(q.text, tokenizer);
  return q;
}

std::vector<Query> read_queries_tsv(const std::filesystem::path& path, const TokenizerConfig& tokenizer) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path.string());
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::MalformedInput,
                  path.string() + ":" + std::to_string(line_no) + ": expected <qid>\\t<text>");
    }
    queries.push_back(make_query(line.substr(0, tab), line.substr(tab + 1), tokenizer));
  }
  return queries;
}

QueryScorer::QueryScorer(const Query& query, const ScoringModel& model, const Index& index)
    : kind_(model.kind()), index_(index) {
  const auto& inv = index.inverted;
  std::map<TermId, std::uint32_t> counts;
  for (const auto& t : query.terms) {
    if (auto id = inv.term_id(t)) ++counts[*id];
  }
  std::visit(
      [this](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Bm25Params>) {
          k1_ = p.k1;
          b_ = p.b;
        } else if constexpr (std::is_same_v<P, Pl2Params>) {
          c_ = p.c;
        } else if constexpr (std::is_same_v<P, QldParams>) {
          mu_ = p.mu;
        }
      },
      model.params());

  const auto n = static_cast<double>(inv.num_docs());
  for (auto [id, qtf] : counts) {
    const auto df = static_cast<double>(inv.doc_freq(id));
    const auto cf = static_cast<double>(inv.collection_freq(id));
    double weight = 0.0;
    switch (kind_) {
      case ModelKind::BM25: weight = std::log((n - df + 0.5) / (df + 0.5) + 1.0); break;
      case ModelKind::PL2: weight = cf / n; break;
      case ModelKind::DPH: weight = n / cf; break;
      case ModelKind::QLD: weight = mu_ * (cf / static_cast<double>(inv.total_tokens())); break;
    }
    terms_.push_back({id, static_cast<double>(qtf), weight});
    scored_occurrences_ += qtf;
  }
}

double QueryScorer::term_score(const QueryTerm& qt, std::uint32_t tf_count, double dl) const {
  const double tf = tf_count;
  const double adl = index_.inverted.avg_doc_length();
  switch (kind_) {
    case ModelKind::BM25: {
      const double norm = k1_ * (1.0 - b_ + b_ * dl / adl);
      return qt.qtf * qt.weight * (tf * (k1_ + 1.0)) / (tf + norm);
    }
    case ModelKind::PL2: {
      const double tfn = tf * std::log2(1.0 + c_ * adl / dl);
      if (!(tfn > 0.0)) return 0.0;
      const double lambda = qt.weight;
      const double gain = tfn * std::log2(tfn / lambda) + (lambda - tfn) * std::numbers::log2e +
                          0.5 * std::log2(2.0 * std::numbers::pi * tfn);
      return qt.qtf * gain / (tfn + 1.0);
    }
    case ModelKind::DPH: {
      const double f = tf / dl;
      if (f >= 1.0) return 0.0;
      const double arg = tf * (adl / dl) * qt.weight;
      if (!(arg > 0.0)) return 0.0;
      const double norm = (1.0 - f) * (1.0 - f) / (tf + 1.0);
      return qt.qtf * norm * (tf * std::log2(arg) + 0.5 * std::log2(2.0 * std::numbers::pi * tf * (1.0 - f)));
    }
    case ModelKind::QLD:
      return qt.qtf * std::log1p(tf / qt.weight);
  }
  return 0.0;
}

double QueryScorer::doc_adjustment(double dl) const {
  if (kind_ != ModelKind::QLD) return 0.0;
  return static_cast<double>(scored_occurrences_) * std::log(mu_ / (dl + mu_));
}

double QueryScorer::score(DocOrdinal doc) const {
  if (doc >= index_.num_docs()) {
    throw Error(ErrorCode::UnknownDocument, "document ordinal out of range: " + std::to_string(doc));
  }
  const double dl = index_.inverted.doc_length(doc);
  double total = 0.0;
  for (const auto& qt : terms_) {
    if (auto tf = index_.forward.tf(doc, qt.id); tf > 0) total += term_score(qt, tf, dl);
  }
  return total + doc_adjustment(dl);
}

double score_document(const Query& query, DocOrdinal doc, const ScoringModel& model, const Index& index) {
  return QueryScorer(query, model, index).score(doc);
}

Run retrieve(const Query& query, const ScoringModel& model, const Index& index, std::size_t cutoff) {
  if (cutoff == 0) throw Error(ErrorCode::InvalidParameter, "cutoff must be >= 1");
  Run run{query.query_id, std::string(to_string(model.kind())), {}};
  QueryScorer prepared(query, model, index);
  if (prepared.terms().empty()) return run;

  // Term-at-a-time accumulation in the same term order score_document uses.
  const auto& inv = index.inverted;
  std::vector<double> acc(inv.num_docs(), 0.0);
  std::vector<char> touched(inv.num_docs(), 0);
  std::vector<DocOrdinal> candidates;
  for (const auto& qt : prepared.terms()) {
    for (const auto& p : inv.postings(qt.id)) {
      acc[p.doc] += prepared.term_score(qt, p.tf, inv.doc_length(p.doc));
      if (!touched[p.doc]) {
        touched[p.doc] = 1;
        candidates.push_back(p.doc);
      }
    }
  }

  run.docs.reserve(candidates.size());
  for (auto d : candidates) {
    run.docs.push_back({index.doc_ids.id(d), acc[d] + prepared.doc_adjustment(inv.doc_length(d)), d});
  }
  if (run.docs.size() > cutoff) {
    std::partial_sort(run.docs.begin(), run.docs.begin() + static_cast<std::ptrdiff_t>(cutoff),
                      run.docs.end(), ranks_before);
    run.docs.resize(cutoff);
  } else {
    sort_ranked(run.docs);
  }
  return run;
}

}  // namespace lexboost
