#include "lexboost/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lexboost/error.hpp"

namespace lexboost {

// ---------------------------------------------------------------------------
// Qrels

bool Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
  auto& judged = by_query_[query_id];
  auto [it, inserted] = judged.insert_or_assign(doc_id, grade);
  return inserted;
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  const auto& judged = judgments(query_id);
  auto it = judged.find(std::string(doc_id));
  return it == judged.end() ? 0 : it->second;
}

const QueryJudgments& Qrels::judgments(std::string_view query_id) const {
  static const QueryJudgments kNone;
  auto it = by_query_.find(query_id);
  return it == by_query_.end() ? kNone : it->second;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(by_query_.size());
  for (const auto& [qid, _] : by_query_) ids.push_back(qid);
  return ids;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  // std::from_chars for double is unavailable on older libstdc++.
  std::string copy(s);
  char* end = nullptr;
  out = std::strtod(copy.c_str(), &end);
  return !copy.empty() && end == copy.c_str() + copy.size() && std::isfinite(out);
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

Qrels load_qrels(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    int grade = 0;
    if (fields.size() != 4) throw Error(ErrorCode::MalformedInput, where + ": expected 'qid 0 docid rel'");
    if (!parse_number(fields[3], grade)) throw Error(ErrorCode::MalformedInput, where + ": bad relevance grade");
    if (grade < 0) throw Error(ErrorCode::MalformedInput, where + ": negative relevance grade");
    std::string qid(fields[0]);
    std::string docid(fields[2]);
    if (!qrels.set(qid, docid, grade) && warnings != nullptr) {
      warnings->push_back(where + ": duplicate judgment for (" + qid + ", " + docid + "), last wins");
    }
  }
  if (qrels.empty() && warnings != nullptr) warnings->push_back(path.string() + ": no judgments");
  return qrels;
}

// ---------------------------------------------------------------------------
// Run files

void write_run(std::span<const Run> runs, std::ostream& out) {
  for (const auto& run : runs) {
    const std::string& tag = run.tag.empty() ? std::string("lexboost") : run.tag;
    for (std::size_t i = 0; i < run.docs.size(); ++i) {
      const auto& d = run.docs[i];
      out << run.query_id << " Q0 " << d.doc_id << ' ' << (i + 1) << ' ' << format_fixed(d.score, 6) << ' ' << tag
          << '\n';
    }
  }
}

void write_run(std::span<const Run> runs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  write_run(runs, out);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::vector<Run> load_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path.string());
  std::vector<Run> runs;
  std::unordered_map<std::string, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 6) throw Error(ErrorCode::MalformedInput, where + ": expected 'qid Q0 docid rank score tag'");
    std::size_t rank = 0;
    double score = 0.0;
    if (!parse_number(fields[3], rank)) throw Error(ErrorCode::MalformedInput, where + ": bad rank");
    if (!parse_double(fields[4], score)) throw Error(ErrorCode::MalformedInput, where + ": bad score");
    std::string qid(fields[0]);
    auto [it, inserted] = slot.emplace(qid, runs.size());
    if (inserted) runs.push_back(Run{qid, std::string(fields[5]), {}});
    auto& run = runs[it->second];
    if (rank != run.docs.size() + 1) {
      throw Error(ErrorCode::MalformedInput, where + ": non-monotone ranks for query " + qid + " (expected rank " +
                                                 std::to_string(run.docs.size() + 1) + ", got " +
                                                 std::to_string(rank) + ")");
    }
    run.docs.push_back({std::string(fields[2]), score, kNoOrdinal});
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Metrics

double average_precision(const Run& run, const QueryJudgments& judged, int rel_threshold) {
  std::size_t relevant_total = 0;
  for (const auto& [_, g] : judged) relevant_total += g >= rel_threshold;
  if (relevant_total == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < run.docs.size(); ++i) {
    auto it = judged.find(run.docs[i].doc_id);
    if (it != judged.end() && it->second >= rel_threshold) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant_total);
}

namespace {

double gain_of(int grade, Gain gain) {
  if (grade <= 0) return 0.0;
  return gain == Gain::Linear ? static_cast<double>(grade) : std::exp2(static_cast<double>(grade)) - 1.0;
}

}  // namespace

double ndcg_at(const Run& run, const QueryJudgments& judged, std::size_t k, Gain gain) {
  std::vector<int> grades;
  grades.reserve(judged.size());
  for (const auto& [_, g] : judged) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    ideal += gain_of(grades[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (ideal == 0.0) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, run.docs.size()); ++i) {
    auto it = judged.find(run.docs[i].doc_id);
    if (it != judged.end()) dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

double recall_at(const Run& run, const QueryJudgments& judged, std::size_t k, int rel_threshold) {
  std::size_t relevant_total = 0;
  for (const auto& [_, g] : judged) relevant_total += g >= rel_threshold;
  if (relevant_total == 0) return 0.0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < std::min(k, run.docs.size()); ++i) {
    auto it = judged.find(run.docs[i].doc_id);
    found += it != judged.end() && it->second >= rel_threshold;
  }
  return static_cast<double>(found) / static_cast<double>(relevant_total);
}

MetricSpec parse_metric(std::string_view name, int map_threshold) {
  auto bad = [&] { throw Error(ErrorCode::InvalidParameter, "unknown metric: " + std::string(name)); };
  MetricSpec spec;
  spec.name = std::string(name);
  if (name == "map") {
    spec.kind = MetricSpec::Kind::AveragePrecision;
    spec.rel_threshold = map_threshold;
    return spec;
  }
  auto at = name.find('@');
  if (at == std::string_view::npos) bad();
  auto head = name.substr(0, at);
  if (!parse_number(name.substr(at + 1), spec.k) || spec.k == 0) bad();
  if (head == "ndcg") {
    spec.kind = MetricSpec::Kind::Ndcg;
    return spec;
  }
  if (head.substr(0, 6) == "recall") {
    spec.kind = MetricSpec::Kind::Recall;
    spec.rel_threshold = 2;
    auto threshold = head.substr(6);
    if (!threshold.empty() && (!parse_number(threshold, spec.rel_threshold) || spec.rel_threshold < 1)) bad();
    return spec;
  }
  bad();
  return spec;
}

std::vector<MetricSpec> parse_metrics(std::string_view comma_separated, int map_threshold) {
  std::vector<MetricSpec> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    auto comma = comma_separated.find(',', start);
    auto piece = comma_separated.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!piece.empty()) out.push_back(parse_metric(piece, map_threshold));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw Error(ErrorCode::InvalidParameter, "no metrics given");
  return out;
}

bool is_evaluable(const MetricSpec& metric, const QueryJudgments& judged) {
  const int threshold = metric.kind == MetricSpec::Kind::Ndcg ? 1 : metric.rel_threshold;
  return std::any_of(judged.begin(), judged.end(), [&](const auto& j) { return j.second >= threshold; });
}

double compute_metric(const MetricSpec& metric, const Run& run, const QueryJudgments& judged, Gain gain) {
  switch (metric.kind) {
    case MetricSpec::Kind::AveragePrecision: return average_precision(run, judged, metric.rel_threshold);
    case MetricSpec::Kind::Ndcg: return ndcg_at(run, judged, metric.k, gain);
    case MetricSpec::Kind::Recall: return recall_at(run, judged, metric.k, metric.rel_threshold);
  }
  return 0.0;
}

const MetricResult& MetricReport::at(std::string_view metric) const {
  for (const auto& m : metrics) {
    if (m.metric == metric) return m;
  }
  throw Error(ErrorCode::InvalidParameter, "metric not in report: " + std::string(metric));
}

MetricReport evaluate(std::span<const Run> runs, const Qrels& qrels, std::span<const MetricSpec> metrics, Gain gain) {
  std::unordered_map<std::string_view, const Run*> by_query;
  for (const auto& run : runs) by_query.emplace(run.query_id, &run);

  MetricReport report;
  if (!runs.empty()) report.tag = runs.front().tag;
  const Run empty_run;
  const auto query_ids = qrels.query_ids();
  for (const auto& metric : metrics) {
    MetricResult result;
    result.metric = metric.name;
    double sum = 0.0;
    for (const auto& qid : query_ids) {
      const auto& judged = qrels.judgments(qid);
      if (!is_evaluable(metric, judged)) {
        result.excluded.push_back(qid);
        continue;
      }
      auto it = by_query.find(qid);
      const Run& run = it == by_query.end() ? empty_run : *it->second;
      const double v = compute_metric(metric, run, judged, gain);
      result.per_query.emplace(qid, v);
    }
    // Fold in query-id order so the mean is independent of run order.
    for (const auto& [_, v] : result.per_query) sum += v;
    result.mean = result.per_query.empty() ? 0.0 : sum / static_cast<double>(result.per_query.size());
    report.metrics.push_back(std::move(result));
  }
  return report;
}

void write_report(const MetricReport& report, std::ostream& out, bool per_query) {
  for (const auto& m : report.metrics) {
    if (per_query) {
      for (const auto& [qid, v] : m.per_query) out << m.metric << '\t' << qid << '\t' << format_fixed(v, 4) << '\n';
    }
    out << m.metric << "\tall\t" << format_fixed(m.mean, 4) << '\n';
    out << m.metric << "\tnum_q\t" << m.per_query.size() << '\n';
    if (!m.excluded.empty()) out << m.metric << "\tnum_excluded\t" << m.excluded.size() << '\n';
  }
}

}  // namespace lexboost
