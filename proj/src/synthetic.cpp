#include "lexboost/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "lexboost/error.hpp"

namespace lexboost {

namespace {

// Distribution helpers built on raw engine output; std::*_distribution
// results differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 engine_;
};

std::string word(const char* prefix, std::size_t group, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%zux%zu", prefix, group, i);
  return buf;
}

std::string padded_id(const char* prefix, std::size_t i, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SyntheticCollection generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.topics == 0 || cfg.docs_per_topic == 0 || cfg.topic_vocabulary == 0 || cfg.background_vocabulary == 0 ||
      cfg.query_length < 2 || cfg.min_doc_length == 0 || cfg.max_doc_length < cfg.min_doc_length ||
      2 * cfg.shared_with_next_topic > cfg.topic_vocabulary || cfg.subtopics == 0 ||
      cfg.query_length - 1 > cfg.subtopic_vocabulary) {
    throw Error(ErrorCode::InvalidParameter, "invalid synthetic corpus configuration");
  }
  Rng rng(cfg.seed);

  // Topic t owns general words "t<t>x<i>" and subtopic words
  // "s<t * subtopics + j>x<i>"; the last `shared` slots of topic t are the
  // first slots of topic t + 1, which creates cross-topic vocabulary overlap.
  std::vector<std::vector<std::string>> topic_words(cfg.topics);
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    for (std::size_t i = 0; i < cfg.topic_vocabulary; ++i) topic_words[t].push_back(word("t", t, i));
  }
  if (cfg.topics > 1) {
    for (std::size_t t = 0; t < cfg.topics; ++t) {
      const std::size_t next = (t + 1) % cfg.topics;
      for (std::size_t s = 0; s < cfg.shared_with_next_topic; ++s) {
        topic_words[next][s] = topic_words[t][cfg.topic_vocabulary - cfg.shared_with_next_topic + s];
      }
    }
  }
  std::vector<std::vector<std::string>> subtopic_words(cfg.topics * cfg.subtopics);
  for (std::size_t g = 0; g < subtopic_words.size(); ++g) {
    for (std::size_t i = 0; i < cfg.subtopic_vocabulary; ++i) subtopic_words[g].push_back(word("s", g, i));
  }
  std::vector<std::string> background;
  for (std::size_t i = 0; i < cfg.background_vocabulary; ++i) background.push_back(word("bg", 0, i));

  SyntheticCollection out;
  const int doc_width = static_cast<int>(std::to_string(cfg.topics * cfg.docs_per_topic).size());
  std::vector<double> purity;
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    for (std::size_t j = 0; j < cfg.docs_per_topic; ++j) {
      const std::size_t sub = j % cfg.subtopics;
      const auto& own_subtopic = subtopic_words[t * cfg.subtopics + sub];
      const double p = rng.uniform(cfg.min_purity, cfg.max_purity);
      const std::size_t length = cfg.min_doc_length + rng.index(cfg.max_doc_length - cfg.min_doc_length + 1);
      std::string text;
      for (std::size_t w = 0; w < length; ++w) {
        const double u = rng.unit();
        const std::string* token;
        if (u < p) {
          if (cfg.subtopic_vocabulary > 0 && rng.unit() < cfg.subtopic_share) {
            token = &own_subtopic[rng.index(cfg.subtopic_vocabulary)];
          } else {
            token = &topic_words[t][rng.index(cfg.topic_vocabulary)];
          }
        } else if (u < p + cfg.off_topic_noise && cfg.topics > 1) {
          std::size_t other = rng.index(cfg.topics - 1);
          if (other >= t) ++other;
          token = &topic_words[other][rng.index(cfg.topic_vocabulary)];
        } else {
          // Squared uniform skews background use toward low indices (a few
          // very common words, a long tail).
          const double v = rng.unit();
          token = &background[static_cast<std::size_t>(v * v * static_cast<double>(cfg.background_vocabulary))];
        }
        if (!text.empty()) text.push_back(' ');
        text += *token;
      }
      const std::size_t ordinal = out.corpus.size();
      out.corpus.add({padded_id("d", ordinal, doc_width), std::move(text)});
      out.doc_topics.push_back(t);
      out.doc_subtopics.push_back(sub);
      purity.push_back(p);
    }
  }

  const int query_width = static_cast<int>(std::to_string(cfg.queries).size());
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    const std::size_t topic = q % cfg.topics;
    const std::size_t sub = (q / cfg.topics) % cfg.subtopics;
    const auto& words = subtopic_words[topic * cfg.subtopics + sub];
    std::string text = topic_words[topic][rng.index(cfg.topic_vocabulary)];
    std::vector<std::size_t> picks;
    while (picks.size() + 1 < cfg.query_length) {
      auto i = rng.index(cfg.subtopic_vocabulary);
      if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
    }
    for (auto i : picks) text += " " + words[i];
    SyntheticQuery query{padded_id("q", q + 1, query_width), std::move(text), topic, sub};

    for (DocOrdinal d = 0; d < out.corpus.size(); ++d) {
      if (out.doc_topics[d] != topic) continue;
      int grade = 0;
      if (out.doc_subtopics[d] == sub) grade = purity[d] >= cfg.focused_purity ? 2 : 1;
      out.qrels.set(query.query_id, out.corpus[d].doc_id, grade);
    }
    const std::size_t off_topic = out.corpus.size() - cfg.docs_per_topic;
    for (std::size_t k = 0, judged = 0; judged < std::min(cfg.judged_negatives, off_topic) && k < 100 * off_topic; ++k) {
      const auto d = static_cast<DocOrdinal>(rng.index(out.corpus.size()));
      if (out.doc_topics[d] == topic) continue;
      if (out.qrels.set(query.query_id, out.corpus[d].doc_id, 0)) ++judged;
    }
    out.queries.push_back(std::move(query));
  }
  return out;
}

void write_synthetic(const SyntheticCollection& collection, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + (dir / name).string());
    return out;
  };
  {
    auto out = open("corpus.tsv");
    for (const auto& doc : collection.corpus.documents()) out << doc.doc_id << '\t' << doc.text << '\n';
  }
  {
    auto out = open("queries.tsv");
    for (const auto& q : collection.queries) out << q.query_id << '\t' << q.text << '\n';
  }
  {
    auto out = open("qrels.txt");
    for (const auto& qid : collection.qrels.query_ids()) {
      const auto& judged = collection.qrels.judgments(qid);
      std::vector<std::pair<std::string, int>> sorted(judged.begin(), judged.end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [doc, grade] : sorted) out << qid << " 0 " << doc << ' ' << grade << '\n';
    }
  }
}

}  // namespace lexboost
