#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexboost/evaluation.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost {

/// Topic-clustered toy collection. Every document belongs to one topic and
/// one of its subtopics; its tokens mix the topic's general words, its
/// subtopic's words, off-topic noise and shared background words. Adjacent
/// topics share part of their general vocabulary. Queries are held out (not
/// documents) and target a subtopic: documents of that subtopic are relevant
/// (grade 2 when topic-focused, else 1); the rest of the topic is judged 0
/// along with a sample of off-topic documents.
struct SyntheticConfig {
  std::size_t topics = 10;
  std::size_t docs_per_topic = 100;
  std::size_t queries = 20;
  std::size_t topic_vocabulary = 30;  // general words per topic
  std::size_t shared_with_next_topic = 6;
  std::size_t subtopics = 4;
  std::size_t subtopic_vocabulary = 6;
  double subtopic_share = 0.2;  // fraction of on-topic tokens drawn from the subtopic words
  std::size_t background_vocabulary = 300;
  std::size_t min_doc_length = 20;
  std::size_t max_doc_length = 60;
  std::size_t query_length = 3;
  double min_purity = 0.15;
  double max_purity = 0.6;
  double focused_purity = 0.35;    // purity at or above which a document is grade 2
  double off_topic_noise = 0.05;   // probability a token comes from a random other topic
  std::size_t judged_negatives = 30;  // off-topic documents judged 0 per query
  std::uint64_t seed = 42;
};

struct SyntheticQuery {
  std::string query_id;
  std::string text;
  std::size_t topic = 0;
  std::size_t subtopic = 0;
};

struct SyntheticCollection {
  Corpus corpus;
  std::vector<std::size_t> doc_topics;
  std::vector<std::size_t> doc_subtopics;
  std::vector<SyntheticQuery> queries;
  Qrels qrels;
};

/// Deterministic for a given config (portable: uses only mt19937_64 output).
SyntheticCollection generate_synthetic(const SyntheticConfig& config);

/// Writes corpus.tsv, queries.tsv and qrels.txt into `dir`.
void write_synthetic(const SyntheticCollection& collection, const std::filesystem::path& dir);

}  // namespace lexboost
