#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "lexboost/error.hpp"
#include "lexboost/fusion.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lexboost;
using Catch::Matchers::WithinAbs;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected lexboost::Error");
  return ErrorCode::Io;
}

DocIdTable numbered_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
  return DocIdTable(std::move(ids));
}

// Random valid graph: k distinct neighbours per document with strictly
// decreasing similarities.
CorpusGraph random_graph(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::vector<Neighbor>> lists(n);
  std::vector<DocOrdinal> others;
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(static_cast<DocOrdinal>(j));
    }
    std::shuffle(others.begin(), others.end(), rng);
    const std::size_t keep = std::min(k, n - 1);
    for (std::size_t r = 0; r < keep; ++r) lists[i].push_back({others[r], 1.0 - 0.01 * static_cast<double>(r)});
  }
  return CorpusGraph(numbered_ids(n), k, Similarity::Cosine, std::move(lists));
}

Run random_run(const CorpusGraph& graph, std::size_t size, std::mt19937_64& rng) {
  std::vector<DocOrdinal> docs(graph.num_docs());
  std::iota(docs.begin(), docs.end(), DocOrdinal{0});
  std::shuffle(docs.begin(), docs.end(), rng);
  std::uniform_real_distribution<double> score(-5.0, 20.0);
  Run run{"q", "BM25", {}};
  for (std::size_t i = 0; i < size; ++i) run.docs.push_back({graph.doc_ids().id(docs[i]), score(rng), docs[i]});
  sort_ranked(run.docs);
  return run;
}

std::map<std::string, double> as_map(const Run& run) {
  std::map<std::string, double> m;
  for (const auto& d : run.docs) m[d.doc_id] = d.score;
  return m;
}

std::map<std::string, std::vector<std::string>> neighbour_ids(const CorpusGraph& graph) {
  std::map<std::string, std::vector<std::string>> m;
  for (DocOrdinal d = 0; d < graph.num_docs(); ++d) {
    for (const auto& nb : graph.neighbors(d)) m[graph.doc_ids().id(d)].push_back(graph.doc_ids().id(nb.doc));
  }
  return m;
}

}  // namespace

TEST_CASE("worked examples", "[fusion]") {
  // Document x with neighbours y1..y4 scoring 5, (absent), 3, 2.
  const DocIdTable ids({"x", "y1", "y2", "y3", "y4"});
  std::vector<std::vector<Neighbor>> lists{
      {{1, 0.9}, {2, 0.8}, {3, 0.7}, {4, 0.6}},
      {{0, 0.9}, {2, 0.5}, {3, 0.4}, {4, 0.3}},
      {{0, 0.8}, {1, 0.5}, {3, 0.4}, {4, 0.3}},
      {{0, 0.7}, {1, 0.4}, {2, 0.4}, {4, 0.3}},
      {{0, 0.6}, {1, 0.3}, {2, 0.3}, {3, 0.3}},
  };
  const CorpusGraph graph(ids, 4, Similarity::Cosine, lists);
  Run run{"q", "BM25", {{"x", 10.0}, {"y1", 5.0}, {"y3", 3.0}, {"y4", 2.0}}};

  const auto out = lexboost_rescore(run, graph, {0.7, 4, MissingPolicy::Zero});
  CHECK_THAT(as_map(out).at("x"), WithinAbs(7.75, 1e-12));
  CHECK(out.tag == "BM25+lexboost");
  CHECK(out.size() == run.size());

  // lambda = 0 is the plain neighbour mean: x's first two neighbours.
  Run two{"q", "BM25", {{"x", 1.0}, {"y1", 4.0}, {"y2", 6.0}}};
  CHECK_THAT(as_map(lexboost_rescore(two, graph, {0.0, 2, MissingPolicy::Zero})).at("x"), WithinAbs(5.0, 1e-12));
}

TEST_CASE("lambda = 1 returns the input run unchanged", "[fusion]") {
  std::mt19937_64 rng(3);
  const auto graph = random_graph(40, 8, rng);
  const auto run = random_run(graph, 25, rng);
  for (std::size_t n : {1u, 4u, 8u}) {
    const auto out = lexboost_rescore(run, graph, {1.0, n, MissingPolicy::Zero});
    CHECK(out.tag == run.tag);
    REQUIRE(out.size() == run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
      CHECK(out.docs[i].doc_id == run.docs[i].doc_id);
      CHECK(out.docs[i].score == run.docs[i].score);
    }
  }
}

TEST_CASE("fusion matches the oracle on random instances", "[fusion][oracle]") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size_dist(1, 60), k_dist(1, 16);
  std::uniform_real_distribution<double> lambda_dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_docs = 2 + size_dist(rng);
    const std::size_t k = k_dist(rng);
    const auto graph = random_graph(n_docs, k, rng);
    const auto run = random_run(graph, std::min(n_docs, size_dist(rng)), rng);
    std::uniform_int_distribution<std::size_t> n_dist(1, k);
    const FusionConfig cfg{trial % 10 == 0 ? 0.0 : lambda_dist(rng), n_dist(rng), MissingPolicy::Zero};

    FusionCounters counters;
    const auto out = lexboost_rescore(run, graph, cfg, nullptr, &counters);
    const auto want = oracle::fuse(as_map(run), neighbour_ids(graph), cfg.lambda, cfg.n,
                                   [](const std::string&) { return 0.0; });
    REQUIRE(out.size() == want.size());
    for (const auto& d : out.docs) CHECK_THAT(d.score, WithinAbs(want.at(d.doc_id), 1e-12));
    CHECK_NOTHROW(validate_run(out));

    const std::size_t used = std::min(cfg.n, n_docs - 1);
    CHECK(counters.lookups == run.size() * used);
    CHECK(counters.scorer_calls == 0);

    // The order of the candidate list does not matter.
    auto shuffled = run;
    std::shuffle(shuffled.docs.begin(), shuffled.docs.end(), rng);
    const auto again = lexboost_rescore(shuffled, graph, cfg);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(again.docs[i].doc_id == out.docs[i].doc_id);
      CHECK(again.docs[i].score == out.docs[i].score);
    }
  }
}

TEST_CASE("exact on-demand scoring of absent neighbours", "[fusion]") {
  const auto corpus = read_corpus_tsv(testing::data_dir() / "fixture" / "corpus.tsv");
  const auto index = build_index(corpus);
  const auto graph = build_graph(embed_tfidf(index), index.doc_ids, 16);
  const auto queries = read_queries_tsv(testing::data_dir() / "fixture" / "queries.tsv");

  for (const auto& model : {ScoringModel::bm25(), ScoringModel::qld()}) {
    for (const auto& q : queries) {
      const auto run = retrieve(q, model, index, 10);
      const ScorerContext ctx{&q, &model, &index};
      FusionCounters counters;
      const auto out = lexboost_rescore(run, graph, {0.5, 8, MissingPolicy::ExactOnDemand}, &ctx, &counters);
      const auto want = oracle::fuse(as_map(run), neighbour_ids(graph), 0.5, 8, [&](const std::string& id) {
        return score_document(q, *index.doc_ids.ordinal_of(id), model, index);
      });
      for (const auto& d : out.docs) CHECK_THAT(d.score, WithinAbs(want.at(d.doc_id), 1e-12));
      CHECK(counters.lookups == run.size() * 8);
      CHECK(counters.scorer_calls > 0);
      CHECK(counters.scorer_calls <= counters.lookups);
    }
  }
  CHECK(code_of([&] {
          lexboost_rescore(retrieve(queries[0], ScoringModel::bm25(), index), graph,
                           {0.5, 8, MissingPolicy::ExactOnDemand});
        }) == ErrorCode::InvalidParameter);
}

TEST_CASE("fusion input errors", "[fusion]") {
  std::mt19937_64 rng(1);
  const auto graph = random_graph(10, 4, rng);
  const auto run = random_run(graph, 5, rng);
  CHECK(code_of([&] { lexboost_rescore(run, graph, {0.7, 5, MissingPolicy::Zero}); }) ==
        ErrorCode::NeighborCountExceedsGraph);
  CHECK(code_of([&] { lexboost_rescore(run, graph, {1.5, 2, MissingPolicy::Zero}); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { lexboost_rescore(run, graph, {-0.1, 2, MissingPolicy::Zero}); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { lexboost_rescore(run, graph, {0.5, 0, MissingPolicy::Zero}); }) == ErrorCode::InvalidParameter);

  Run foreign{"q", "BM25", {{"not-in-corpus", 1.0}}};
  CHECK(code_of([&] { lexboost_rescore(foreign, graph, {0.5, 2, MissingPolicy::Zero}); }) ==
        ErrorCode::UnknownDocument);

  // Ordinals are resolved from ids when a run comes without them.
  auto bare = run;
  for (auto& d : bare.docs) d.ordinal = kNoOrdinal;
  const auto a = lexboost_rescore(bare, graph, {0.5, 2, MissingPolicy::Zero});
  const auto b = lexboost_rescore(run, graph, {0.5, 2, MissingPolicy::Zero});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.docs[i].score == b.docs[i].score);

  CHECK(parse_missing_policy("exact_on_demand") == MissingPolicy::ExactOnDemand);
  CHECK(parse_missing_policy("zero") == MissingPolicy::Zero);
  CHECK(code_of([] { parse_missing_policy("mean"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("embedding re-rank", "[fusion][rerank]") {
  EmbeddingMatrix emb;
  emb.vectors.resize(4, 2);
  emb.vectors << 1, 0, 0, 1, 1, 1, 0, 2;
  Run run{"q", "BM25", {{"a", 9, 0}, {"b", 8, 1}, {"c", 7, 2}, {"d", 6, 3}}};
  Vector<double> qv(2);
  qv << 0, 1;

  const auto all = rerank_with_embeddings(run, qv, emb);
  CHECK(all.tag == "BM25+rerank");
  // b and d tie at cosine 1 and keep their input order.
  CHECK(all.docs[0].doc_id == "b");
  CHECK(all.docs[1].doc_id == "d");
  CHECK(all.docs[2].doc_id == "c");
  CHECK(all.docs[3].doc_id == "a");

  const auto head = rerank_with_embeddings(run, qv, emb, 2);
  CHECK(head.docs[0].doc_id == "b");
  CHECK(head.docs[1].doc_id == "a");
  CHECK(head.docs[2].doc_id == "c");
  CHECK(head.docs[2].score == head.docs[1].score - 1.0);
  CHECK(head.docs[3].score == head.docs[1].score - 2.0);
  CHECK_NOTHROW(validate_run(head));

  Vector<double> bad(3);
  bad << 1, 0, 0;
  CHECK(code_of([&] { rerank_with_embeddings(run, bad, emb); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { rerank_with_embeddings(run, qv, emb, 0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("pipeline stages and tags", "[fusion][pipeline]") {
  const auto corpus = read_corpus_tsv(testing::data_dir() / "fixture" / "corpus.tsv");
  const auto index = build_index(corpus);
  const auto emb = embed_tfidf(index);
  const auto graph = build_graph(emb, index.doc_ids, 16);
  const auto q = read_queries_tsv(testing::data_dir() / "fixture" / "queries.tsv").at(0);
  const auto qv = embed_query_tfidf(q, index);

  PipelineSpec spec;
  spec.model = ScoringModel::pl2();
  CHECK(run_pipeline(q, spec, index).tag == "pl2");

  spec.lexboost = LexBoostStage{&graph, {0.7, 8, MissingPolicy::Zero}};
  FusionCounters counters;
  const auto boosted = run_pipeline(q, spec, index, nullptr, &counters);
  CHECK(boosted.tag == "pl2+lexboost");
  CHECK(counters.lookups == boosted.size() * 8);

  spec.rerank = RerankStage{&emb, 1000};
  CHECK(run_pipeline(q, spec, index, &qv).tag == "pl2+lexboost+rerank");
  CHECK(code_of([&] { run_pipeline(q, spec, index); }) == ErrorCode::InvalidParameter);

  spec.lexboost->config.lambda = 1.0;
  spec.rerank.reset();
  const auto identity = run_pipeline(q, spec, index);
  const auto baseline = retrieve(q, spec.model, index);
  CHECK(identity.tag == "pl2");
  REQUIRE(identity.size() == baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) CHECK(identity.docs[i].score == baseline.docs[i].score);
}
