#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "lexboost/corpus_graph.hpp"
#include "lexboost/error.hpp"
#include "lexboost/evaluation.hpp"
#include "lexboost/fusion.hpp"
#include "lexboost/significance.hpp"
#include "lexboost/sweep.hpp"
#include "lexboost/synthetic.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost::cli {

namespace {

constexpr std::string_view kBuiltinTfidf = "builtin-tfidf";

// Flag combination rejected before any work is done.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelOptions {
  std::string name = "bm25";
  double k1 = 1.2;
  double b = 0.75;
  double c = 1.0;
  double mu = 1000.0;
  CLI::Option* k1_opt = nullptr;
  CLI::Option* b_opt = nullptr;
  CLI::Option* c_opt = nullptr;
  CLI::Option* mu_opt = nullptr;

  void add(CLI::App& app) {
    app.add_option("--model", name, "Lexical model: bm25, pl2, dph, qld")->envname("LEXBOOST_MODEL")->capture_default_str();
    k1_opt = app.add_option("--k1", k1, "BM25 k1")->envname("LEXBOOST_K1")->capture_default_str();
    b_opt = app.add_option("--b", b, "BM25 b")->envname("LEXBOOST_B")->capture_default_str();
    c_opt = app.add_option("--c", c, "PL2 c")->envname("LEXBOOST_C")->capture_default_str();
    mu_opt = app.add_option("--mu", mu, "QLD Dirichlet mu")->envname("LEXBOOST_MU")->capture_default_str();
  }

  ScoringModel build() const {
    const auto kind = parse_model_kind(name);
    auto reject = [&](const CLI::Option* opt, ModelKind owner) {
      if (opt->count() > 0 && kind != owner) {
        throw UsageError(opt->get_name() + " does not apply to model " + std::string(to_string(kind)));
      }
    };
    reject(k1_opt, ModelKind::BM25);
    reject(b_opt, ModelKind::BM25);
    reject(c_opt, ModelKind::PL2);
    reject(mu_opt, ModelKind::QLD);
    switch (kind) {
      case ModelKind::BM25: return ScoringModel::bm25(k1, b);
      case ModelKind::PL2: return ScoringModel::pl2(c);
      case ModelKind::DPH: return ScoringModel::dph();
      case ModelKind::QLD: return ScoringModel::qld(mu);
    }
    return ScoringModel::bm25();
  }
};

struct RerankOptions {
  std::string embeddings;
  std::string query_embeddings;
  std::size_t top_k = 1000;

  void add(CLI::App& app) {
    app.add_option("--rerank-embeddings", embeddings,
                   "Enable the re-rank stage with these document embeddings (path or builtin-tfidf)");
    app.add_option("--query-embeddings", query_embeddings, "Query vectors for --rerank-embeddings <path>");
    app.add_option("--rerank-top-k", top_k, "Documents re-scored by the re-rank stage")
        ->envname("LEXBOOST_RERANK_TOP_K")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  bool enabled() const { return !embeddings.empty(); }
};

// Loaded re-rank inputs.
struct RerankData {
  EmbeddingMatrix embeddings;
  std::unordered_map<std::string, Vector<double>> query_vectors;
};

std::unique_ptr<RerankData> load_rerank(const RerankOptions& opts, const Index& index, std::span<const Query> queries) {
  if (!opts.enabled()) {
    if (!opts.query_embeddings.empty()) throw UsageError("--query-embeddings needs --rerank-embeddings");
    return nullptr;
  }
  auto data = std::make_unique<RerankData>();
  if (opts.embeddings == kBuiltinTfidf) {
    if (!opts.query_embeddings.empty()) throw UsageError("--query-embeddings is not used with builtin-tfidf");
    data->embeddings = embed_tfidf(index);
    for (const auto& q : queries) data->query_vectors.emplace(q.query_id, embed_query_tfidf(q, index));
  } else {
    if (opts.query_embeddings.empty()) throw UsageError("--rerank-embeddings <path> needs --query-embeddings");
    data->embeddings = ingest_embeddings(opts.embeddings, index.doc_ids);
    data->query_vectors = read_vectors(opts.query_embeddings);
    for (const auto& q : queries) {
      auto it = data->query_vectors.find(q.query_id);
      if (it == data->query_vectors.end()) throw Error(ErrorCode::MissingEmbedding, "missing query vector for " + q.query_id);
      if (it->second.size() != data->embeddings.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "query vector dim differs from document embeddings for " + q.query_id);
      }
    }
  }
  return data;
}

CorpusGraph load_graph_for(const std::string& path, const Index& index) {
  auto graph = load_graph(path);
  if (!(graph.doc_ids() == index.doc_ids)) {
    throw Error(ErrorCode::UnknownDocument, "graph " + path + " was built for a different corpus than the index");
  }
  return graph;
}

std::set<std::string, std::less<>> read_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path);
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : tokenize(line)) words.insert(std::move(t));
  }
  return words;
}

template <typename T>
std::vector<T> parse_list(const std::string& csv, const char* what) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("bad value in ") + what + ": " + item);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

// ---------------------------------------------------------------------------

struct IndexCommand {
  std::string corpus;
  std::string out_path;
  std::string stopwords;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("index", "Build and persist the inverted + forward index");
    cmd->add_option("--corpus", corpus, "Corpus: <doc_id>\\t<text> lines, or JSON lines (.jsonl) with id/contents")->required();
    cmd->add_option("--out", out_path, "Index output path")->required();
    cmd->add_option("--stopwords", stopwords, "Optional stopword list (one or more words per line)");
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out) const {
    TokenizerConfig tokenizer;
    if (!stopwords.empty()) tokenizer.stopwords = read_stopwords(stopwords);
    auto index = build_index(read_corpus(corpus), std::move(tokenizer));
    save_index(index, out_path);
    out << "N=" << index.num_docs() << " vocabulary=" << index.inverted.vocabulary_size() << " avgdl="
        << std::setprecision(6) << index.inverted.avg_doc_length() << '\n';
    return kSuccess;
  }

  bool selected = false;
};

struct GraphCommand {
  std::string index_path;
  std::string embeddings;
  std::string out_path;
  std::size_t k = 16;
  std::string similarity = "cosine";
  unsigned threads = 0;

  void add(CLI::App& app) {
    auto* graph = app.add_subcommand("graph", "Corpus graph operations");
    graph->require_subcommand(1);
    auto* cmd = graph->add_subcommand("build", "Exact brute-force k-NN corpus graph");
    cmd->add_option("--index", index_path, "Index built by `lexboost index` (supplies the document table)")->required();
    cmd->add_option("--embeddings", embeddings, "Document embeddings (JSON lines or binary) or builtin-tfidf")->required();
    cmd->add_option("--out", out_path, "Graph output path")->required();
    cmd->add_option("--k", k, "Neighbours stored per document")->envname("LEXBOOST_K")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--similarity", similarity, "cosine or dot")->capture_default_str()->check(CLI::IsMember({"cosine", "dot"}));
    cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out) const {
    auto index = load_index(index_path);
    auto emb = embeddings == kBuiltinTfidf ? embed_tfidf(index) : ingest_embeddings(embeddings, index.doc_ids);
    auto sim = similarity == "dot" ? Similarity::Dot : Similarity::Cosine;
    auto graph = build_graph(emb, index.doc_ids, k, sim, threads);
    save_graph(graph, out_path);
    out << "N=" << graph.num_docs() << " k=" << graph.k() << " dim=" << emb.dim() << '\n';
    return kSuccess;
  }

  bool selected = false;
};

struct RunCommand {
  std::string index_path;
  std::string queries_path;
  std::string out_path;
  std::string graph_path;
  std::string tag;
  double lambda = 0.7;
  std::size_t n = 16;
  std::string missing = "zero";
  std::size_t cutoff = 1000;
  ModelOptions model;
  RerankOptions rerank;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  CLI::Option* missing_opt = nullptr;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "Retrieve -> [LexBoost] -> [re-rank] for a query file");
    cmd->add_option("--index", index_path, "Index path")->required();
    cmd->add_option("--queries", queries_path, "Queries: <qid>\\t<text> lines")->required();
    cmd->add_option("--out", out_path, "TREC run output path")->required();
    cmd->add_option("--graph", graph_path, "Corpus graph; enables the LexBoost stage");
    cmd->add_option("--tag", tag, "Run tag (default: the stage chain, e.g. bm25+lexboost)");
    lambda_opt = cmd->add_option("--lambda", lambda, "Weight of the document's own score")
                     ->envname("LEXBOOST_LAMBDA")
                     ->capture_default_str()
                     ->check(CLI::Range(0.0, 1.0));
    n_opt = cmd->add_option("--n", n, "Neighbours used per document")->envname("LEXBOOST_N")->capture_default_str()->check(CLI::PositiveNumber);
    missing_opt = cmd->add_option("--missing", missing, "Neighbours outside the run: zero or exact")
                      ->envname("LEXBOOST_MISSING")
                      ->capture_default_str()
                      ->check(CLI::IsMember({"zero", "exact", "exact_on_demand"}));
    cmd->add_option("--cutoff", cutoff, "First-stage depth")->envname("LEXBOOST_CUTOFF")->capture_default_str()->check(CLI::PositiveNumber);
    model.add(*cmd);
    rerank.add(*cmd);
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out) const {
    if (graph_path.empty()) {
      for (auto* opt : {lambda_opt, n_opt, missing_opt}) {
        const bool from_env = std::getenv(opt->get_envname().c_str()) != nullptr;
        if (opt->count() > 0 && !from_env) throw UsageError(opt->get_name() + " needs --graph");
      }
    }
    auto scoring = model.build();
    auto index = load_index(index_path);
    auto queries = read_queries_tsv(queries_path, index.tokenizer);

    PipelineSpec spec;
    spec.model = scoring;
    spec.cutoff = cutoff;
    std::optional<CorpusGraph> graph;
    if (!graph_path.empty()) {
      graph = load_graph_for(graph_path, index);
      FusionConfig cfg{lambda, n, parse_missing_policy(missing)};
      try {
        cfg.validate(*graph);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      spec.lexboost = LexBoostStage{&*graph, cfg};
    }
    auto rerank_data = load_rerank(rerank, index, queries);
    if (rerank_data) spec.rerank = RerankStage{&rerank_data->embeddings, rerank.top_k};

    std::vector<Run> runs;
    runs.reserve(queries.size());
    FusionCounters counters;
    for (const auto& q : queries) {
      const Vector<double>* qv = rerank_data ? &rerank_data->query_vectors.at(q.query_id) : nullptr;
      runs.push_back(run_pipeline(q, spec, index, qv, &counters));
      if (!tag.empty()) runs.back().tag = tag;
    }
    write_run(runs, out_path);
    out << "queries=" << runs.size() << " lookups=" << counters.lookups << " scorer_calls=" << counters.scorer_calls
        << '\n';
    return kSuccess;
  }

  bool selected = false;
};

struct EvalCommand {
  std::string run_path;
  std::string qrels_path;
  std::string metrics = "map,ndcg@10,ndcg@100,ndcg@1000,recall2@1000";
  std::string compare_path;
  std::string gain = "linear";
  int rel_threshold = 1;
  bool per_query = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Effectiveness metrics of a TREC run");
    cmd->add_option("--run", run_path, "TREC run file")->required();
    cmd->add_option("--qrels", qrels_path, "TREC qrels file")->required();
    cmd->add_option("--metrics", metrics, "Comma-separated: map, ndcg@K, recall@K, recallT@K")->capture_default_str();
    cmd->add_option("--rel-threshold", rel_threshold, "Grade counted relevant by MAP")
        ->envname("LEXBOOST_REL_THRESHOLD")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gain", gain, "nDCG gain: linear or exponential")->capture_default_str()->check(CLI::IsMember({"linear", "exponential"}));
    cmd->add_option("--compare", compare_path, "Baseline run: adds a paired t-test per metric");
    cmd->add_flag("--per-query", per_query, "Also print per-query values");
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out, std::ostream& err) const {
    auto specs = parse_metrics(metrics, rel_threshold);
    std::vector<std::string> warnings;
    auto qrels = load_qrels(qrels_path, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    auto runs = load_run(run_path);
    for (const auto& r : runs) validate_run(r);
    const Gain g = gain == "exponential" ? Gain::Exponential : Gain::Linear;
    auto report = evaluate(runs, qrels, specs, g);
    write_report(report, out, per_query);
    if (!compare_path.empty()) {
      auto base_runs = load_run(compare_path);
      auto base = evaluate(base_runs, qrels, specs, g);
      for (std::size_t m = 0; m < specs.size(); ++m) {
        auto [a, b] = align_by_query(report.metrics[m].per_query, base.metrics[m].per_query);
        if (a.size() < 2) continue;
        auto t = paired_t_test(a, b);
        out << specs[m].name << "\tt_vs_baseline\t" << std::setprecision(6) << t.t << '\n';
        out << specs[m].name << "\tp_vs_baseline\t" << std::setprecision(6) << t.p << '\n';
      }
    }
    return kSuccess;
  }

  bool selected = false;
};

struct SweepCommand {
  std::string index_path;
  std::string graph_path;
  std::string queries_path;
  std::string qrels_path;
  std::string out_path;
  std::string lambdas;
  std::string ns = "2,4,8,16";
  std::string metrics = "map,ndcg@10,ndcg@100,ndcg@1000,recall2@1000";
  std::string missing = "zero";
  std::string gain = "linear";
  int rel_threshold = 1;
  std::size_t cutoff = 1000;
  ModelOptions model;
  RerankOptions rerank;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "Lambda x n grid against the lambda = 1 baseline, as CSV");
    cmd->add_option("--index", index_path, "Index path")->required();
    cmd->add_option("--graph", graph_path, "Corpus graph")->required();
    cmd->add_option("--queries", queries_path, "Queries: <qid>\\t<text> lines")->required();
    cmd->add_option("--qrels", qrels_path, "TREC qrels file")->required();
    cmd->add_option("--out", out_path, "CSV output path (lambda,n,metric,value,p_vs_baseline)")->required();
    cmd->add_option("--lambdas", lambdas, "Comma-separated lambda grid (default 0, 0.05, ..., 1)");
    cmd->add_option("--ns", ns, "Comma-separated neighbour counts")->capture_default_str();
    cmd->add_option("--metrics", metrics, "Comma-separated metrics")->capture_default_str();
    cmd->add_option("--missing", missing, "zero or exact")
        ->envname("LEXBOOST_MISSING")
        ->capture_default_str()
        ->check(CLI::IsMember({"zero", "exact", "exact_on_demand"}));
    cmd->add_option("--gain", gain, "nDCG gain: linear or exponential")->capture_default_str()->check(CLI::IsMember({"linear", "exponential"}));
    cmd->add_option("--rel-threshold", rel_threshold, "Grade counted relevant by MAP")
        ->envname("LEXBOOST_REL_THRESHOLD")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cutoff", cutoff, "First-stage depth")->envname("LEXBOOST_CUTOFF")->capture_default_str()->check(CLI::PositiveNumber);
    model.add(*cmd);
    rerank.add(*cmd);
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out) const {
    SweepSpec spec;
    spec.pipeline.model = model.build();
    spec.pipeline.cutoff = cutoff;
    spec.metrics = parse_metrics(metrics, rel_threshold);
    spec.gain = gain == "exponential" ? Gain::Exponential : Gain::Linear;
    if (!lambdas.empty()) spec.lambdas = parse_list<double>(lambdas, "--lambdas");
    spec.neighbor_counts = parse_list<std::size_t>(ns, "--ns");
    for (double l : spec.lambdas) {
      if (!(l >= 0.0 && l <= 1.0)) throw UsageError("--lambdas values must be in [0, 1]");
    }

    auto index = load_index(index_path);
    auto graph = load_graph_for(graph_path, index);
    for (auto n : spec.neighbor_counts) {
      if (n == 0 || n > graph.k()) {
        throw UsageError("--ns value " + std::to_string(n) + " exceeds the graph's k=" + std::to_string(graph.k()));
      }
    }
    spec.pipeline.lexboost = LexBoostStage{&graph, FusionConfig{1.0, 1, parse_missing_policy(missing)}};
    auto queries = read_queries_tsv(queries_path, index.tokenizer);
    auto qrels = load_qrels(qrels_path);
    auto rerank_data = load_rerank(rerank, index, queries);
    if (rerank_data) spec.pipeline.rerank = RerankStage{&rerank_data->embeddings, rerank.top_k};

    auto rows = sweep(queries, spec, index, qrels, rerank_data ? &rerank_data->query_vectors : nullptr);
    std::ofstream csv(out_path, std::ios::trunc);
    if (!csv) throw Error(ErrorCode::Io, "cannot open for writing: " + out_path);
    write_sweep_csv(rows, csv);

    for (const auto& m : spec.metrics) {
      if (auto best = best_cell(rows, m.name)) {
        out << m.name << " best lambda=" << std::fixed << std::setprecision(2) << best->lambda << " n=" << best->n
            << " value=" << std::setprecision(4) << best->value << '\n';
      }
    }
    return kSuccess;
  }

  bool selected = false;
};

struct SynthCommand {
  std::string out_dir;
  SyntheticConfig config;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate a seeded topic-clustered corpus, queries and qrels");
    cmd->add_option("--out-dir", out_dir, "Directory for corpus.tsv, queries.tsv, qrels.txt")->required();
    cmd->add_option("--seed", config.seed, "Random seed")->envname("LEXBOOST_SEED")->capture_default_str();
    cmd->add_option("--topics", config.topics, "Number of topics")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--docs-per-topic", config.docs_per_topic, "Documents per topic")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--queries", config.queries, "Number of queries")->capture_default_str();
    cmd->callback([this] { selected = true; });
  }

  int run(std::ostream& out) const {
    auto collection = generate_synthetic(config);
    write_synthetic(collection, out_dir);
    out << "docs=" << collection.corpus.size() << " queries=" << collection.queries.size() << '\n';
    return kSuccess;
  }

  bool selected = false;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::UnknownModel:
    case ErrorCode::NeighborCountExceedsGraph:
      return kUsage;
    default:
      return kDataError;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LexBoost: lexical retrieval boosted by corpus-graph neighbour scores", "lexboost"};
  app.require_subcommand(1);
  app.fallthrough(false);

  IndexCommand index_cmd;
  GraphCommand graph_cmd;
  RunCommand run_cmd;
  EvalCommand eval_cmd;
  SweepCommand sweep_cmd;
  SynthCommand synth_cmd;
  index_cmd.add(app);
  graph_cmd.add(app);
  run_cmd.add(app);
  eval_cmd.add(app);
  sweep_cmd.add(app);
  synth_cmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (index_cmd.selected) return index_cmd.run(out);
    if (graph_cmd.selected) return graph_cmd.run(out);
    if (run_cmd.selected) return run_cmd.run(out);
    if (eval_cmd.selected) return eval_cmd.run(out, err);
    if (sweep_cmd.selected) return sweep_cmd.run(out);
    if (synth_cmd.selected) return synth_cmd.run(out);
    err << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace lexboost::cli
