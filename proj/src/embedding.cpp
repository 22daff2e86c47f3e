#include "lexboost/embedding.hpp"

#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "binary_io.hpp"
#include "lexboost/error.hpp"

namespace lexboost {

namespace {

constexpr std::string_view kEmbeddingMagic = "LBEM";
constexpr std::uint32_t kEmbeddingVersion = 1;

// Weighted sparse row -> unit vector, falling back to uniform weights over
// the row's terms when every weight is zero.
template <typename Row>
void normalize_or_uniform(Row&& row, const std::vector<Eigen::Index>& term_columns) {
  const double norm = row.norm();
  if (norm > 0.0) {
    row /= norm;
  } else if (!term_columns.empty()) {
    const double w = 1.0 / std::sqrt(static_cast<double>(term_columns.size()));
    for (auto c : term_columns) row[c] = w;
  }
}

struct RawVectors {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::optional<std::size_t> dim;
};

void check_row(const std::string& id, const std::vector<double>& v, RawVectors& raw, const std::string& where) {
  if (raw.dim && *raw.dim != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, where + ": vector for " + id + " has dim " +
                                                  std::to_string(v.size()) + ", expected " +
                                                  std::to_string(*raw.dim));
  }
  if (v.empty()) throw Error(ErrorCode::DimensionMismatch, where + ": empty vector for " + id);
  raw.dim = v.size();
  bool nonzero = false;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::MalformedInput, where + ": non-finite value for " + id);
    nonzero = nonzero || x != 0.0;
  }
  if (!nonzero) throw Error(ErrorCode::ZeroVector, where + ": zero vector for " + id);
}

RawVectors read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path.string());
  RawVectors raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedInput, where + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("vector") || !record["vector"].is_array()) {
      throw Error(ErrorCode::MalformedInput, where + ": expected {\"id\": string, \"vector\": [numbers]}");
    }
    std::vector<double> v;
    v.reserve(record["vector"].size());
    for (const auto& x : record["vector"]) {
      if (!x.is_number()) throw Error(ErrorCode::MalformedInput, where + ": non-numeric vector component");
      v.push_back(x.get<double>());
    }
    auto id = record["id"].get<std::string>();
    check_row(id, v, raw, where);
    raw.ids.push_back(std::move(id));
    raw.rows.push_back(std::move(v));
  }
  return raw;
}

RawVectors read_binary(std::vector<char> bytes, const std::filesystem::path& path) {
  detail::BinaryReader r(std::move(bytes), ErrorCode::MalformedInput);
  r.bytes(kEmbeddingMagic.size());
  auto version = r.u32();
  if (version != kEmbeddingVersion) {
    throw Error(ErrorCode::VersionMismatch, path.string() + ": embedding format version " + std::to_string(version));
  }
  auto n = r.u64();
  auto dim = r.u32();
  r.require_elements(n, 4);
  RawVectors raw;
  raw.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) raw.ids.push_back(r.str());
  if (dim != 0) r.require_elements(n, std::size_t{4} * dim);
  raw.rows.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = r.f32();
    check_row(raw.ids[i], v, raw, path.string());
    raw.rows.push_back(std::move(v));
  }
  if (!r.at_end()) r.fail(path.string() + ": trailing bytes in embedding file");
  return raw;
}

RawVectors read_any(const std::filesystem::path& path) {
  auto bytes = detail::BinaryReader::slurp(path);
  if (bytes.size() >= kEmbeddingMagic.size() &&
      std::string_view(bytes.data(), kEmbeddingMagic.size()) == kEmbeddingMagic) {
    return read_binary(std::move(bytes), path);
  }
  return read_jsonl(path);
}

}  // namespace

EmbeddingMatrix embed_tfidf(const Index& index) {
  const auto& inv = index.inverted;
  const auto n = static_cast<double>(inv.num_docs());
  EmbeddingMatrix emb;
  emb.source = EmbeddingSource::TfidfBuiltin;
  emb.vectors = RowMatrix<double>::Zero(static_cast<Eigen::Index>(inv.num_docs()),
                                        static_cast<Eigen::Index>(inv.vocabulary_size()));
  std::vector<Eigen::Index> columns;
  for (DocOrdinal d = 0; d < inv.num_docs(); ++d) {
    auto row = emb.vectors.row(d);
    columns.clear();
    for (const auto& tc : index.forward.terms(d)) {
      row[tc.term] = tc.tf * std::log(n / inv.doc_freq(tc.term));
      columns.push_back(tc.term);
    }
    normalize_or_uniform(row, columns);
  }
  return emb;
}

Vector<double> embed_query_tfidf(const Query& query, const Index& index) {
  const auto& inv = index.inverted;
  const auto n = static_cast<double>(inv.num_docs());
  Vector<double> v = Vector<double>::Zero(static_cast<Eigen::Index>(inv.vocabulary_size()));
  std::map<TermId, std::uint32_t> counts;
  for (const auto& t : query.terms) {
    if (auto id = inv.term_id(t)) ++counts[*id];
  }
  std::vector<Eigen::Index> columns;
  for (auto [id, qtf] : counts) {
    v[id] = qtf * std::log(n / inv.doc_freq(id));
    columns.push_back(id);
  }
  normalize_or_uniform(v, columns);
  return v;
}

EmbeddingMatrix ingest_embeddings(const std::filesystem::path& path, const DocIdTable& ids) {
  auto raw = read_any(path);
  std::vector<std::ptrdiff_t> row_of(ids.size(), -1);
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    auto ordinal = ids.ordinal_of(raw.ids[i]);
    if (!ordinal) continue;
    if (row_of[*ordinal] != -1) throw Error(ErrorCode::DuplicateId, path.string() + ": duplicate embedding for id " + raw.ids[i]);
    row_of[*ordinal] = static_cast<std::ptrdiff_t>(i);
  }
  for (DocOrdinal d = 0; d < ids.size(); ++d) {
    if (row_of[d] == -1) throw Error(ErrorCode::MissingEmbedding, "missing embedding for id " + ids.id(d));
  }
  EmbeddingMatrix emb;
  emb.source = EmbeddingSource::Ingested;
  emb.vectors.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(raw.dim.value_or(0)));
  for (DocOrdinal d = 0; d < ids.size(); ++d) {
    const auto& src = raw.rows[static_cast<std::size_t>(row_of[d])];
    emb.vectors.row(d) = Eigen::Map<const Vector<double>>(src.data(), static_cast<Eigen::Index>(src.size())).transpose();
  }
  return emb;
}

std::unordered_map<std::string, Vector<double>> read_vectors(const std::filesystem::path& path) {
  auto raw = read_any(path);
  std::unordered_map<std::string, Vector<double>> out;
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    const auto& src = raw.rows[i];
    Vector<double> v = Eigen::Map<const Vector<double>>(src.data(), static_cast<Eigen::Index>(src.size()));
    if (!out.emplace(raw.ids[i], std::move(v)).second) {
      throw Error(ErrorCode::DuplicateId, path.string() + ": duplicate vector for id " + raw.ids[i]);
    }
  }
  return out;
}

void save_embeddings_binary(const std::filesystem::path& path, const DocIdTable& ids, const EmbeddingMatrix& emb) {
  if (static_cast<std::size_t>(emb.rows()) != ids.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding rows do not match the document table");
  }
  detail::BinaryWriter w;
  w.bytes(kEmbeddingMagic);
  w.u32(kEmbeddingVersion);
  w.u64(ids.size());
  w.u32(static_cast<std::uint32_t>(emb.dim()));
  for (const auto& id : ids.ids()) w.str(id);
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.dim(); ++j) w.f32(static_cast<float>(emb.vectors(i, j)));
  }
  w.write_file(path);
}

void save_embeddings_jsonl(const std::filesystem::path& path, const DocIdTable& ids, const EmbeddingMatrix& emb) {
  if (static_cast<std::size_t>(emb.rows()) != ids.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding rows do not match the document table");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  for (DocOrdinal d = 0; d < ids.size(); ++d) {
    const auto row = emb.row(d);
    nlohmann::json record{{"id", ids.id(d)}, {"vector", std::vector<double>(row.begin(), row.end())}};
    out << record.dump() << '\n';
  }
}

}  // namespace lexboost
