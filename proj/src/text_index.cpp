#include "lexboost/text_index.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "lexboost/error.hpp"

namespace lexboost {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyCorpus: return "empty corpus";
    case ErrorCode::DuplicateId: return "duplicate id";
    case ErrorCode::EmptyDocument: return "empty document";
    case ErrorCode::CorruptIndex: return "corrupt index";
    case ErrorCode::VersionMismatch: return "version mismatch";
    case ErrorCode::InvalidParameter: return "invalid parameter";
    case ErrorCode::UnknownModel: return "unknown model";
    case ErrorCode::MissingEmbedding: return "missing embedding";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::ZeroVector: return "zero vector";
    case ErrorCode::CorpusTooSmall: return "corpus too small";
    case ErrorCode::CorruptGraph: return "corrupt graph";
    case ErrorCode::NeighborCountExceedsGraph: return "neighbor count exceeds graph";
    case ErrorCode::UnknownDocument: return "unknown document";
    case ErrorCode::MalformedInput: return "malformed input";
    case ErrorCode::LengthMismatch: return "length mismatch";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      if (!config.stopwords.contains(current)) tokens.push_back(current);
      current.clear();
    }
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(ascii_lower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<Document> documents) {
  documents_.reserve(documents.size());
  for (auto& doc : documents) add(std::move(doc));
}

void Corpus::add(Document doc) {
  if (doc.doc_id.empty()) throw Error(ErrorCode::MalformedInput, "document with empty id");
  auto ordinal = static_cast<DocOrdinal>(documents_.size());
  auto [it, inserted] = id_to_ordinal_.emplace(doc.doc_id, ordinal);
  if (!inserted) throw Error(ErrorCode::DuplicateId, "duplicate id: " + doc.doc_id);
  documents_.push_back(std::move(doc));
}

std::optional<DocOrdinal> Corpus::ordinal_of(std::string_view doc_id) const {
  auto it = id_to_ordinal_.find(std::string(doc_id));
  if (it == id_to_ordinal_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "no such file: " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Corpus read_corpus_tsv(const std::filesystem::path& path) {
  auto in = open_text(path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::MalformedInput,
                  path.string() + ":" + std::to_string(line_no) + ": expected <doc_id>\\t<text>");
    }
    corpus.add({line.substr(0, tab), line.substr(tab + 1)});
  }
  return corpus;
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  auto in = open_text(path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedInput, where + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record.contains("contents") ||
        !record["id"].is_string() || !record["contents"].is_string()) {
      throw Error(ErrorCode::MalformedInput, where + ": expected string fields id, contents");
    }
    corpus.add({record["id"].get<std::string>(), record["contents"].get<std::string>()});
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return read_corpus_jsonl(path);
  return read_corpus_tsv(path);
}

// ---------------------------------------------------------------------------
// DocIdTable

DocIdTable::DocIdTable(std::vector<std::string> ids) : ids_(std::move(ids)) {
  lookup_.reserve(ids_.size());
  for (DocOrdinal i = 0; i < ids_.size(); ++i) {
    if (!lookup_.emplace(ids_[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id: " + ids_[i]);
    }
  }
}

std::optional<DocOrdinal> DocIdTable::ordinal_of(std::string_view doc_id) const {
  auto it = lookup_.find(std::string(doc_id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// InvertedIndex / ForwardIndex

std::optional<TermId> InvertedIndex::term_id(std::string_view term) const {
  auto it = lexicon_.find(std::string(term));
  if (it == lexicon_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t InvertedIndex::doc_freq(std::string_view term) const {
  auto id = term_id(term);
  return id ? doc_freq(*id) : 0;
}

std::uint64_t InvertedIndex::collection_freq(std::string_view term) const {
  auto id = term_id(term);
  return id ? collection_freq(*id) : 0;
}

void InvertedIndex::finalize() {
  lexicon_.clear();
  lexicon_.reserve(terms_.size());
  for (TermId i = 0; i < terms_.size(); ++i) lexicon_.emplace(terms_[i], i);
  total_tokens_ = 0;
  for (auto len : doc_lengths_) total_tokens_ += len;
  avg_doc_length_ = doc_lengths_.empty()
                        ? 0.0
                        : static_cast<double>(total_tokens_) / static_cast<double>(doc_lengths_.size());
}

std::uint32_t ForwardIndex::tf(DocOrdinal doc, TermId term) const {
  const auto& row = docs_.at(doc);
  auto it = std::lower_bound(row.begin(), row.end(), term,
                             [](const TermCount& tc, TermId t) { return tc.term < t; });
  return (it != row.end() && it->term == term) ? it->tf : 0;
}

Index IndexBuilder::build(const Corpus& corpus, TokenizerConfig tokenizer) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "empty corpus");

  // Term ids are assigned in lexicographic order so that the built index does
  // not depend on which document introduced a term first.
  std::vector<std::map<std::string, std::uint32_t>> doc_counts;
  doc_counts.reserve(corpus.size());
  std::map<std::string, TermId> vocabulary;
  std::vector<std::uint32_t> lengths;
  lengths.reserve(corpus.size());

  for (const auto& doc : corpus.documents()) {
    auto tokens = tokenize(doc.text, tokenizer);
    if (tokens.empty()) {
      throw Error(ErrorCode::EmptyDocument, "document has no indexable terms: " + doc.doc_id);
    }
    std::map<std::string, std::uint32_t> counts;
    for (auto& t : tokens) ++counts[t];
    for (const auto& [t, _] : counts) vocabulary.emplace(t, 0);
    lengths.push_back(static_cast<std::uint32_t>(tokens.size()));
    doc_counts.push_back(std::move(counts));
  }

  Index index;
  index.tokenizer = std::move(tokenizer);
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) ids.push_back(doc.doc_id);
  index.doc_ids = DocIdTable(std::move(ids));

  auto& inv = index.inverted;
  inv.terms_.reserve(vocabulary.size());
  for (auto& [term, id] : vocabulary) {
    id = static_cast<TermId>(inv.terms_.size());
    inv.terms_.push_back(term);
  }
  inv.postings_.resize(vocabulary.size());
  inv.collection_freq_.assign(vocabulary.size(), 0);
  inv.doc_lengths_ = std::move(lengths);

  auto& fwd = index.forward;
  fwd.docs_.resize(corpus.size());
  for (DocOrdinal d = 0; d < doc_counts.size(); ++d) {
    auto& row = fwd.docs_[d];
    row.reserve(doc_counts[d].size());
    // std::map iteration is lexicographic, so term ids come out ascending.
    for (const auto& [term, tf] : doc_counts[d]) {
      TermId id = vocabulary.at(term);
      row.push_back({id, tf});
      inv.postings_[id].push_back({d, tf});
      inv.collection_freq_[id] += tf;
    }
  }
  inv.finalize();
  return index;
}

}  // namespace lexboost
