#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexboost {

using DocOrdinal = std::uint32_t;
using TermId = std::uint32_t;

inline constexpr DocOrdinal kNoOrdinal = static_cast<DocOrdinal>(-1);

/// Lowercases ASCII and splits on every non-alphanumeric ASCII byte. Bytes
/// >= 0x80 are kept inside tokens so UTF-8 words survive intact. Optional
/// stopwords are dropped after lowercasing.
struct TokenizerConfig {
  std::set<std::string, std::less<>> stopwords;
};

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config = {});

struct Document {
  std::string doc_id;
  std::string text;
};

/// Documents in insertion order; ordinals are positions in `documents`.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  /// Throws DuplicateId / MalformedInput (empty id).
  void add(Document doc);

  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  const Document& operator[](DocOrdinal ordinal) const { return documents_.at(ordinal); }

  std::optional<DocOrdinal> ordinal_of(std::string_view doc_id) const;

 private:
  std::vector<Document> documents_;
  std::unordered_map<std::string, DocOrdinal> id_to_ordinal_;
};

/// `<doc_id>\t<text>` per line. Blank lines are skipped.
Corpus read_corpus_tsv(const std::filesystem::path& path);
/// One JSON object per line with string fields `id` and `contents`.
Corpus read_corpus_jsonl(const std::filesystem::path& path);
/// Dispatches on extension: .jsonl/.json -> JSON lines, anything else -> TSV.
Corpus read_corpus(const std::filesystem::path& path);

struct Posting {
  DocOrdinal doc;
  std::uint32_t tf;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Ordinal <-> external id table shared by every on-disk artifact.
class DocIdTable {
 public:
  DocIdTable() = default;
  explicit DocIdTable(std::vector<std::string> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(DocOrdinal ordinal) const { return ids_.at(ordinal); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::optional<DocOrdinal> ordinal_of(std::string_view doc_id) const;

  friend bool operator==(const DocIdTable& a, const DocIdTable& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, DocOrdinal> lookup_;
};

class InvertedIndex {
 public:
  std::size_t num_docs() const noexcept { return doc_lengths_.size(); }
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  std::uint64_t total_tokens() const noexcept { return total_tokens_; }
  double avg_doc_length() const noexcept { return avg_doc_length_; }
  std::uint32_t doc_length(DocOrdinal doc) const { return doc_lengths_.at(doc); }
  std::span<const std::uint32_t> doc_lengths() const noexcept { return doc_lengths_; }

  std::optional<TermId> term_id(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }

  std::uint32_t doc_freq(TermId id) const { return static_cast<std::uint32_t>(postings_.at(id).size()); }
  std::uint64_t collection_freq(TermId id) const { return collection_freq_.at(id); }
  std::span<const Posting> postings(TermId id) const { return postings_.at(id); }

  /// Zero for out-of-vocabulary terms.
  std::uint32_t doc_freq(std::string_view term) const;
  std::uint64_t collection_freq(std::string_view term) const;

 private:
  friend class IndexBuilder;
  friend struct IndexSerializer;

  void finalize();

  std::vector<std::string> terms_;  // sorted lexicographically; TermId = position
  std::unordered_map<std::string, TermId> lexicon_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint64_t> collection_freq_;
  std::vector<std::uint32_t> doc_lengths_;
  std::uint64_t total_tokens_ = 0;
  double avg_doc_length_ = 0.0;
};

struct TermCount {
  TermId term;
  std::uint32_t tf;

  friend bool operator==(const TermCount&, const TermCount&) = default;
};

/// Per-document term frequencies, sorted by term id.
class ForwardIndex {
 public:
  std::size_t num_docs() const noexcept { return docs_.size(); }
  std::span<const TermCount> terms(DocOrdinal doc) const { return docs_.at(doc); }
  /// Zero when the term does not occur in the document.
  std::uint32_t tf(DocOrdinal doc, TermId term) const;

 private:
  friend class IndexBuilder;
  friend struct IndexSerializer;

  std::vector<std::vector<TermCount>> docs_;
};

/// Everything built from a corpus at indexing time. Immutable after build or
/// load; safe to share across threads.
struct Index {
  DocIdTable doc_ids;
  TokenizerConfig tokenizer;
  InvertedIndex inverted;
  ForwardIndex forward;

  std::size_t num_docs() const noexcept { return inverted.num_docs(); }
};

class IndexBuilder {
 public:
  /// Throws EmptyCorpus, EmptyDocument.
  static Index build(const Corpus& corpus, TokenizerConfig tokenizer = {});
};

inline Index build_index(const Corpus& corpus, TokenizerConfig tokenizer = {}) {
  return IndexBuilder::build(corpus, std::move(tokenizer));
}

/// Binary layout is described in docs/FORMATS.md.
void save_index(const Index& index, const std::filesystem::path& path);
/// Throws CorruptIndex (bad magic, truncation, inconsistent sections) or
/// VersionMismatch.
Index load_index(const std::filesystem::path& path);

}  // namespace lexboost
