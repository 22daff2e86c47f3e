#include <algorithm>

#include "binary_io.hpp"
#include "lexboost/error.hpp"
#include "lexboost/text_index.hpp"

namespace lexboost {

namespace {
constexpr std::string_view kIndexMagic = "LBIX";
constexpr std::uint32_t kIndexVersion = 1;
}  // namespace

struct IndexSerializer {
  static void save(const Index& index, detail::BinaryWriter& w) {
    const auto& inv = index.inverted;
    const auto& fwd = index.forward;
    w.bytes(kIndexMagic);
    w.u32(kIndexVersion);

    // stats
    w.u64(inv.num_docs());
    w.u64(inv.total_tokens());
    w.u32(static_cast<std::uint32_t>(inv.vocabulary_size()));

    // documents
    for (const auto& id : index.doc_ids.ids()) w.str(id);
    for (auto len : inv.doc_lengths_) w.u32(len);

    // tokenizer
    w.u32(static_cast<std::uint32_t>(index.tokenizer.stopwords.size()));
    for (const auto& s : index.tokenizer.stopwords) w.str(s);

    // lexicon
    for (TermId t = 0; t < inv.terms_.size(); ++t) {
      w.str(inv.terms_[t]);
      w.u64(inv.collection_freq_[t]);
    }

    // postings
    for (const auto& list : inv.postings_) {
      w.u32(static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        w.u32(p.doc);
        w.u32(p.tf);
      }
    }

    // forward index
    for (const auto& row : fwd.docs_) {
      w.u32(static_cast<std::uint32_t>(row.size()));
      for (const auto& tc : row) {
        w.u32(tc.term);
        w.u32(tc.tf);
      }
    }
  }

  static Index load(detail::BinaryReader& r) {
    if (r.remaining() < kIndexMagic.size() || r.bytes(kIndexMagic.size()) != kIndexMagic) {
      r.fail("corrupt index: bad magic");
    }
    auto version = r.u32();
    if (version != kIndexVersion) {
      throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kIndexVersion));
    }

    Index index;
    auto& inv = index.inverted;
    auto& fwd = index.forward;

    auto num_docs = r.u64();
    auto total_tokens = r.u64();
    auto vocab = r.u32();
    if (num_docs == 0) r.fail("corrupt index: zero documents");
    r.require_elements(num_docs, 8);
    r.require_elements(vocab, 8);

    std::vector<std::string> ids;
    ids.reserve(num_docs);
    for (std::uint64_t i = 0; i < num_docs; ++i) ids.push_back(r.str());
    try {
      index.doc_ids = DocIdTable(std::move(ids));
    } catch (const Error&) {
      r.fail("corrupt index: duplicate document id");
    }
    inv.doc_lengths_.resize(num_docs);
    for (auto& len : inv.doc_lengths_) len = r.u32();

    auto stopwords = r.u32();
    r.require_elements(stopwords, 4);
    for (std::uint32_t i = 0; i < stopwords; ++i) index.tokenizer.stopwords.insert(r.str());

    inv.terms_.resize(vocab);
    inv.collection_freq_.resize(vocab);
    for (TermId t = 0; t < vocab; ++t) {
      inv.terms_[t] = r.str();
      inv.collection_freq_[t] = r.u64();
      if (t > 0 && !(inv.terms_[t - 1] < inv.terms_[t])) r.fail("corrupt index: lexicon not sorted");
    }

    inv.postings_.resize(vocab);
    for (TermId t = 0; t < vocab; ++t) {
      auto df = r.u32();
      r.require_elements(df, 8);
      auto& list = inv.postings_[t];
      list.resize(df);
      std::uint64_t cf = 0;
      for (std::uint32_t i = 0; i < df; ++i) {
        list[i].doc = r.u32();
        list[i].tf = r.u32();
        if (list[i].doc >= num_docs || list[i].tf == 0) r.fail("corrupt index: bad posting");
        if (i > 0 && list[i - 1].doc >= list[i].doc) r.fail("corrupt index: postings not sorted");
        cf += list[i].tf;
      }
      if (df == 0 || cf != inv.collection_freq_[t]) r.fail("corrupt index: collection frequency mismatch");
    }

    fwd.docs_.resize(num_docs);
    std::uint64_t forward_entries = 0;
    for (DocOrdinal d = 0; d < num_docs; ++d) {
      auto count = r.u32();
      r.require_elements(count, 8);
      auto& row = fwd.docs_[d];
      row.resize(count);
      std::uint64_t length = 0;
      for (std::uint32_t i = 0; i < count; ++i) {
        row[i].term = r.u32();
        row[i].tf = r.u32();
        if (row[i].term >= vocab || (i > 0 && row[i - 1].term >= row[i].term)) {
          r.fail("corrupt index: bad forward entry");
        }
        length += row[i].tf;
      }
      if (length != inv.doc_lengths_[d]) r.fail("corrupt index: document length mismatch");
      forward_entries += count;
    }
    if (!r.at_end()) r.fail("corrupt index: trailing bytes");

    inv.finalize();
    if (inv.total_tokens_ != total_tokens) r.fail("corrupt index: token count mismatch");

    // Forward and inverted views must describe the same matrix.
    std::uint64_t posting_entries = 0;
    for (TermId t = 0; t < vocab; ++t) {
      for (const auto& p : inv.postings_[t]) {
        if (fwd.tf(p.doc, t) != p.tf) r.fail("corrupt index: forward/inverted mismatch");
      }
      posting_entries += inv.postings_[t].size();
    }
    if (posting_entries != forward_entries) r.fail("corrupt index: forward/inverted mismatch");
    return index;
  }
};

void save_index(const Index& index, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  IndexSerializer::save(index, w);
  w.write_file(path);
}

Index load_index(const std::filesystem::path& path) {
  detail::BinaryReader r(detail::BinaryReader::slurp(path), ErrorCode::CorruptIndex);
  return IndexSerializer::load(r);
}

}  // namespace lexboost
