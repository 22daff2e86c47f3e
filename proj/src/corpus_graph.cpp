#include "lexboost/corpus_graph.hpp"

#include "binary_io.hpp"

namespace lexboost {

namespace {
constexpr std::string_view kGraphMagic = "LBGR";
constexpr std::uint32_t kGraphVersion = 1;
}  // namespace

CorpusGraph::CorpusGraph(DocIdTable ids, std::size_t k, Similarity similarity,
                         std::vector<std::vector<Neighbor>> lists)
    : ids_(std::move(ids)), k_(k), similarity_(similarity), lists_(std::move(lists)) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::CorruptGraph, what); };
  if (k_ == 0) bad("graph k must be >= 1");
  if (ids_.size() != lists_.size()) bad("graph id table does not match neighbour lists");
  if (lists_.size() < 2) bad("graph needs at least 2 documents");
  const std::size_t expected = std::min(k_, lists_.size() - 1);
  for (DocOrdinal d = 0; d < lists_.size(); ++d) {
    const auto& list = lists_[d];
    if (list.size() != expected) bad("neighbour list of " + ids_.id(d) + " has wrong length");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].doc >= lists_.size()) bad("neighbour ordinal out of range");
      if (list[i].doc == d) bad("self loop at " + ids_.id(d));
      if (i > 0 && !detail::neighbor_before(list[i - 1], list[i])) bad("neighbour list of " + ids_.id(d) + " not ordered");
    }
  }
}

std::span<const Neighbor> CorpusGraph::neighbors(DocOrdinal doc, std::size_t n) const {
  if (n == 0) throw Error(ErrorCode::InvalidParameter, "neighbour count must be >= 1");
  if (n > k_) {
    throw Error(ErrorCode::NeighborCountExceedsGraph,
                "graph stores only k=" + std::to_string(k_) + " neighbors, asked for " + std::to_string(n));
  }
  if (doc >= lists_.size()) throw Error(ErrorCode::UnknownDocument, "ordinal not in graph: " + std::to_string(doc));
  const auto& list = lists_[doc];
  return std::span<const Neighbor>(list).first(std::min(n, list.size()));
}

void save_graph(const CorpusGraph& graph, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  w.bytes(kGraphMagic);
  w.u32(kGraphVersion);
  w.u64(graph.num_docs());
  w.u32(static_cast<std::uint32_t>(graph.k()));
  w.u32(static_cast<std::uint32_t>(graph.similarity()));
  for (const auto& id : graph.doc_ids().ids()) w.str(id);
  for (DocOrdinal d = 0; d < graph.num_docs(); ++d) {
    auto list = graph.neighbors(d);
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& nb : list) {
      w.u32(nb.doc);
      w.f64(nb.similarity);
    }
  }
  w.write_file(path);
}

CorpusGraph load_graph(const std::filesystem::path& path) {
  detail::BinaryReader r(detail::BinaryReader::slurp(path), ErrorCode::CorruptGraph);
  if (r.remaining() < kGraphMagic.size() || r.bytes(kGraphMagic.size()) != kGraphMagic) {
    r.fail("corrupt graph: bad magic");
  }
  auto version = r.u32();
  if (version != kGraphVersion) {
    throw Error(ErrorCode::VersionMismatch, "graph format version " + std::to_string(version) +
                                                ", expected " + std::to_string(kGraphVersion));
  }
  auto n = r.u64();
  auto k = r.u32();
  auto sim = r.u32();
  if (sim > static_cast<std::uint32_t>(Similarity::Dot)) r.fail("corrupt graph: unknown similarity");
  r.require_elements(n, 8);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) ids.push_back(r.str());
  std::vector<std::vector<Neighbor>> lists(n);
  for (auto& list : lists) {
    auto count = r.u32();
    r.require_elements(count, 12);
    list.resize(count);
    for (auto& nb : list) {
      nb.doc = r.u32();
      nb.similarity = r.f64();
    }
  }
  if (!r.at_end()) r.fail("corrupt graph: trailing bytes");
  try {
    return CorpusGraph(DocIdTable(std::move(ids)), k, static_cast<Similarity>(sim), std::move(lists));
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptGraph, std::string("corrupt graph: ") + e.what());
  }
}

}  // namespace lexboost
