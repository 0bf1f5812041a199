#include <algorithm>
#include <json.hpp>
#include <mutex>
#include <sstream>

#include "qolab/cardinality.hpp"
#include "qolab/error.hpp"

namespace qolab {

std::optional<std::uint64_t> TrueCardMemo::find(AliasSet key) const {
  std::shared_lock lock(mutex_);
  auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void TrueCardMemo::put(AliasSet key, std::uint64_t rows) {
  std::unique_lock lock(mutex_);
  map_[key] = rows;
}

std::size_t TrueCardMemo::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

std::map<AliasSet, std::uint64_t> TrueCardMemo::entries() const {
  std::shared_lock lock(mutex_);
  return {map_.begin(), map_.end()};
}

std::uint64_t true_cardinality(AliasSet key, const JoinGraph& graph, const Catalog& catalog, TrueCardMemo& memo,
                               const ExecBudget& budget) {
  if (auto hit = memo.find(key)) return *hit;
  const std::uint64_t rows = execute_subset(key, graph, catalog, budget);
  memo.put(key, rows);
  return rows;
}

std::vector<AliasSet> connected_subsets(const JoinGraph& graph) {
  std::vector<AliasSet> out;
  if (graph.size() > 24) throw OptimizerError("too many aliases to enumerate sub-joins");
  for (AliasSet s = 1; s <= graph.all() && s != 0; ++s) {
    if (graph.connected(s)) out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](AliasSet a, AliasSet b) { return alias_count(a) < alias_count(b); });
  return out;
}

void precompute_true_cardinalities(const JoinGraph& graph, const Catalog& catalog, TrueCardMemo& memo,
                                   const ExecBudget& budget) {
  for (AliasSet key : connected_subsets(graph)) true_cardinality(key, graph, catalog, memo, budget);
}

std::string key_name(AliasSet key, const JoinGraph& graph) {
  std::string out;
  for (AliasSet rest = key; rest; rest &= rest - 1) {
    if (!out.empty()) out += ',';
    out += graph.vertex(lowest_vertex(rest)).alias;
  }
  return out;
}

void store_memo(TrueCardStore& store, const JoinGraph& graph, const TrueCardMemo& memo) {
  auto& entries = store[graph.spec().name];
  for (const auto& [key, rows] : memo.entries()) entries[key_name(key, graph)] = rows;
}

void restore_memo(const TrueCardStore& store, const JoinGraph& graph, TrueCardMemo& memo) {
  auto it = store.find(graph.spec().name);
  if (it == store.end()) return;
  for (const auto& [name, rows] : it->second) {
    AliasSet key = 0;
    std::stringstream in(name);
    std::string alias;
    while (std::getline(in, alias, ',')) {
      const int v = graph.vertex_of(alias);
      if (v < 0) throw Error("cardinality file names unknown alias " + alias + " for query " + graph.spec().name);
      key |= singleton(v);
    }
    memo.put(key, rows);
  }
}

std::string save_truecard_store(const TrueCardStore& store) {
  nlohmann::json root = store;
  return root.dump(1) + "\n";
}

TrueCardStore load_truecard_store(std::string_view document) {
  try {
    return nlohmann::json::parse(document).get<TrueCardStore>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cardinality document: ") + e.what(), 0);
  }
}

double BaseOnlyProvider::cardinality(AliasSet set) const {
  if (alias_count(set) != 1) throw Error("base-only cardinalities cover single tables only");
  const int v = lowest_vertex(set);
  if (!graph_.selections_of(v).empty()) {
    throw Error("base-only cardinalities do not cover filtered " + graph_.vertex(v).alias);
  }
  return static_cast<double>(graph_.vertex(v).rows);
}

}  // namespace qolab
