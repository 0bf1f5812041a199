#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "qolab/error.hpp"
#include "qolab/optimizers.hpp"

namespace qolab {

namespace {

std::uint64_t base_rows(const JoinGraph& graph, AliasSet set) {
  std::uint64_t rows = 0;
  for (AliasSet rest = set; rest; rest &= rest - 1) rows += graph.vertex(lowest_vertex(rest)).rows;
  return rows;
}

// Fewer base rows builds; ties build left.
BuildSide smaller_side(const JoinGraph& graph, const PlanPtr& left, const PlanPtr& right) {
  return base_rows(graph, right->aliases) < base_rows(graph, left->aliases) ? BuildSide::Right : BuildSide::Left;
}

PlanPtr join_units(const JoinGraph& graph, const PlanPtr& acc, const PlanPtr& unit) {
  return make_join(graph, acc, unit, JoinAlgo::HJ, smaller_side(graph, acc, unit));
}

/// Joins units left-deep in order; a unit with no edge to the accumulated
/// plan is skipped until one exists.
PlanPtr combine(const JoinGraph& graph, std::vector<PlanPtr> units,
                const std::function<PlanPtr(const PlanPtr&, const PlanPtr&)>& join) {
  std::deque<PlanPtr> pending(units.begin(), units.end());
  PlanPtr acc = pending.front();
  pending.pop_front();
  while (!pending.empty()) {
    auto it = std::find_if(pending.begin(), pending.end(),
                           [&](const PlanPtr& u) { return graph.has_edge_between(acc->aliases, u->aliases); });
    if (it == pending.end()) throw PlanError("join order leaves " + graph.describe((*pending.begin())->aliases) + " disconnected");
    acc = join(acc, *it);
    pending.erase(it);
  }
  return acc;
}

}  // namespace

bool is_fk_table(const JoinGraph& graph, int v) {
  return std::any_of(graph.edges().begin(), graph.edges().end(),
                     [&](const JoinEdge& e) { return e.kind == EdgeKind::OneToMany && e.fk_side() == v; });
}

std::vector<int> pk_neighbors(const JoinGraph& graph, int v) {
  std::vector<int> out;
  for (const auto& e : graph.edges()) {
    if (e.kind == EdgeKind::OneToMany && e.fk_side() == v) out.push_back(e.key_side);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double c_s2(const JoinGraph& graph, int fk_vertex, Setting setting) {
  const auto pks = pk_neighbors(graph, fk_vertex);
  if (pks.empty()) throw OptimizerError(graph.vertex(fk_vertex).alias + " is not a foreign-key table");
  const double rows = static_cast<double>(graph.vertex(fk_vertex).rows);
  if (setting == Setting::NonIndexed) return rows;
  return rows / std::ldexp(1.0, static_cast<int>(pks.size()));
}

JoinOrderResult simpli2_order(const JoinGraph& graph, Setting setting) {
  if (graph.size() == 0) throw OptimizerError("empty query");
  if (!graph.connected(graph.all())) throw OptimizerError("join graph is disconnected");
  JoinOrderResult result;
  AliasSet placed = 0;
  auto rows = [&](int v) { return graph.vertex(v).rows; };
  auto by_size = [&](int a, int b) { return rows(a) != rows(b) ? rows(a) < rows(b) : a < b; };

  for (int v = 0; v < graph.size(); ++v) {
    if (is_fk_table(graph, v)) result.fk_order.push_back({v, c_s2(graph, v, setting)});
  }
  std::sort(result.fk_order.begin(), result.fk_order.end(), [](const FkRank& a, const FkRank& b) {
    return a.c_s2 != b.c_s2 ? a.c_s2 < b.c_s2 : a.vertex < b.vertex;
  });

  if (result.fk_order.empty()) {
    for (int v = 0; v < graph.size(); ++v) result.order.push_back(v);
    std::sort(result.order.begin(), result.order.end(), by_size);
    result.components.emplace_back(0, result.order.size());
    result.tail_begin = result.order.size();
    return result;
  }

  auto append = [&](int v) {
    if (placed & singleton(v)) return;
    result.order.push_back(v);
    placed |= singleton(v);
  };
  for (const auto& fk : result.fk_order) {
    const std::size_t begin = result.order.size();
    append(fk.vertex);
    auto pks = pk_neighbors(graph, fk.vertex);
    std::sort(pks.begin(), pks.end(), by_size);
    for (int pk : pks) append(pk);
    if (result.order.size() > begin) result.components.emplace_back(begin, result.order.size());
  }
  result.tail_begin = result.order.size();
  while (placed != graph.all()) {
    const AliasSet candidates = graph.neighbors(placed) & ~placed;
    append(lowest_vertex(candidates));
  }
  return result;
}

PlanPtr simpli2_plan(const JoinOrderResult& order, const JoinGraph& graph, const Catalog& catalog,
                     const OptimizerConfig& config) {
  config.validate();
  AliasSet covered = 0;
  for (int v : order.order) covered |= singleton(v);
  if (covered != graph.all() || order.order.size() != static_cast<std::size_t>(graph.size())) {
    throw OptimizerError("join order does not match the query");
  }

  if (config.setting == Setting::Indexed) {
    auto join = [&](const PlanPtr& acc, const PlanPtr& leaf) -> PlanPtr {
      if (catalog.setting() == Setting::Indexed && index_lookup_predicate(graph, catalog, acc->aliases, leaf->vertex)) {
        return make_join(graph, acc, make_leaf(graph, leaf->vertex, AccessPath::IS), JoinAlgo::NLJ, BuildSide::Right);
      }
      return join_units(graph, acc, leaf);
    };
    std::vector<PlanPtr> leaves;
    for (int v : order.order) leaves.push_back(make_leaf(graph, v));
    return combine(graph, leaves, join);
  }

  auto hash = [&](const PlanPtr& acc, const PlanPtr& unit) { return join_units(graph, acc, unit); };
  std::vector<PlanPtr> units;
  for (const auto& [begin, end] : order.components) {
    std::vector<PlanPtr> leaves;
    for (std::size_t i = begin; i < end; ++i) leaves.push_back(make_leaf(graph, order.order[i]));
    // A component whose aliases are not connected among themselves splits
    // into its connected pieces.
    std::deque<PlanPtr> pending(leaves.begin(), leaves.end());
    while (!pending.empty()) {
      PlanPtr acc = pending.front();
      pending.pop_front();
      for (bool grew = true; grew;) {
        grew = false;
        auto it = std::find_if(pending.begin(), pending.end(),
                               [&](const PlanPtr& u) { return graph.has_edge_between(acc->aliases, u->aliases); });
        if (it != pending.end()) {
          acc = hash(acc, *it);
          pending.erase(it);
          grew = true;
        }
      }
      units.push_back(acc);
    }
  }
  for (std::size_t i = order.tail_begin; i < order.order.size(); ++i) units.push_back(make_leaf(graph, order.order[i]));
  return combine(graph, units, hash);
}

}  // namespace qolab
