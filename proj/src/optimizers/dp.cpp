#include <functional>
#include <limits>

#include "qolab/error.hpp"
#include "qolab/optimizers.hpp"

namespace qolab {

std::string_view to_string(PlanShape shape) { return shape == PlanShape::Bushy ? "bushy" : "leftdeep"; }

PlanShape parse_shape(std::string_view text) {
  if (text == "bushy") return PlanShape::Bushy;
  if (text == "leftdeep" || text == "left_deep") return PlanShape::LeftDeep;
  throw Error("unknown plan shape '" + std::string(text) + "'");
}

OptimizerConfig OptimizerConfig::for_setting(Setting setting, PlanShape shape) {
  OptimizerConfig c;
  c.setting = setting;
  c.shape = shape;
  c.policy = setting == Setting::Indexed ? OperatorPolicy::IndexedChoice : OperatorPolicy::HashOnly;
  return c;
}

void OptimizerConfig::validate() const {
  if (setting == Setting::NonIndexed && policy != OperatorPolicy::HashOnly) {
    throw OptimizerError("the non-indexed setting is hash-join only");
  }
  if (dp_table_limit < 1 || dp_table_limit > 24) throw OptimizerError("dp_table_limit must be in [1, 24]");
}

namespace {

struct Entry {
  double cost = std::numeric_limits<double>::infinity();
  double rows = 0;
  AliasSet left = 0;  // 0 for leaves
  JoinAlgo algo = JoinAlgo::HJ;
  BuildSide build = BuildSide::Left;
  bool reachable = false;
};

}  // namespace

PlanPtr dp_optimize(const JoinGraph& graph, const Catalog& catalog, const CardinalityProvider& provider,
                    const CostParams& params, const OptimizerConfig& config, DpStats* stats) {
  config.validate();
  const int n = graph.size();
  if (n == 0) throw OptimizerError("empty query");
  if (n > config.dp_table_limit) {
    throw OptimizerError("query has " + std::to_string(n) + " aliases, over the DP limit of " +
                         std::to_string(config.dp_table_limit));
  }
  const AliasSet all = graph.all();
  if (!graph.connected(all)) throw OptimizerError("join graph is disconnected");
  const bool nlj_allowed = config.policy == OperatorPolicy::IndexedChoice && catalog.setting() == Setting::Indexed;

  std::vector<Entry> best(static_cast<std::size_t>(all) + 1);
  DpStats local;
  for (int v = 0; v < n; ++v) {
    auto& e = best[singleton(v)];
    e.rows = provider.cardinality(singleton(v));
    e.cost = cost_node(ScanCards{static_cast<double>(graph.vertex(v).rows)}, params);
    e.reachable = true;
  }
  for (AliasSet s = 1; s <= all && s != 0; ++s) {
    if (alias_count(s) < 2 || !graph.connected(s)) continue;
    ++local.subsets;
    auto& e = best[s];
    e.rows = provider.cardinality(s);
    for (AliasSet l = (s - 1) & s; l != 0; l = (l - 1) & s) {
      const AliasSet r = s & ~l;
      const auto& bl = best[l];
      const auto& br = best[r];
      if (!bl.reachable || !br.reachable || !graph.has_edge_between(l, r)) continue;
      const bool r_leaf = alias_count(r) == 1;
      if (config.shape == PlanShape::LeftDeep && !r_leaf) continue;
      ++local.pairs;
      const double build_left = accumulate_cost(bl.cost, br.cost, cost_node(HashJoinCards{bl.rows, e.rows}, params));
      if (build_left < e.cost) {
        e.cost = build_left;
        e.left = l;
        e.algo = JoinAlgo::HJ;
        e.build = BuildSide::Left;
      }
      const double build_right = accumulate_cost(bl.cost, br.cost, cost_node(HashJoinCards{br.rows, e.rows}, params));
      if (build_right < e.cost) {
        e.cost = build_right;
        e.left = l;
        e.algo = JoinAlgo::HJ;
        e.build = BuildSide::Right;
      }
      if (nlj_allowed && r_leaf && index_lookup_predicate(graph, catalog, l, lowest_vertex(r))) {
        const double nlj = accumulate_cost(bl.cost, cost_node(IndexScanCards{}, params),
                                           cost_node(NestedLoopCards{bl.rows, e.rows}, params));
        if (nlj < e.cost) {
          e.cost = nlj;
          e.left = l;
          e.algo = JoinAlgo::NLJ;
          e.build = BuildSide::Right;
        }
      }
    }
    e.reachable = e.left != 0;
  }
  if (!best[all].reachable) throw OptimizerError("no plan found for " + graph.describe(all));
  if (stats) *stats = local;

  std::function<PlanPtr(AliasSet)> build = [&](AliasSet s) -> PlanPtr {
    const auto& e = best[s];
    if (alias_count(s) == 1) return make_leaf(graph, lowest_vertex(s));
    const AliasSet r = s & ~e.left;
    if (e.algo == JoinAlgo::NLJ) {
      return make_join(graph, build(e.left), make_leaf(graph, lowest_vertex(r), AccessPath::IS), JoinAlgo::NLJ,
                       BuildSide::Right);
    }
    return make_join(graph, build(e.left), build(r), JoinAlgo::HJ, e.build);
  };
  return build(all);
}

}  // namespace qolab
