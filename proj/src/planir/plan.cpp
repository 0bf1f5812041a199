#include "qolab/plan.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "qolab/error.hpp"

namespace qolab {

std::string_view to_string(AccessPath access) { return access == AccessPath::SS ? "SS" : "IS"; }
std::string_view to_string(JoinAlgo algo) { return algo == JoinAlgo::HJ ? "HJ" : "NLJ"; }

std::size_t PlanNode::node_count() const {
  std::size_t n = 0;
  visit([&](const PlanNode&) { ++n; });
  return n;
}

PlanPtr make_leaf(const JoinGraph& graph, int vertex, AccessPath access) {
  auto node = std::make_shared<PlanNode>();
  node->vertex = vertex;
  node->aliases = singleton(vertex);
  node->access = access;
  node->selections = graph.selections_of(vertex);
  return node;
}

PlanPtr make_join(const JoinGraph& graph, PlanPtr left, PlanPtr right, JoinAlgo algo, BuildSide build) {
  if (!left || !right) throw PlanError("join with missing input");
  if (left->aliases & right->aliases) throw PlanError("join inputs overlap");
  auto node = std::make_shared<PlanNode>();
  node->aliases = left->aliases | right->aliases;
  node->algo = algo;
  node->build = algo == JoinAlgo::NLJ ? BuildSide::Right : build;
  node->predicates = graph.crossing_predicates(left->aliases, right->aliases);
  node->left = std::move(left);
  node->right = std::move(right);
  return node;
}

const ColumnRef& predicate_side(const JoinGraph& graph, int predicate, int vertex) {
  const auto& join = graph.spec().joins[static_cast<std::size_t>(predicate)];
  return graph.predicate_vertices(predicate).first == vertex ? join.left : join.right;
}

std::optional<int> index_lookup_predicate(const JoinGraph& graph, const Catalog& catalog, AliasSet outer,
                                          int inner_vertex) {
  if (catalog.setting() != Setting::Indexed) return std::nullopt;
  const auto& table = graph.vertex(inner_vertex).table;
  for (int p : graph.crossing_predicates(outer, singleton(inner_vertex))) {
    const auto& column = predicate_side(graph, p, inner_vertex).column;
    if (catalog.index(table, column)) return p;
  }
  return std::nullopt;
}

std::vector<std::string> validate_plan(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog) {
  std::vector<std::string> violations;
  std::vector<int> seen(static_cast<std::size_t>(graph.size()), 0);
  std::vector<int> applied(graph.spec().joins.size(), 0);
  const bool non_indexed = catalog.setting() == Setting::NonIndexed;

  std::function<void(const PlanNode&, bool)> check = [&](const PlanNode& node, bool nlj_inner) {
    if (node.is_leaf()) {
      if (node.vertex >= graph.size()) {
        violations.push_back("leaf references unknown vertex " + std::to_string(node.vertex));
        return;
      }
      const auto& alias = graph.vertex(node.vertex).alias;
      ++seen[static_cast<std::size_t>(node.vertex)];
      if (node.aliases != singleton(node.vertex)) violations.push_back("leaf " + alias + " has wrong alias set");
      if (node.selections != graph.selections_of(node.vertex)) {
        violations.push_back("leaf " + alias + " does not carry exactly its selections");
      }
      if (node.access == AccessPath::IS && !nlj_inner) {
        violations.push_back("index scan on " + alias + " outside an NLJ inner input");
      }
      return;
    }
    if (!node.left || !node.right) {
      violations.push_back("join node with missing input");
      return;
    }
    const auto& l = *node.left;
    const auto& r = *node.right;
    if (node.aliases != (l.aliases | r.aliases) || (l.aliases & r.aliases)) {
      violations.push_back("join node alias set is not the disjoint union of its inputs");
    }
    const auto expected = graph.crossing_predicates(l.aliases, r.aliases);
    if (expected.empty()) {
      violations.push_back("cross product between " + graph.describe(l.aliases) + " and " + graph.describe(r.aliases));
    }
    if (node.predicates != expected) {
      violations.push_back("join " + graph.describe(node.aliases) + " does not apply exactly its crossing predicates");
    }
    for (int p : node.predicates) {
      if (p >= 0 && static_cast<std::size_t>(p) < applied.size()) ++applied[static_cast<std::size_t>(p)];
    }
    if (node.algo == JoinAlgo::NLJ) {
      if (non_indexed) violations.push_back("NLJ in the non-indexed (hash-join only) setting");
      if (!r.is_leaf()) {
        violations.push_back("NLJ inner input " + graph.describe(r.aliases) + " is not a base relation");
      } else {
        if (r.access != AccessPath::IS) {
          violations.push_back("NLJ inner " + graph.vertex(r.vertex).alias + " is not an index scan");
        }
        if (!index_lookup_predicate(graph, catalog, l.aliases, r.vertex)) {
          violations.push_back("NLJ inner " + graph.vertex(r.vertex).alias + " has no index on a join column");
        }
      }
    }
    check(l, false);
    check(r, node.algo == JoinAlgo::NLJ);
  };
  check(plan, false);

  for (int v = 0; v < graph.size(); ++v) {
    const int count = seen[static_cast<std::size_t>(v)];
    if (count != 1) {
      violations.push_back("alias " + graph.vertex(v).alias + " appears " + std::to_string(count) + " times");
    }
  }
  for (std::size_t p = 0; p < applied.size(); ++p) {
    if (applied[p] != 1) {
      violations.push_back("join predicate " + render_predicate(graph.spec().joins[p]) + " applied " +
                           std::to_string(applied[p]) + " times");
    }
  }
  return violations;
}

const NodeAnnotation& AnnotatedPlan::at(const PlanNode& node) const {
  auto it = nodes.find(&node);
  if (it == nodes.end()) throw PlanError("plan node has no annotation");
  return it->second;
}

AnnotatedPlan annotate(const PlanPtr& plan, const JoinGraph& graph, const CardinalityProvider& provider,
                       const CostParams& params) {
  AnnotatedPlan out;
  out.plan = plan;
  out.provider_id = provider.id();
  std::function<const NodeAnnotation&(const PlanNode&)> walk = [&](const PlanNode& node) -> const NodeAnnotation& {
    NodeAnnotation a;
    a.rows = provider.cardinality(node.aliases);
    if (node.is_leaf()) {
      if (node.access == AccessPath::SS) {
        a.self_cost = cost_node(ScanCards{static_cast<double>(graph.vertex(node.vertex).rows)}, params);
      } else {
        a.self_cost = cost_node(IndexScanCards{}, params);
      }
      a.total_cost = a.self_cost;
    } else {
      const auto& l = walk(*node.left);
      const auto& r = walk(*node.right);
      if (node.algo == JoinAlgo::HJ) {
        const double build = node.build == BuildSide::Left ? l.rows : r.rows;
        a.self_cost = cost_node(HashJoinCards{build, a.rows}, params);
      } else {
        a.self_cost = cost_node(NestedLoopCards{l.rows, a.rows}, params);
      }
      a.total_cost = accumulate_cost(l.total_cost, r.total_cost, a.self_cost);
    }
    return out.nodes[&node] = a;
  };
  walk(*plan);
  return out;
}

namespace {

std::string leaf_label(const PlanNode& node, const JoinGraph& graph) {
  const auto& v = graph.vertex(node.vertex);
  std::string out = std::string(to_string(node.access)) + " " + v.table;
  if (v.alias != v.table) out += " AS " + v.alias;
  for (std::size_t i = 0; i < node.selections.size(); ++i) {
    out += i == 0 ? "  [" : " AND ";
    out += render_predicate(graph.spec().selections[static_cast<std::size_t>(node.selections[i])]);
  }
  if (!node.selections.empty()) out += "]";
  return out;
}

std::string join_label(const PlanNode& node, const JoinGraph& graph) {
  std::string out(to_string(node.algo));
  if (node.algo == JoinAlgo::HJ) out += node.build == BuildSide::Left ? " build=left" : " build=right";
  for (std::size_t i = 0; i < node.predicates.size(); ++i) {
    out += i == 0 ? "  ON " : " AND ";
    out += render_predicate(graph.spec().joins[static_cast<std::size_t>(node.predicates[i])]);
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

}  // namespace

std::string render_plan_text(const PlanNode& plan, const JoinGraph& graph, const AnnotatedPlan* annotations) {
  std::string out;
  std::function<void(const PlanNode&, int)> walk = [&](const PlanNode& node, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += node.is_leaf() ? leaf_label(node, graph) : join_label(node, graph);
    if (annotations) {
      const auto& a = annotations->at(node);
      out += "  (rows=" + format_number(a.rows) + " cost=" + format_number(a.self_cost) +
             " total=" + format_number(a.total_cost) + ")";
    }
    out += "\n";
    if (!node.is_leaf()) {
      walk(*node.left, depth + 1);
      walk(*node.right, depth + 1);
    }
  };
  walk(plan, 0);
  return out;
}

namespace {

class SqlRenderer {
 public:
  explicit SqlRenderer(const JoinGraph& graph) : graph_(graph) {}

  std::string render(const PlanNode& plan) {
    std::vector<int> selections;
    const std::string from = from_clause(plan, selections);
    std::string out = select_list() + "\nFROM " + from;
    out += where_clause(selections, "\n");
    return out + ";\n";
  }

 private:
  std::string select_list() const {
    const auto& output = graph_.spec().output;
    if (output.count_star()) return "SELECT COUNT(*)";
    std::string out = "SELECT ";
    for (std::size_t i = 0; i < output.min_columns.size(); ++i) {
      if (i) out += ", ";
      out += "MIN(" + output.min_columns[i].alias + "." + output.min_columns[i].column + ")";
      if (i < output.min_labels.size() && !output.min_labels[i].empty()) out += " AS " + output.min_labels[i];
    }
    return out;
  }

  std::string table_ref(int vertex) const {
    const auto& v = graph_.vertex(vertex);
    return v.table + " AS " + v.alias;
  }

  std::string where_clause(const std::vector<int>& selections, const std::string& indent) const {
    std::string out;
    for (std::size_t i = 0; i < selections.size(); ++i) {
      out += indent + (i == 0 ? "WHERE " : "  AND ");
      out += render_predicate(graph_.spec().selections[static_cast<std::size_t>(selections[i])]);
    }
    return out;
  }

  std::string on_clause(const PlanNode& node) const {
    std::string out;
    for (std::size_t i = 0; i < node.predicates.size(); ++i) {
      out += i == 0 ? " ON " : " AND ";
      out += render_predicate(graph_.spec().joins[static_cast<std::size_t>(node.predicates[i])]);
    }
    return out;
  }

  // Left inputs extend the JOIN chain; a composite right input becomes a
  // derived table carrying its own selections.
  std::string from_clause(const PlanNode& node, std::vector<int>& selections) {
    if (node.is_leaf()) {
      selections.insert(selections.end(), node.selections.begin(), node.selections.end());
      return table_ref(node.vertex);
    }
    std::string out = from_clause(*node.left, selections);
    out += "\n  JOIN ";
    if (node.right->is_leaf()) {
      selections.insert(selections.end(), node.right->selections.begin(), node.right->selections.end());
      out += table_ref(node.right->vertex);
    } else {
      std::vector<int> inner;
      const std::string inner_from = from_clause(*node.right, inner);
      out += "(SELECT * FROM " + inner_from + where_clause(inner, " ") + ") AS sq" + std::to_string(++subqueries_);
    }
    out += on_clause(node);
    return out;
  }

  const JoinGraph& graph_;
  int subqueries_ = 0;
};

}  // namespace

std::string render_sql(const PlanNode& plan, const JoinGraph& graph) { return SqlRenderer(graph).render(plan); }

std::string plan_digest(const PlanNode& plan, const JoinGraph& graph) {
  if (plan.is_leaf()) return std::string(to_string(plan.access)) + "(" + graph.vertex(plan.vertex).alias + ")";
  std::string out(to_string(plan.algo));
  if (plan.algo == JoinAlgo::HJ) out += plan.build == BuildSide::Left ? "[L]" : "[R]";
  return out + "(" + plan_digest(*plan.left, graph) + "," + plan_digest(*plan.right, graph) + ")";
}

OperatorCensus count_operators(const PlanNode& plan) {
  OperatorCensus census;
  plan.visit([&](const PlanNode& node) {
    if (node.is_leaf()) {
      (node.access == AccessPath::SS ? census.ss : census.is) += 1;
    } else {
      (node.algo == JoinAlgo::HJ ? census.hj : census.nlj) += 1;
    }
  });
  return census;
}

const PlanNode* first_join(const PlanNode& plan) {
  if (plan.is_leaf()) return nullptr;
  if (const auto* inner = first_join(*plan.left)) return inner;
  if (const auto* inner = first_join(*plan.right)) return inner;
  return &plan;
}

}  // namespace qolab
