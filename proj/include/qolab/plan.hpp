#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qolab/catalog.hpp"
#include "qolab/cost_model.hpp"
#include "qolab/frontend.hpp"

namespace qolab {

enum class AccessPath { SS, IS };
enum class JoinAlgo { HJ, NLJ };
enum class BuildSide { Left, Right };

std::string_view to_string(AccessPath access);
std::string_view to_string(JoinAlgo algo);

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

/// Binary operator tree. Leaves scan one query alias (selections applied
/// during the scan); joins apply every query join predicate crossing their
/// left/right alias partition. For NLJ the left child is the outer input and
/// the right child is the indexed inner leaf.
struct PlanNode {
  AliasSet aliases = 0;

  // Leaf
  int vertex = -1;
  AccessPath access = AccessPath::SS;
  std::vector<int> selections;

  // Join
  JoinAlgo algo = JoinAlgo::HJ;
  BuildSide build = BuildSide::Left;
  PlanPtr left;
  PlanPtr right;
  std::vector<int> predicates;

  bool is_leaf() const noexcept { return vertex >= 0; }
  const PlanNode& build_child() const { return build == BuildSide::Left ? *left : *right; }
  const PlanNode& probe_child() const { return build == BuildSide::Left ? *right : *left; }

  /// Pre-order traversal.
  template <typename Fn>
  void visit(Fn&& fn) const {
    fn(*this);
    if (!is_leaf()) {
      left->visit(fn);
      right->visit(fn);
    }
  }

  std::size_t node_count() const;
};

PlanPtr make_leaf(const JoinGraph& graph, int vertex, AccessPath access = AccessPath::SS);

/// Joins two disjoint subplans, attaching all crossing predicates. Does not
/// check validity; see validate_plan.
PlanPtr make_join(const JoinGraph& graph, PlanPtr left, PlanPtr right, JoinAlgo algo,
                  BuildSide build = BuildSide::Left);

/// The crossing predicate an NLJ uses for its index lookup: the first
/// predicate (ascending) whose inner-side column has an index. nullopt when
/// none qualifies or the catalog is not in the indexed setting.
std::optional<int> index_lookup_predicate(const JoinGraph& graph, const Catalog& catalog, AliasSet outer,
                                          int inner_vertex);

/// Column reference of predicate p on the side belonging to vertex v.
const ColumnRef& predicate_side(const JoinGraph& graph, int predicate, int vertex);

/// Structural validation. Returns human-readable violations; empty means valid.
std::vector<std::string> validate_plan(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog);

/// Interface to any source of sub-expression cardinalities. Implementations
/// live in cardinality.hpp.
class CardinalityProvider {
 public:
  virtual ~CardinalityProvider() = default;
  /// Row count of the sub-join over set with all implied selections and
  /// join predicates. Throws when the regime cannot answer.
  virtual double cardinality(AliasSet set) const = 0;
  virtual std::string id() const = 0;
};

struct NodeAnnotation {
  double rows = 0;
  double self_cost = 0;
  double total_cost = 0;
};

struct AnnotatedPlan {
  PlanPtr plan;
  std::unordered_map<const PlanNode*, NodeAnnotation> nodes;
  std::string provider_id;

  const NodeAnnotation& at(const PlanNode& node) const;
  double rows() const { return at(*plan).rows; }
  double cost() const { return at(*plan).total_cost; }
};

/// Annotates every node with its cardinality (from provider) and cost (C_mm).
AnnotatedPlan annotate(const PlanPtr& plan, const JoinGraph& graph, const CardinalityProvider& provider,
                       const CostParams& params);

/// Indented tree, one node per line; annotations included when given.
std::string render_plan_text(const PlanNode& plan, const JoinGraph& graph, const AnnotatedPlan* annotations = nullptr);

/// SQL with explicit JOIN ... ON nesting that mirrors the tree. A join whose
/// right input is itself a join is rendered as a derived-table subquery.
std::string render_sql(const PlanNode& plan, const JoinGraph& graph);

/// Canonical text identifying tree shape, operators, access paths and build
/// sides.
std::string plan_digest(const PlanNode& plan, const JoinGraph& graph);

struct OperatorCensus {
  std::size_t ss = 0;
  std::size_t is = 0;
  std::size_t hj = 0;
  std::size_t nlj = 0;

  std::size_t total() const noexcept { return ss + is + hj + nlj; }
  OperatorCensus& operator+=(const OperatorCensus& o) {
    ss += o.ss;
    is += o.is;
    hj += o.hj;
    nlj += o.nlj;
    return *this;
  }
};

OperatorCensus count_operators(const PlanNode& plan);

/// The first join executed in a left-to-right post-order walk: the leftmost
/// join node whose children are both leaves. nullptr for single-leaf plans.
const PlanNode* first_join(const PlanNode& plan);

}  // namespace qolab
