#pragma once

#include <variant>

namespace qolab {

struct AnnotatedPlan;

/// Parameters of the main-memory cost function: tau scales a sequential scan
/// relative to processing a tuple in a join, lambda is the price of an index
/// lookup relative to a hash lookup.
struct CostParams {
  double tau = 0.2;
  double lambda = 2.0;

  /// Throws qolab::Error unless tau > 0 and lambda >= 1.
  void validate() const;
};

/// Operand cardinalities of one plan node, by operator kind.
struct ScanCards {
  double base_rows = 0;  ///< unfiltered |R|: a scan touches every tuple
};
struct IndexScanCards {};
struct HashJoinCards {
  double build = 0;
  double out = 0;
};
struct NestedLoopCards {
  double outer = 0;
  double out = 0;
};

using NodeCards = std::variant<ScanCards, IndexScanCards, HashJoinCards, NestedLoopCards>;

/// Cost of a single node, excluding its children:
///   SS  -> tau * |R|
///   IS  -> 0
///   HJ  -> |build| + |out|
///   NLJ -> lambda * |outer| * max(|out| / |outer|, 1), 0 when |outer| = 0
/// Throws qolab::Error on negative cardinalities.
double cost_node(const NodeCards& cards, const CostParams& params);

/// Cumulative cost at a node: children first, then the node itself. Shared by
/// plan annotation and the DP enumerator so both sum in the same order.
inline double accumulate_cost(double left_total, double right_total, double self) {
  return (left_total + right_total) + self;
}

/// Root cumulative cost. Throws qolab::PlanError if any node is unannotated.
double cost_plan(const AnnotatedPlan& plan);

}  // namespace qolab
