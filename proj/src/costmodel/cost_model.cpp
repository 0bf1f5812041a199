#include "qolab/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qolab/error.hpp"
#include "qolab/plan.hpp"

namespace qolab {

namespace {

void check(double cardinality) {
  if (!(cardinality >= 0)) throw Error("negative cardinality " + std::to_string(cardinality));
}

struct NodeCost {
  const CostParams& params;

  double operator()(const ScanCards& c) const {
    check(c.base_rows);
    return params.tau * c.base_rows;
  }
  double operator()(const IndexScanCards&) const { return 0.0; }
  double operator()(const HashJoinCards& c) const {
    check(c.build);
    check(c.out);
    return c.build + c.out;
  }
  double operator()(const NestedLoopCards& c) const {
    check(c.outer);
    check(c.out);
    if (c.outer == 0) return 0.0;
    return params.lambda * c.outer * std::max(c.out / c.outer, 1.0);
  }
};

}  // namespace

void CostParams::validate() const {
  if (!(tau > 0)) throw Error("tau must be positive");
  if (!(lambda >= 1)) throw Error("lambda must be at least 1");
}

double cost_node(const NodeCards& cards, const CostParams& params) { return std::visit(NodeCost{params}, cards); }

double cost_plan(const AnnotatedPlan& plan) {
  if (!plan.plan) throw PlanError("empty plan");
  plan.plan->visit([&](const PlanNode& node) {
    if (!plan.nodes.count(&node)) throw PlanError("missing annotation on plan node");
  });
  return plan.at(*plan.plan).total_cost;
}

}  // namespace qolab
