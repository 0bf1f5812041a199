#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qolab/catalog.hpp"
#include "qolab/cost_model.hpp"
#include "qolab/frontend.hpp"
#include "qolab/plan.hpp"

namespace qolab {

enum class PlanShape { Bushy, LeftDeep };
enum class OperatorPolicy { HashOnly, IndexedChoice };

std::string_view to_string(PlanShape shape);
PlanShape parse_shape(std::string_view text);

struct OptimizerConfig {
  Setting setting = Setting::NonIndexed;
  PlanShape shape = PlanShape::Bushy;
  OperatorPolicy policy = OperatorPolicy::HashOnly;
  int dp_table_limit = 14;

  /// Hash-only for non-indexed, indexed_choice otherwise.
  static OptimizerConfig for_setting(Setting setting, PlanShape shape = PlanShape::Bushy);
  void validate() const;
};

/// True when v is the foreign-key side of at least one one-to-many edge.
bool is_fk_table(const JoinGraph& graph, int v);
/// Key-side neighbours of FK table v, ascending by vertex id.
std::vector<int> pk_neighbors(const JoinGraph& graph, int v);

double c_s2(const JoinGraph& graph, int fk_vertex, Setting setting);

struct FkRank {
  int vertex = -1;
  double c_s2 = 0;
};

struct JoinOrderResult {
  std::vector<int> order;
  /// [begin, end) ranges of order, one per processed FK table that added
  /// aliases.
  std::vector<std::pair<std::size_t, std::size_t>> components;
  /// order[tail_begin, end) were appended by the trailing adjacency loop.
  std::size_t tail_begin = 0;
  std::vector<FkRank> fk_order;
};

/// Join order from key/foreign-key structure and base sizes only. Graphs
/// without FK tables fall back to ascending base size in one component.
JoinOrderResult simpli2_order(const JoinGraph& graph, Setting setting);

/// Non-indexed: each component is a left-deep HJ chain; components (and
/// tail aliases) are combined left-deep in order. Indexed: one left-deep
/// chain, NLJ+IS where the incoming leaf has an index on its join column.
/// A unit not adjacent to the accumulated plan waits until it is.
PlanPtr simpli2_plan(const JoinOrderResult& order, const JoinGraph& graph, const Catalog& catalog,
                     const OptimizerConfig& config);

struct DpStats {
  std::size_t subsets = 0;
  std::size_t pairs = 0;
};

/// Exhaustive DP over connected subsets; minimizes C_mm under provider.
PlanPtr dp_optimize(const JoinGraph& graph, const Catalog& catalog, const CardinalityProvider& provider,
                    const CostParams& params, const OptimizerConfig& config, DpStats* stats = nullptr);

struct QuickPickOptions {
  std::size_t n = 1;
  std::uint64_t seed = 1;
  /// Shard s draws from seed + s; output is concatenated in shard order.
  int shards = 1;
  int workers = 1;
};

/// Random plans by repeated contraction of a uniformly chosen edge between
/// distinct partial trees. provider and params are only consulted by the
/// indexed_choice operator rule and may be null for hash_only.
std::vector<PlanPtr> quickpick_sample(const JoinGraph& graph, const Catalog& catalog, const QuickPickOptions& options,
                                      const OptimizerConfig& config, const CardinalityProvider* provider = nullptr,
                                      const CostParams& params = {});

}  // namespace qolab
