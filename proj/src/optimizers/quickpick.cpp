#include <random>
#include <thread>

#include "qolab/error.hpp"
#include "qolab/optimizers.hpp"

namespace qolab {

namespace {

struct Chooser {
  const JoinGraph& graph;
  const Catalog& catalog;
  const OptimizerConfig& config;
  const CardinalityProvider* provider;
  const CostParams& params;

  PlanPtr merge(const PlanPtr& a, const PlanPtr& b, std::mt19937_64& rng) const {
    if (config.policy == OperatorPolicy::HashOnly || catalog.setting() != Setting::Indexed) {
      const BuildSide side = std::bernoulli_distribution(0.5)(rng) ? BuildSide::Left : BuildSide::Right;
      return make_join(graph, a, b, JoinAlgo::HJ, side);
    }
    if (!provider) throw OptimizerError("indexed operator choice needs a cardinality provider");
    const double ra = provider->cardinality(a->aliases);
    const double rb = provider->cardinality(b->aliases);
    const double out = provider->cardinality(a->aliases | b->aliases);

    // Local cost of each candidate: its operator plus any leaf whose access
    // path the choice decides.
    const double hj_left = cost_node(HashJoinCards{ra, out}, params);
    const double hj_right = cost_node(HashJoinCards{rb, out}, params);
    double best = std::min(hj_left, hj_right);
    PlanPtr plan = make_join(graph, a, b, JoinAlgo::HJ, hj_right < hj_left ? BuildSide::Right : BuildSide::Left);
    auto leaf_scan = [&](const PlanPtr& p) {
      return p->is_leaf() ? cost_node(ScanCards{static_cast<double>(graph.vertex(p->vertex).rows)}, params) : 0.0;
    };
    const double hj_base = leaf_scan(a) + leaf_scan(b);
    best += hj_base;
    auto try_nlj = [&](const PlanPtr& outer, double outer_rows, const PlanPtr& inner) {
      if (!inner->is_leaf() || !index_lookup_predicate(graph, catalog, outer->aliases, inner->vertex)) return;
      const double cost = leaf_scan(outer) + cost_node(IndexScanCards{}, params) +
                          cost_node(NestedLoopCards{outer_rows, out}, params);
      if (cost < best) {
        best = cost;
        plan = make_join(graph, outer, make_leaf(graph, inner->vertex, AccessPath::IS), JoinAlgo::NLJ,
                         BuildSide::Right);
      }
    };
    try_nlj(a, ra, b);
    try_nlj(b, rb, a);
    return plan;
  }
};

PlanPtr sample_one(const Chooser& chooser, std::mt19937_64& rng) {
  const JoinGraph& graph = chooser.graph;
  const int n = graph.size();
  std::vector<PlanPtr> trees(static_cast<std::size_t>(n));
  std::vector<int> owner(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    trees[static_cast<std::size_t>(v)] = make_leaf(graph, v);
    owner[static_cast<std::size_t>(v)] = v;
  }
  std::vector<int> candidates;
  for (int merges = 0; merges < n - 1; ++merges) {
    candidates.clear();
    for (std::size_t e = 0; e < graph.edges().size(); ++e) {
      const auto& edge = graph.edges()[e];
      if (owner[static_cast<std::size_t>(edge.a)] != owner[static_cast<std::size_t>(edge.b)]) {
        candidates.push_back(static_cast<int>(e));
      }
    }
    if (candidates.empty()) throw OptimizerError("join graph is disconnected");
    const auto& edge = graph.edges()[static_cast<std::size_t>(
        candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)])];
    const int ta = owner[static_cast<std::size_t>(edge.a)];
    const int tb = owner[static_cast<std::size_t>(edge.b)];
    PlanPtr merged = chooser.merge(trees[static_cast<std::size_t>(ta)], trees[static_cast<std::size_t>(tb)], rng);
    for (auto& o : owner) {
      if (o == tb) o = ta;
    }
    trees[static_cast<std::size_t>(ta)] = std::move(merged);
    trees[static_cast<std::size_t>(tb)].reset();
  }
  return trees[static_cast<std::size_t>(owner.front())];
}

}  // namespace

std::vector<PlanPtr> quickpick_sample(const JoinGraph& graph, const Catalog& catalog, const QuickPickOptions& options,
                                      const OptimizerConfig& config, const CardinalityProvider* provider,
                                      const CostParams& params) {
  config.validate();
  if (options.n == 0) throw OptimizerError("sample size must be positive");
  if (graph.size() == 0 || !graph.connected(graph.all())) throw OptimizerError("join graph is disconnected");
  const Chooser chooser{graph, catalog, config, provider, params};
  const std::size_t shards = static_cast<std::size_t>(std::max(1, options.shards));
  std::vector<std::vector<PlanPtr>> parts(shards);
  std::vector<std::exception_ptr> errors(shards);
  auto run = [&](std::size_t s) {
    try {
      const std::size_t begin = options.n * s / shards;
      const std::size_t end = options.n * (s + 1) / shards;
      std::mt19937_64 rng(options.seed + s);
      for (std::size_t i = begin; i < end; ++i) parts[s].push_back(sample_one(chooser, rng));
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(shards, static_cast<std::size_t>(std::max(1, options.workers)));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t s = w; s < shards; s += workers) run(s);
    });
  }
  for (std::size_t s = 0; s < shards; s += workers) run(s);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<PlanPtr> out;
  out.reserve(options.n);
  for (auto& p : parts) {
    for (auto& plan : p) out.push_back(std::move(plan));
  }
  return out;
}

}  // namespace qolab
