#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qolab/cardinality.hpp"
#include "qolab/catalog.hpp"
#include "qolab/cost_model.hpp"
#include "qolab/executor.hpp"
#include "qolab/frontend.hpp"
#include "qolab/optimizers.hpp"
#include "qolab/plan.hpp"

namespace qolab {

enum class Method { TrueCard, CE, NoCE, QuickPick };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
std::vector<Method> parse_methods(std::string_view comma_list);
std::vector<Setting> parse_settings(std::string_view comma_list);

struct HarnessOptions {
  std::vector<Method> methods = {Method::TrueCard, Method::CE, Method::NoCE, Method::QuickPick};
  std::vector<Setting> settings = {Setting::NonIndexed, Setting::Indexed};
  ExecConfig exec;
  CostParams cost;
  PlanShape shape = PlanShape::Bushy;
  /// The quickpick method keeps the cheapest of this many samples under
  /// estimated cardinalities.
  std::size_t quickpick_n = 100;
  std::uint64_t seed = 42;
  /// Budget for each sub-join executed to collect exact cardinalities.
  ExecBudget truecard_budget;
  bool execute = true;
};

/// A query bound to a catalog, with its exact-cardinality memo.
struct QueryContext {
  QuerySpec spec;
  JoinGraph graph;
  std::unique_ptr<TrueCardMemo> memo = std::make_unique<TrueCardMemo>();

  QueryContext(QuerySpec s, const Catalog& catalog);
  /// Computes every connected sub-join count not yet memoized.
  void ensure_true_cards(const Catalog& catalog, const ExecBudget& budget) const;
};

struct MethodPlan {
  PlanPtr plan;
  double plan_time_ms = 0;
};

/// Optimizes with one method in the catalog's current setting. Exact
/// cardinalities must already be in the context's memo (they are injected,
/// not measured as planning time).
MethodPlan optimize_query(Method method, const QueryContext& query, const Catalog& catalog, const StatsCatalog& stats,
                          const HarnessOptions& options);

struct MetricsRow {
  std::string query;
  Method method = Method::TrueCard;
  Setting setting = Setting::NonIndexed;
  int workers = 1;
  double plan_time_ms = 0;
  double exec_time_median_ms = 0;
  double cost_under_true_cards = 0;
  /// Absent for noce, which has no cardinalities of its own.
  std::optional<double> cost_under_method_cards;
  std::uint64_t result_count = 0;
  OperatorCensus census;
  bool timed_out = false;
  /// Not part of the report columns.
  std::string plan_digest;
  std::uint64_t result_digest = ResultDigest::kEmpty;
};

struct AggregateRow {
  Method method = Method::TrueCard;
  Setting setting = Setting::NonIndexed;
  int workers = 1;
  std::size_t queries = 0;
  double cumulative_cost = 0;
  double cumulative_exec_ms = 0;
  double cumulative_plan_ms = 0;
  /// Relative to the truecard rows of the same queries, setting and workers.
  double cost_ratio = 0;
  double exec_ratio = 0;
  double total_ratio = 0;
};

struct QueryFailure {
  std::string query;
  std::string method;
  std::string setting;
  std::string message;
  /// Budget exhaustion rather than an internal error.
  bool timeout = false;
};

struct WorkloadReport {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<QueryFailure> failures;
};

/// Optimizes, annotates and (optionally) executes every query with every
/// method and setting. Switches the catalog's setting and indexes. Failures
/// are recorded and the run continues.
WorkloadReport run_workload(std::vector<QueryContext>& queries, Catalog& catalog, const StatsCatalog& stats,
                            const HarnessOptions& options);

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_failures_csv(std::ostream& out, const std::vector<QueryFailure>& rows);

struct DistributionRow {
  std::string kind;  // sample, truecard, ce, noce
  std::size_t index = 0;
  std::string digest;
  double cost = 0;  // under exact cardinalities
  double normalized_cost = 0;
  std::optional<double> runtime_ms;
};

/// n QuickPick plans plus one marker row per optimizer, costed under exact
/// cardinalities and normalized by the truecard plan. The first
/// execute_first samples (and all markers, when positive) are executed.
std::vector<DistributionRow> distribution_experiment(const QueryContext& query, const Catalog& catalog,
                                                     const StatsCatalog& stats, const HarnessOptions& options,
                                                     std::size_t n, std::size_t execute_first = 0);

void write_distribution_csv(std::ostream& out, const std::vector<DistributionRow>& rows);

struct SweepRow {
  std::string query;
  Method method = Method::TrueCard;
  Setting setting = Setting::NonIndexed;
  int workers = 1;
  double runtime_ms = 0;
  double speedup = 1;
  double change_pct = 0;
  bool timed_out = false;
};

enum class ChangeBucket { Negative, Low, High };
/// <0%, 0.1-39% (0 included), 40-94% (everything at or above 40 included).
ChangeBucket change_bucket(double change_pct);
std::string_view to_string(ChangeBucket bucket);

struct SweepBucketRow {
  Method method = Method::TrueCard;
  Setting setting = Setting::NonIndexed;
  int workers = 1;
  std::size_t negative = 0;
  std::size_t low = 0;
  std::size_t high = 0;
  double median_speedup = 1;
  double fraction_faster = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepBucketRow> buckets;
  std::vector<QueryFailure> failures;
};

/// Plans each query once per method and setting, then times it at every
/// worker count. worker_list must contain 1.
SweepReport thread_sweep(std::vector<QueryContext>& queries, Catalog& catalog, const StatsCatalog& stats,
                         const HarnessOptions& options, const std::vector<int>& worker_list);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_buckets_csv(std::ostream& out, const std::vector<SweepBucketRow>& rows);

struct CensusRow {
  Method method = Method::TrueCard;
  Setting setting = Setting::NonIndexed;
  int workers = 1;
  OperatorCensus census;
  std::size_t plans = 0;
};

std::vector<CensusRow> operator_census(const std::vector<MetricsRow>& rows);
void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows);

/// Writes a matplotlib script that plots the given CSV. kind is one of
/// run, distribution, sweep.
void write_plot_script(const std::string& path, const std::string& kind, const std::string& csv_path);

double median(std::vector<double> values);

}  // namespace qolab
