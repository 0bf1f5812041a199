#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qolab/catalog.hpp"
#include "qolab/frontend.hpp"
#include "qolab/plan.hpp"

namespace qolab {

struct ExecConfig {
  int workers = 1;
  int runs = 11;
  std::chrono::milliseconds timeout{30'000};
  /// Largest intermediate result (rows) before execution is abandoned.
  std::uint64_t max_rows = 100'000'000;
};

/// Order-insensitive digest of a multiset of result rows. A row is the list
/// of base-table row ids of every query alias, in vertex order.
class ResultDigest {
 public:
  static constexpr std::uint64_t kEmpty = 0x51ED270B27D3A1C5ULL;

  void add_row(std::span<const RowId> row_ids);
  void add_hash(std::uint64_t row_hash) {
    sum_ += row_hash;
    ++count_;
  }
  void merge(const ResultDigest& other) {
    sum_ += other.sum_;
    count_ += other.count_;
  }
  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t value() const noexcept;

  static std::uint64_t hash_row(std::span<const RowId> row_ids);

 private:
  std::uint64_t sum_ = 0;
  std::uint64_t count_ = 0;
};

std::string format_digest(std::uint64_t digest);

struct ResultSummary {
  std::uint64_t row_count = 0;
  std::uint64_t digest = ResultDigest::kEmpty;
  /// MIN(...) outputs in query order; nullopt for an empty result.
  std::vector<std::optional<Value>> aggregates;
  std::vector<double> elapsed_ms;
  double median_ms = 0;
  bool timed_out = false;
};

/// Runs a validated plan config.runs times and reports the median wall-clock
/// time. Throws PlanError when an IS leaf has no usable index. A run that
/// exceeds config.timeout (or config.max_rows) stops the repetition and
/// yields timed_out with median_ms equal to the timeout.
ResultSummary execute_plan(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog,
                           const ExecConfig& config);

struct ExecBudget {
  std::chrono::milliseconds timeout{30'000};
  std::uint64_t max_rows = 100'000'000;
  int workers = 1;
};

/// Exact row count of the sub-join over key (selections and internal join
/// predicates included). Uses a left-deep hash-join order that takes 1:n
/// edges and small tables first. Throws BudgetExceeded.
std::uint64_t execute_subset(AliasSet key, const JoinGraph& graph, const Catalog& catalog, const ExecBudget& budget);

/// Same, joining in the given vertex order (each prefix must be connected).
std::uint64_t execute_subset_in_order(AliasSet key, const std::vector<int>& order, const JoinGraph& graph,
                                      const Catalog& catalog, const ExecBudget& budget);

/// Order execute_subset uses for key.
std::vector<int> default_subset_order(AliasSet key, const JoinGraph& graph);

/// Left-deep hash-join plan over key in the given order, building on the
/// incoming base relation. Useful for sub-join evaluation.
PlanPtr left_deep_hash_plan(const std::vector<int>& order, const JoinGraph& graph);

/// SQL LIKE with % and _ wildcards, case-sensitive.
bool like_match(std::string_view text, std::string_view pattern);

/// Evaluates a selection predicate against one stored value.
bool selection_matches(const SelectionPredicate& pred, const Column& column, RowId row);

}  // namespace qolab
