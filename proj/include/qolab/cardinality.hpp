#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qolab/catalog.hpp"
#include "qolab/executor.hpp"
#include "qolab/frontend.hpp"
#include "qolab/plan.hpp"

namespace qolab {

struct StatsParams {
  int mcv_slots = 10;
  int buckets = 20;
  double like_selectivity = 0.01;
};

struct ColumnStats {
  DataType dtype = DataType::Int64;
  std::uint64_t rows = 0;
  std::optional<Value> min;
  std::optional<Value> max;
  std::uint64_t ndv = 0;
  double null_frac = 0;
  /// (value, frequency as a fraction of rows), most frequent first.
  std::vector<std::pair<Value, double>> mcv;
  /// Equi-depth bucket boundaries over the non-MCV values; buckets + 1
  /// entries, or empty when every value is an MCV.
  std::vector<Value> histogram;

  double mcv_mass() const;
};

ColumnStats build_column_stats(const Column& column, int mcv_slots, int buckets);

struct TableStats {
  std::uint64_t rows = 0;
  std::map<std::string, ColumnStats, std::less<>> columns;
};

class StatsCatalog {
 public:
  StatsParams params;

  const ColumnStats& at(std::string_view table, std::string_view column) const;
  const TableStats& table(std::string_view table) const;
  bool has(std::string_view table, std::string_view column) const;
  void put(const std::string& table, TableStats stats) { tables_[table] = std::move(stats); }
  ColumnStats& mutable_column(std::string_view table, std::string_view column);
  const std::map<std::string, TableStats, std::less<>>& tables() const noexcept { return tables_; }

 private:
  std::map<std::string, TableStats, std::less<>> tables_;
};

/// Statistics for every column of every loaded table.
StatsCatalog build_stats(const Catalog& catalog, const StatsParams& params = {});

std::string save_stats(const StatsCatalog& stats);
StatsCatalog load_stats(std::string_view document);

double selectivity_selection(const SelectionPredicate& pred, const ColumnStats& stats, const StatsParams& params = {});
double selectivity_join(const ColumnStats& left, const ColumnStats& right);

/// Independence-based estimate for the sub-join over key: product of base
/// counts, selection selectivities and per-predicate join selectivities of
/// edges internal to key. Clamped below at 1 unless a base table is empty.
double estimate_cardinality(AliasSet key, const JoinGraph& graph, const StatsCatalog& stats);

/// Per-query exact cardinalities keyed by alias set. Concurrent readers,
/// exclusive insertion.
class TrueCardMemo {
 public:
  std::optional<std::uint64_t> find(AliasSet key) const;
  void put(AliasSet key, std::uint64_t rows);
  std::size_t size() const;
  std::map<AliasSet, std::uint64_t> entries() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<AliasSet, std::uint64_t> map_;
};

std::uint64_t true_cardinality(AliasSet key, const JoinGraph& graph, const Catalog& catalog, TrueCardMemo& memo,
                               const ExecBudget& budget);

/// All connected alias subsets of the graph in increasing size, then
/// increasing mask.
std::vector<AliasSet> connected_subsets(const JoinGraph& graph);

/// Fills memo for every connected subset.
void precompute_true_cardinalities(const JoinGraph& graph, const Catalog& catalog, TrueCardMemo& memo,
                                   const ExecBudget& budget);

/// Key→count file: {"query": {"a,b": rows, ...}, ...} with alias names.
using TrueCardStore = std::map<std::string, std::map<std::string, std::uint64_t>>;
std::string key_name(AliasSet key, const JoinGraph& graph);
void store_memo(TrueCardStore& store, const JoinGraph& graph, const TrueCardMemo& memo);
void restore_memo(const TrueCardStore& store, const JoinGraph& graph, TrueCardMemo& memo);
std::string save_truecard_store(const TrueCardStore& store);
TrueCardStore load_truecard_store(std::string_view document);

class BaseOnlyProvider final : public CardinalityProvider {
 public:
  explicit BaseOnlyProvider(const JoinGraph& graph) : graph_(graph) {}
  double cardinality(AliasSet set) const override;
  std::string id() const override { return "base_only"; }

 private:
  const JoinGraph& graph_;
};

class EstimatedProvider final : public CardinalityProvider {
 public:
  EstimatedProvider(const JoinGraph& graph, const StatsCatalog& stats) : graph_(graph), stats_(stats) {}
  double cardinality(AliasSet set) const override { return estimate_cardinality(set, graph_, stats_); }
  std::string id() const override { return "estimated"; }

 private:
  const JoinGraph& graph_;
  const StatsCatalog& stats_;
};

class TrueCardProvider final : public CardinalityProvider {
 public:
  TrueCardProvider(const JoinGraph& graph, const Catalog& catalog, TrueCardMemo& memo, ExecBudget budget = {})
      : graph_(graph), catalog_(catalog), memo_(memo), budget_(budget) {}
  double cardinality(AliasSet set) const override {
    return static_cast<double>(true_cardinality(set, graph_, catalog_, memo_, budget_));
  }
  std::string id() const override { return "true_card"; }

 private:
  const JoinGraph& graph_;
  const Catalog& catalog_;
  TrueCardMemo& memo_;
  ExecBudget budget_;
};

}  // namespace qolab
