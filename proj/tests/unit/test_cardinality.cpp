#include <gtest/gtest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "qolab/cardinality.hpp"
#include "qolab/error.hpp"
#include "qolab/generator.hpp"

using namespace qolab;

namespace {

Column ints(std::vector<std::int64_t> v) {
  Column c(DataType::Int64);
  c.mutable_ints() = std::move(v);
  return c;
}

SelectionPredicate pred(SelectionOp op, std::vector<Value> operands) {
  return SelectionPredicate{{"a", "x"}, op, std::move(operands)};
}

}  // namespace

TEST(ColumnStats, McvAndHistogram) {
  // 1 x5, 2 x3, then 3..10 once each.
  std::vector<std::int64_t> v = {1, 1, 1, 1, 1, 2, 2, 2};
  for (int i = 3; i <= 10; ++i) v.push_back(i);
  const auto s = build_column_stats(ints(v), 2, 4);
  EXPECT_EQ(s.rows, 16u);
  EXPECT_EQ(s.ndv, 10u);
  ASSERT_EQ(s.mcv.size(), 2u);
  EXPECT_EQ(s.mcv[0].first, Value{std::int64_t{1}});
  EXPECT_DOUBLE_EQ(s.mcv[0].second, 5.0 / 16);
  EXPECT_DOUBLE_EQ(s.mcv_mass(), 0.5);
  ASSERT_EQ(s.histogram.size(), 5u);
  EXPECT_EQ(s.histogram.front(), Value{std::int64_t{3}});
  EXPECT_EQ(s.histogram.back(), Value{std::int64_t{10}});
  EXPECT_EQ(*s.min, Value{std::int64_t{1}});
  EXPECT_EQ(*s.max, Value{std::int64_t{10}});
}

TEST(Selectivity, EqualityUsesMcvThenUniformRest) {
  std::vector<std::int64_t> v = {1, 1, 1, 1, 1, 2, 2, 2};
  for (int i = 3; i <= 10; ++i) v.push_back(i);
  const auto s = build_column_stats(ints(v), 2, 4);
  EXPECT_DOUBLE_EQ(selectivity_selection(pred(SelectionOp::Eq, {std::int64_t{1}}), s), 5.0 / 16);
  EXPECT_DOUBLE_EQ(selectivity_selection(pred(SelectionOp::Eq, {std::int64_t{7}}), s), 0.5 / 8);
  EXPECT_DOUBLE_EQ(selectivity_selection(pred(SelectionOp::In, {std::int64_t{2}, std::int64_t{7}, std::int64_t{2}}), s),
                   3.0 / 16 + 0.5 / 8);
  EXPECT_DOUBLE_EQ(selectivity_selection(pred(SelectionOp::Ne, {std::int64_t{1}}), s), 11.0 / 16);
  EXPECT_DOUBLE_EQ(selectivity_selection(pred(SelectionOp::Like, {std::string("%x%")}), s), 0.01);
}

TEST(Selectivity, IntegerRangesExactOnUniformData) {
  std::vector<std::int64_t> v;
  for (int i = 0; i < 100; ++i) v.push_back(i);
  const auto s = build_column_stats(ints(v), 0, 10);
  EXPECT_NEAR(selectivity_selection(pred(SelectionOp::Lt, {std::int64_t{30}}), s), 0.30, 1e-12);
  EXPECT_NEAR(selectivity_selection(pred(SelectionOp::Le, {std::int64_t{30}}), s), 0.31, 1e-12);
  EXPECT_NEAR(selectivity_selection(pred(SelectionOp::Between, {std::int64_t{10}, std::int64_t{19}}), s), 0.10, 1e-12);
  EXPECT_NEAR(selectivity_selection(pred(SelectionOp::Gt, {std::int64_t{89}}), s), 0.10, 1e-12);
  EXPECT_EQ(selectivity_selection(pred(SelectionOp::Gt, {std::int64_t{500}}), s), 0.0);
  EXPECT_EQ(selectivity_selection(pred(SelectionOp::Ge, {std::int64_t{-5}}), s), 1.0);
}

TEST(Estimator, ShopExamples) {
  const auto c = fixture::shop();
  const auto stats = build_stats(c);
  const auto g = build_join_graph(parse_query(fixture::kShopQuery), c);
  // d1 (4) x f1 (10) / ndv(id)=4
  EXPECT_DOUBLE_EQ(estimate_cardinality(0b0101, g, stats), 10.0);
  EXPECT_DOUBLE_EQ(estimate_cardinality(0b0001, g, stats), 4.0);
  EXPECT_THROW(estimate_cardinality(0b0011, g, stats), PlanError);
  // f1.k has 5 distinct values, f2.k 4: 10*6/5.
  EXPECT_DOUBLE_EQ(estimate_cardinality(0b1100, g, stats), 12.0);
  const EstimatedProvider est(g, stats);
  EXPECT_EQ(est.cardinality(0b0101), 10.0);
}

TEST(Estimator, ClampsAtOneUnlessEmpty) {
  auto c = fixture::shop();
  const auto stats = build_stats(c);
  const auto g = build_join_graph(
      parse_query("SELECT COUNT(*) FROM d1, f1 WHERE d1.id = f1.d1_id AND d1.id = 1 AND f1.k = 99"), c);
  EXPECT_EQ(estimate_cardinality(g.all(), g, stats), 1.0);

  load_table_csv_text("id,name\n", "d1", c);
  const auto g2 = build_join_graph(parse_query("SELECT COUNT(*) FROM d1, f1 WHERE d1.id = f1.d1_id"), c);
  EXPECT_EQ(estimate_cardinality(g2.all(), g2, build_stats(c)), 0.0);
}

TEST(Estimator, ExactOnUniformKeyJoins) {
  auto config = star_config({{"d1", 200}}, {{"f1", 2000, {"d1"}, 0}}, 9, 0.0, 1.0, 0.0);
  const auto c = generate_catalog(config);
  const auto stats = build_stats(c);
  const auto g = build_join_graph(parse_query("SELECT COUNT(*) FROM f1, d1 WHERE f1.d1_id = d1.id"), c);
  TrueCardMemo memo;
  const auto truth = true_cardinality(g.all(), g, c, memo, {});
  EXPECT_EQ(estimate_cardinality(g.all(), g, stats), static_cast<double>(truth));
}

TEST(StatsFile, RoundTrip) {
  const auto c = fixture::shop();
  const auto stats = build_stats(c, {.mcv_slots = 2, .buckets = 3});
  const auto again = load_stats(save_stats(stats));
  EXPECT_EQ(save_stats(again), save_stats(stats));
  EXPECT_EQ(again.params.mcv_slots, 2);
  EXPECT_EQ(again.at("d1", "name").dtype, DataType::Text);
  EXPECT_EQ(again.at("f1", "k").ndv, stats.at("f1", "k").ndv);
}

TEST(TrueCard, MatchesOracleAndMemoizes) {
  const auto c = fixture::shop();
  const auto g = build_join_graph(parse_query(fixture::kShopQuery), c);
  TrueCardMemo memo;
  precompute_true_cardinalities(g, c, memo, {});
  const auto subsets = connected_subsets(g);
  EXPECT_EQ(memo.size(), subsets.size());
  for (AliasSet s : subsets) EXPECT_EQ(*memo.find(s), oracle::nested_loop_count(s, g, c)) << g.describe(s);
  for (std::size_t i = 1; i < subsets.size(); ++i)
    EXPECT_LE(alias_count(subsets[i - 1]), alias_count(subsets[i]));

  TrueCardStore store;
  store_memo(store, g, memo);
  TrueCardMemo restored;
  restore_memo(load_truecard_store(save_truecard_store(store)), g, restored);
  EXPECT_EQ(restored.entries(), memo.entries());
}

TEST(Providers, BaseOnlyAnswersUnfilteredSingletonsOnly) {
  const auto c = fixture::shop();
  const auto g = build_join_graph(parse_query("SELECT COUNT(*) FROM d1, f1 WHERE d1.id = f1.d1_id AND f1.k = 5"), c);
  const BaseOnlyProvider base(g);
  EXPECT_EQ(base.cardinality(0b01), 4.0);
  EXPECT_THROW(base.cardinality(0b10), Error);
  EXPECT_THROW(base.cardinality(0b11), Error);
}
