#include <gtest/gtest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "qolab/error.hpp"
#include "qolab/generator.hpp"
#include "qolab/harness.hpp"

using namespace qolab;

namespace {

MetricsRow row(std::string q, Method m, double cost, double exec, double plan) {
  MetricsRow r;
  r.query = std::move(q);
  r.method = m;
  r.cost_under_true_cards = cost;
  r.exec_time_median_ms = exec;
  r.plan_time_ms = plan;
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Aggregate, SumsAndRatiosAgainstTrueCard) {
  const std::vector<MetricsRow> rows = {row("a", Method::TrueCard, 10, 1, 0.5), row("b", Method::TrueCard, 30, 3, 0.5),
                                        row("a", Method::NoCE, 20, 2, 0), row("b", Method::NoCE, 30, 4, 0)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 2u);
  const auto& tc = agg[0].method == Method::TrueCard ? agg[0] : agg[1];
  const auto& noce = agg[0].method == Method::NoCE ? agg[0] : agg[1];
  EXPECT_EQ(tc.queries, 2u);
  EXPECT_EQ(tc.cumulative_cost, 40.0);
  EXPECT_EQ(tc.cost_ratio, 1.0);
  EXPECT_EQ(noce.cumulative_cost, 50.0);
  EXPECT_DOUBLE_EQ(noce.cost_ratio, 50.0 / 40.0);
  EXPECT_DOUBLE_EQ(noce.exec_ratio, 6.0 / 4.0);
  EXPECT_DOUBLE_EQ(noce.total_ratio, 6.0 / 5.0);
  EXPECT_EQ(noce.cumulative_plan_ms, 0.0);
}

TEST(Sweep, ChangeBuckets) {
  EXPECT_EQ(change_bucket(-0.01), ChangeBucket::Negative);
  EXPECT_EQ(change_bucket(0), ChangeBucket::Low);
  EXPECT_EQ(change_bucket(39.9), ChangeBucket::Low);
  EXPECT_EQ(change_bucket(40), ChangeBucket::High);
  EXPECT_EQ(change_bucket(99), ChangeBucket::High);
  EXPECT_EQ(to_string(ChangeBucket::Low), "0.1-39%");
}

TEST(Harness, MethodParsing) {
  EXPECT_EQ(parse_method("simpli2"), Method::NoCE);
  EXPECT_EQ(parse_methods("truecard,ce").size(), 2u);
  EXPECT_EQ(parse_settings("both").size(), 2u);
  EXPECT_THROW(parse_method("magic"), Error);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Harness, WorkloadOnShop) {
  Catalog c = fixture::shop();
  std::vector<QueryContext> queries;
  auto spec = parse_query(fixture::kShopQuery);
  spec.name = "shop";
  queries.emplace_back(spec, c);
  auto spec2 = parse_query("SELECT MIN(d1.name) FROM d1, f2 WHERE d1.id = f2.d1_id AND f2.k < 7");
  spec2.name = "pair";
  queries.emplace_back(spec2, c);

  const auto stats = build_stats(c);
  HarnessOptions o;
  o.exec.runs = 1;
  o.quickpick_n = 10;
  const auto report = run_workload(queries, c, stats, o);
  EXPECT_TRUE(report.failures.empty());
  ASSERT_EQ(report.rows.size(), 2u * 4u * 2u);
  for (const auto& r : report.rows) {
    const auto& q = r.query == "shop" ? queries[0] : queries[1];
    EXPECT_EQ(r.result_count, oracle::nested_loop_count(q.graph.all(), q.graph, c)) << r.query;
    EXPECT_EQ(r.cost_under_method_cards.has_value(), r.method != Method::NoCE);
    if (r.setting == Setting::NonIndexed) EXPECT_EQ(r.census.nlj, 0u);
    if (r.method == Method::TrueCard) EXPECT_EQ(*r.cost_under_method_cards, r.cost_under_true_cards);
  }
  EXPECT_EQ(report.aggregates.size(), 8u);

  // Reproducible apart from timings.
  const auto again = run_workload(queries, c, stats, o);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    EXPECT_EQ(report.rows[i].plan_digest, again.rows[i].plan_digest);
    EXPECT_EQ(report.rows[i].cost_under_true_cards, again.rows[i].cost_under_true_cards);
    EXPECT_EQ(report.rows[i].result_digest, again.rows[i].result_digest);
  }

  std::ostringstream m, a, f;
  write_metrics_csv(m, report.rows);
  write_aggregates_csv(a, report.aggregates);
  write_failures_csv(f, report.failures);
  EXPECT_EQ(first_line(m.str()),
            "query,method,setting,workers,plan_time_ms,exec_time_median_ms,cost_under_true_cards,"
            "cost_under_method_cards,result_count,ss,is,hj,nlj,timed_out");
  EXPECT_EQ(first_line(f.str()), "query,method,setting,timeout,message");

  const auto census = operator_census(report.rows);
  OperatorCensus total;
  std::size_t nodes = 0;
  for (const auto& r : report.rows) nodes += r.census.total();
  for (const auto& cr : census) total += cr.census;
  EXPECT_EQ(total.total(), nodes);
}

TEST(Harness, SweepAndDistribution) {
  Catalog c = fixture::shop();
  std::vector<QueryContext> queries;
  auto spec = parse_query(fixture::kShopQuery);
  spec.name = "shop";
  queries.emplace_back(spec, c);
  const auto stats = build_stats(c);
  HarnessOptions o;
  o.exec.runs = 1;
  o.methods = {Method::TrueCard, Method::NoCE};
  o.settings = {Setting::NonIndexed};
  const auto sweep = thread_sweep(queries, c, stats, o, {1, 2});
  EXPECT_EQ(sweep.rows.size(), 4u);
  for (const auto& r : sweep.rows)
    if (r.workers == 1) EXPECT_EQ(r.speedup, 1.0);
  EXPECT_THROW(thread_sweep(queries, c, stats, o, {2, 4}), Error);

  queries[0].ensure_true_cards(c, o.truecard_budget);
  const auto dist = distribution_experiment(queries[0], c, stats, o, 30, 2);
  std::size_t samples = 0;
  for (const auto& d : dist) {
    if (d.kind == "sample") {
      ++samples;
      EXPECT_GE(d.normalized_cost, 1.0 - 1e-12);
      EXPECT_EQ(d.runtime_ms.has_value(), d.index < 2);
    }
    if (d.kind == "truecard") EXPECT_EQ(d.normalized_cost, 1.0);
  }
  EXPECT_EQ(samples, 30u);
}
