#include <gtest/gtest.h>

#include <map>

#include "support/fixtures.hpp"
#include "qolab/error.hpp"
#include "qolab/plan.hpp"

using namespace qolab;

namespace {

class TableProvider final : public CardinalityProvider {
 public:
  explicit TableProvider(std::map<AliasSet, double> cards) : cards_(std::move(cards)) {}
  double cardinality(AliasSet set) const override { return cards_.at(set); }
  std::string id() const override { return "table"; }

 private:
  std::map<AliasSet, double> cards_;
};

struct PlanTest : ::testing::Test {
  Catalog catalog = fixture::shop(Setting::Indexed);
  JoinGraph g = build_join_graph(parse_query(fixture::kShopQuery), catalog);
  // d1=0 d2=1 f1=2 f2=3
  PlanPtr leaf(int v, AccessPath a = AccessPath::SS) { return make_leaf(g, v, a); }
};

}  // namespace

TEST_F(PlanTest, ValidBushyPlan) {
  auto p = make_join(g, make_join(g, leaf(0), leaf(2), JoinAlgo::HJ), leaf(1), JoinAlgo::HJ, BuildSide::Right);
  p = make_join(g, p, leaf(3), JoinAlgo::HJ);
  EXPECT_TRUE(validate_plan(*p, g, catalog).empty());
  EXPECT_EQ(p->predicates.size(), 2u);  // f2-d1 and f2-f1
  EXPECT_EQ(p->node_count(), 7u);
  const auto census = count_operators(*p);
  EXPECT_EQ(census.ss, 4u);
  EXPECT_EQ(census.hj, 3u);
  EXPECT_EQ(census.total(), p->node_count());
  EXPECT_EQ(first_join(*p)->aliases, AliasSet{0b0101});

  // d2 and f2 are not adjacent.
  auto cross = make_join(g, make_join(g, leaf(1), leaf(3), JoinAlgo::HJ), make_join(g, leaf(0), leaf(2), JoinAlgo::HJ),
                         JoinAlgo::HJ);
  EXPECT_FALSE(validate_plan(*cross, g, catalog).empty());
  // A partial plan does not cover the query.
  EXPECT_FALSE(validate_plan(*p->left, g, catalog).empty());
}

TEST_F(PlanTest, NestedLoopRules) {
  // f1 -> d1 -> d2 -> f2, each inner reached through an index.
  auto chain = [&](AccessPath d1_access, JoinAlgo first) {
    auto p = make_join(g, leaf(2), leaf(0, d1_access), first);
    p = make_join(g, p, leaf(1, AccessPath::IS), JoinAlgo::NLJ);
    return make_join(g, p, leaf(3, AccessPath::IS), JoinAlgo::NLJ);
  };
  const auto ok = chain(AccessPath::IS, JoinAlgo::NLJ);
  EXPECT_TRUE(validate_plan(*ok, g, catalog).empty());
  EXPECT_TRUE(index_lookup_predicate(g, catalog, singleton(2), 0).has_value());
  EXPECT_EQ(count_operators(*ok).is, 3u);

  EXPECT_FALSE(validate_plan(*chain(AccessPath::SS, JoinAlgo::NLJ), g, catalog).empty());
  EXPECT_FALSE(validate_plan(*chain(AccessPath::IS, JoinAlgo::HJ), g, catalog).empty());
  auto join_inner = make_join(g, make_join(g, leaf(1), leaf(2), JoinAlgo::HJ),
                              make_join(g, leaf(0), leaf(3), JoinAlgo::HJ), JoinAlgo::NLJ);
  EXPECT_FALSE(validate_plan(*join_inner, g, catalog).empty());

  Catalog plain = fixture::shop(Setting::NonIndexed);
  EXPECT_FALSE(validate_plan(*ok, g, plain).empty());
  EXPECT_FALSE(index_lookup_predicate(g, plain, singleton(2), 0).has_value());
}

TEST_F(PlanTest, AnnotateSumsChildrenThenSelf) {
  auto j1 = make_join(g, leaf(0), leaf(2), JoinAlgo::HJ, BuildSide::Left);
  auto j2 = make_join(g, j1, leaf(1, AccessPath::IS), JoinAlgo::NLJ);
  const TableProvider prov({{0b0001, 4}, {0b0100, 10}, {0b0010, 3}, {0b0101, 10}, {0b0111, 10}});
  const auto a = annotate(j2, g, prov, CostParams{});
  // SS(d1)=0.8, SS(f1)=2, HJ=4+10, IS=0, NLJ=2*10*1
  EXPECT_DOUBLE_EQ(a.at(*j1).total_cost, (0.8 + 2.0) + 14.0);
  EXPECT_DOUBLE_EQ(a.cost(), ((0.8 + 2.0) + 14.0) + 20.0);
  EXPECT_EQ(a.rows(), 10.0);
  EXPECT_EQ(cost_plan(a), a.cost());
  const auto text = render_plan_text(*j2, g, &a);
  EXPECT_NE(text.find("NLJ"), std::string::npos);
  EXPECT_NE(text.find("IS d2"), std::string::npos);
}

TEST_F(PlanTest, RenderedSqlReparsesToSameQuery) {
  auto bushy = make_join(g, make_join(g, leaf(1), leaf(2), JoinAlgo::HJ), make_join(g, leaf(0), leaf(3), JoinAlgo::HJ),
                         JoinAlgo::HJ);
  ASSERT_TRUE(validate_plan(*bushy, g, catalog).empty());
  const auto sql = render_sql(*bushy, g);
  const auto q = parse_query(sql);
  EXPECT_EQ(q.aliases.size(), 4u);
  EXPECT_EQ(q.joins.size(), g.spec().joins.size());
  EXPECT_NE(sql.find("JOIN"), std::string::npos);
}

TEST_F(PlanTest, DigestDistinguishesOperators) {
  auto a = make_join(g, leaf(0), leaf(2), JoinAlgo::HJ, BuildSide::Left);
  auto b = make_join(g, leaf(0), leaf(2), JoinAlgo::HJ, BuildSide::Right);
  auto c = make_join(g, leaf(0), leaf(2), JoinAlgo::HJ, BuildSide::Left);
  EXPECT_NE(plan_digest(*a, g), plan_digest(*b, g));
  EXPECT_EQ(plan_digest(*a, g), plan_digest(*c, g));
}
