#include <gtest/gtest.h>

#include <set>

#include "support/fixtures.hpp"
#include "qolab/cardinality.hpp"
#include "qolab/error.hpp"
#include "qolab/generator.hpp"
#include "qolab/optimizers.hpp"

using namespace qolab;

namespace {

struct Shop : ::testing::Test {
  Catalog plain = fixture::shop(Setting::NonIndexed);
  Catalog indexed = fixture::shop(Setting::Indexed);
  JoinGraph g = build_join_graph(parse_query(fixture::kShopQuery), plain);
  // d1=0 d2=1 f1=2 f2=3
};

std::string leaf_order(const PlanNode& p, const JoinGraph& g) {
  std::string out;
  p.visit([&](const PlanNode& n) {
    if (n.is_leaf()) out += g.vertex(n.vertex).alias + " ";
  });
  return out;
}

}  // namespace

TEST_F(Shop, FkStructure) {
  EXPECT_TRUE(is_fk_table(g, 2));
  EXPECT_TRUE(is_fk_table(g, 3));
  EXPECT_FALSE(is_fk_table(g, 0));
  EXPECT_EQ(pk_neighbors(g, 2), (std::vector<int>{0, 1}));
  EXPECT_EQ(pk_neighbors(g, 3), (std::vector<int>{0}));
  EXPECT_EQ(c_s2(g, 2, Setting::NonIndexed), 10.0);
  EXPECT_EQ(c_s2(g, 2, Setting::Indexed), 2.5);
  EXPECT_EQ(c_s2(g, 3, Setting::Indexed), 3.0);
}

TEST_F(Shop, Simpli2OrderNonIndexed) {
  // f2 (6 rows) ranks before f1 (10); f2 brings d1, f1 brings d2.
  const auto r = simpli2_order(g, Setting::NonIndexed);
  EXPECT_EQ(r.order, (std::vector<int>{3, 0, 2, 1}));
  ASSERT_EQ(r.components.size(), 2u);
  EXPECT_EQ(r.components[0], (std::pair<std::size_t, std::size_t>{0, 2}));
  EXPECT_EQ(r.components[1], (std::pair<std::size_t, std::size_t>{2, 4}));
  EXPECT_EQ(r.tail_begin, 4u);

  const auto plan = simpli2_plan(r, g, plain, OptimizerConfig::for_setting(Setting::NonIndexed));
  EXPECT_TRUE(validate_plan(*plan, g, plain).empty());
  EXPECT_EQ(count_operators(*plan).nlj, 0u);
  // Two component chains joined at the top.
  EXPECT_EQ(plan->left->aliases, AliasSet{0b1001});
  EXPECT_EQ(plan->right->aliases, AliasSet{0b0110});
  EXPECT_EQ(first_join(*plan)->aliases, AliasSet{0b1001});
}

TEST_F(Shop, Simpli2OrderIndexed) {
  // f1: 10 / 2^2 = 2.5 beats f2: 6 / 2 = 3; d2 (3 rows) before d1 (4).
  const auto r = simpli2_order(g, Setting::Indexed);
  EXPECT_EQ(r.order, (std::vector<int>{2, 1, 0, 3}));
  const auto plan = simpli2_plan(r, g, indexed, OptimizerConfig::for_setting(Setting::Indexed));
  EXPECT_TRUE(validate_plan(*plan, g, indexed).empty());
  EXPECT_EQ(leaf_order(*plan, g), "f1 d2 d1 f2 ");
  const auto census = count_operators(*plan);
  EXPECT_EQ(census.nlj, 3u);
  EXPECT_EQ(census.is, census.nlj);
}

TEST(Simpli2, NoFkTablesFallsBackToSize) {
  const auto c = fixture::shop();
  const auto g = build_join_graph(parse_query("SELECT COUNT(*) FROM f1 a, f2 b, f1 x WHERE a.k = b.k AND b.k = x.k"), c);
  const auto r = simpli2_order(g, Setting::NonIndexed);
  EXPECT_EQ(r.order, (std::vector<int>{1, 0, 2}));
  ASSERT_EQ(r.components.size(), 1u);
  const auto plan = simpli2_plan(r, g, c, OptimizerConfig::for_setting(Setting::NonIndexed));
  EXPECT_TRUE(validate_plan(*plan, g, c).empty());
}

TEST_F(Shop, DpMatchesBruteForce) {
  TrueCardMemo memo;
  const TrueCardProvider truth(g, plain, memo);
  const auto card = [&](AliasSet s) { return truth.cardinality(s); };
  for (auto shape : {PlanShape::Bushy, PlanShape::LeftDeep}) {
    for (const Catalog* c : {&plain, &indexed}) {
      const auto config = OptimizerConfig::for_setting(c->setting(), shape);
      const auto plan = dp_optimize(g, *c, truth, CostParams{}, config);
      EXPECT_TRUE(validate_plan(*plan, g, *c).empty());
      const double want = oracle::brute_force_min_cost(g, *c, card, CostParams{}, config);
      EXPECT_EQ(annotate(plan, g, truth, CostParams{}).cost(), want) << to_string(shape);
    }
  }
}

TEST(Dp, MatchesBruteForceOnGeneratedStars) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto config = star_config({{"d1", 40}, {"d2", 15}, {"d3", 8}}, {{"f1", 600, {"d1", "d2", "d3"}, 20},
                                                                     {"f2", 300, {"d1", "d3"}, 20}},
                              seed, 0.9, 1.0, 0.5);
    for (auto setting : {Setting::NonIndexed, Setting::Indexed}) {
      const auto c = generate_catalog(config, setting);
      const auto g = build_join_graph(
          parse_query("SELECT COUNT(*) FROM f1, f2, d1, d2, d3 WHERE f1.d1_id = d1.id AND f1.d2_id = d2.id "
                      "AND f1.d3_id = d3.id AND f2.d1_id = d1.id AND f2.d3_id = d3.id AND f1.mk = f2.mk "
                      "AND d2.v < 50"),
          c);
      TrueCardMemo memo;
      const TrueCardProvider truth(g, c, memo);
      const auto opt = OptimizerConfig::for_setting(setting);
      DpStats stats;
      const auto plan = dp_optimize(g, c, truth, CostParams{}, opt, &stats);
      EXPECT_GT(stats.pairs, 0u);
      EXPECT_EQ(annotate(plan, g, truth, CostParams{}).cost(),
                oracle::brute_force_min_cost(g, c, [&](AliasSet s) { return truth.cardinality(s); }, CostParams{},
                                             opt));
    }
  }
}

TEST_F(Shop, DpRespectsLimitsAndPolicy) {
  const BaseOnlyProvider base(g);
  auto config = OptimizerConfig::for_setting(Setting::NonIndexed);
  config.dp_table_limit = 3;
  EXPECT_THROW(dp_optimize(g, plain, base, CostParams{}, config), OptimizerError);
  config.dp_table_limit = 25;
  EXPECT_THROW(config.validate(), Error);

  TrueCardMemo memo;
  const TrueCardProvider truth(g, plain, memo);
  const auto hash_only = dp_optimize(g, indexed, truth, CostParams{}, OptimizerConfig::for_setting(Setting::NonIndexed));
  EXPECT_EQ(count_operators(*hash_only).nlj, 0u);
}

TEST_F(Shop, LeftDeepShape) {
  TrueCardMemo memo;
  const TrueCardProvider truth(g, plain, memo);
  const auto plan =
      dp_optimize(g, indexed, truth, CostParams{}, OptimizerConfig::for_setting(Setting::Indexed, PlanShape::LeftDeep));
  plan->visit([](const PlanNode& n) {
    if (!n.is_leaf()) EXPECT_TRUE(n.right->is_leaf());
  });
}

TEST_F(Shop, QuickPickDeterministicAndValid) {
  const auto config = OptimizerConfig::for_setting(Setting::NonIndexed);
  const auto a = quickpick_sample(g, plain, {.n = 50, .seed = 11}, config);
  const auto b = quickpick_sample(g, plain, {.n = 50, .seed = 11}, config);
  const auto c = quickpick_sample(g, plain, {.n = 50, .seed = 12}, config);
  ASSERT_EQ(a.size(), 50u);
  std::set<std::string> distinct;
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(validate_plan(*a[i], g, plain).empty());
    EXPECT_EQ(plan_digest(*a[i], g), plan_digest(*b[i], g));
    differs = differs || plan_digest(*a[i], g) != plan_digest(*c[i], g);
    distinct.insert(plan_digest(*a[i], g));
  }
  EXPECT_TRUE(differs);
  EXPECT_GT(distinct.size(), 5u);
}

TEST_F(Shop, QuickPickShardsConcatenate) {
  const auto config = OptimizerConfig::for_setting(Setting::NonIndexed);
  const auto sharded = quickpick_sample(g, plain, {.n = 20, .seed = 4, .shards = 2, .workers = 2}, config);
  const auto s0 = quickpick_sample(g, plain, {.n = 10, .seed = 4}, config);
  const auto s1 = quickpick_sample(g, plain, {.n = 10, .seed = 5}, config);
  ASSERT_EQ(sharded.size(), 20u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(plan_digest(*sharded[i], g), plan_digest(*s0[i], g));
    EXPECT_EQ(plan_digest(*sharded[10 + i], g), plan_digest(*s1[i], g));
  }
}

TEST_F(Shop, QuickPickIndexedChoice) {
  TrueCardMemo memo;
  const TrueCardProvider truth(g, indexed, memo);
  const auto config = OptimizerConfig::for_setting(Setting::Indexed);
  const auto plans = quickpick_sample(g, indexed, {.n = 40, .seed = 3}, config, &truth);
  std::size_t nlj = 0;
  for (const auto& p : plans) {
    EXPECT_TRUE(validate_plan(*p, g, indexed).empty());
    nlj += count_operators(*p).nlj;
  }
  EXPECT_GT(nlj, 0u);
  EXPECT_THROW(quickpick_sample(g, indexed, {.n = 1}, config, nullptr), Error);
}

TEST(Shapes, ParseAndPrint) {
  EXPECT_EQ(parse_shape("bushy"), PlanShape::Bushy);
  EXPECT_EQ(parse_shape("leftdeep"), PlanShape::LeftDeep);
  EXPECT_EQ(to_string(PlanShape::LeftDeep), "leftdeep");
  EXPECT_THROW(parse_shape("zigzag"), Error);
}
