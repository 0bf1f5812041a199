#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "qolab/error.hpp"

using namespace qolab;

TEST(Parser, CommaJoinWithSelections) {
  const auto q = parse_query(
      "SELECT MIN(t.title) AS movie FROM title AS t, movie_info mi "
      "WHERE t.id = mi.movie_id AND mi.info IN ('a', 'b') AND t.production_year BETWEEN 1990 AND 2000 "
      "AND t.title LIKE '%x%' AND t.kind_id <> 3;");
  ASSERT_EQ(q.aliases.size(), 2u);
  EXPECT_EQ(q.table_of("mi"), "movie_info");
  ASSERT_EQ(q.joins.size(), 1u);
  EXPECT_EQ(q.joins[0].left, (ColumnRef{"t", "id"}));
  ASSERT_EQ(q.selections.size(), 4u);
  EXPECT_EQ(q.selections[0].op, SelectionOp::In);
  EXPECT_EQ(q.selections[1].op, SelectionOp::Between);
  EXPECT_EQ(q.selections[2].op, SelectionOp::Like);
  EXPECT_EQ(q.selections[3].op, SelectionOp::Ne);
  EXPECT_EQ(q.output.min_labels.at(0), "movie");
}

TEST(Parser, ExplicitJoinsAndDerivedTablesFlatten) {
  const auto flat = parse_query("SELECT COUNT(*) FROM a x, b y, c z WHERE x.id = y.a_id AND y.id = z.b_id AND z.v = 1");
  const auto joined = parse_query(
      "SELECT COUNT(*) FROM a x JOIN (SELECT * FROM b y JOIN c z ON y.id = z.b_id WHERE z.v = 1) AS s "
      "ON x.id = y.a_id");
  EXPECT_EQ(joined.aliases.size(), 3u);
  EXPECT_EQ(joined.joins.size(), 2u);
  EXPECT_EQ(joined.selections.size(), 1u);
  EXPECT_TRUE(flat.output.count_star());
}

TEST(Parser, RenderRoundTrip) {
  for (const char* sql :
       {"SELECT COUNT(*) FROM t AS a",
        "SELECT MIN(a.x), MIN(b.y) AS l FROM t AS a, u AS b WHERE a.id = b.t_id AND a.x >= -4 AND b.y = 'it''s'",
        fixture::kShopQuery}) {
    const auto q = parse_query(sql);
    const auto again = parse_query(render_query(q));
    EXPECT_TRUE(q.same_query(again)) << render_query(q);
  }
}

TEST(Parser, WorkloadFilesRoundTrip) {
  const auto queries = load_workload(QOLAB_MINIJOB_QUERIES);
  ASSERT_EQ(queries.size(), 30u);
  for (const auto& q : queries) {
    EXPECT_TRUE(q.same_query(parse_query(render_query(q)))) << q.name;
    EXPECT_GE(q.aliases.size(), 2u);
    EXPECT_LE(q.aliases.size(), 8u);
  }
}

TEST(Parser, RejectsOutsideDialect) {
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x WHERE x.v = 1 OR x.v = 2"), UnsupportedError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x LEFT JOIN b y ON x.id = y.id"), UnsupportedError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x WHERE x.v NOT IN (1)"), UnsupportedError);
  EXPECT_THROW(parse_query("SELECT x.v FROM a x"), UnsupportedError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x WHERE x.v = 1.5"), UnsupportedError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x, b x"), ParseError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x WHERE v = 1"), ParseError);
  EXPECT_THROW(parse_query("SELECT COUNT(*) FROM a x WHERE x.v = 'open"), ParseError);
}

TEST(Binder, ChecksNamesAndTypes) {
  const auto c = fixture::shop();
  EXPECT_NO_THROW(bind_query(parse_query(fixture::kShopQuery), c));
  EXPECT_THROW(bind_query(parse_query("SELECT COUNT(*) FROM nope n"), c), Error);
  EXPECT_THROW(bind_query(parse_query("SELECT COUNT(*) FROM d1 a WHERE a.zzz = 1"), c), Error);
  EXPECT_THROW(bind_query(parse_query("SELECT COUNT(*) FROM d1 a WHERE a.name = 1"), c), Error);
  EXPECT_THROW(bind_query(parse_query("SELECT COUNT(*) FROM d1 a WHERE b.id = 1"), c), Error);
}

TEST(JoinGraph, EdgeKindsAndVertexOrder) {
  const auto c = fixture::shop();
  const auto g = build_join_graph(parse_query(fixture::kShopQuery), c);
  ASSERT_EQ(g.size(), 4);
  EXPECT_EQ(g.vertex(0).alias, "d1");
  EXPECT_EQ(g.vertex(3).alias, "f2");
  EXPECT_EQ(g.vertex(2).rows, 10u);
  ASSERT_EQ(g.edges().size(), 4u);

  const auto& f1d1 = g.edges()[static_cast<std::size_t>(g.edge_between(0, 2))];
  EXPECT_EQ(f1d1.kind, EdgeKind::OneToMany);
  EXPECT_EQ(f1d1.key_side, 0);
  EXPECT_EQ(f1d1.fk_side(), 2);
  const auto& f1f2 = g.edges()[static_cast<std::size_t>(g.edge_between(2, 3))];
  EXPECT_EQ(f1f2.kind, EdgeKind::ManyToMany);
  EXPECT_EQ(g.edge_between(1, 3), -1);

  EXPECT_TRUE(g.connected(0b0101));   // d1, f1
  EXPECT_FALSE(g.connected(0b0011));  // d1, d2
  EXPECT_TRUE(connected(g, {"d2", "f1", "f2"}));
  EXPECT_EQ(g.crossing_predicates(0b0001, 0b1100).size(), 2u);
}

TEST(JoinGraph, MultiPredicateEdgeAndKeyKeyJoin) {
  const auto c = fixture::shop();
  const auto g = build_join_graph(
      parse_query("SELECT COUNT(*) FROM f1 a, f2 b, d1 x, d1 y WHERE a.k = b.k AND a.id = b.id AND x.id = y.id "
                  "AND a.d1_id = x.id"),
      c);
  const int a = g.vertex_of("a"), b = g.vertex_of("b");
  const auto& ab = g.edges()[static_cast<std::size_t>(g.edge_between(a, b))];
  EXPECT_EQ(ab.predicates.size(), 2u);
  const auto& xy = g.edges()[static_cast<std::size_t>(g.edge_between(g.vertex_of("x"), g.vertex_of("y")))];
  EXPECT_EQ(xy.kind, EdgeKind::OneToOne);
}
