#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "qolab/csv.hpp"
#include "qolab/error.hpp"

using namespace qolab;

TEST(Catalog, LoadsSchemaAndRows) {
  const auto c = fixture::shop();
  EXPECT_EQ(c.tables().size(), 4u);
  const auto& f1 = c.table("f1");
  EXPECT_EQ(f1.data.row_count, 10u);
  EXPECT_EQ(f1.def.foreign_keys.size(), 2u);
  EXPECT_EQ(f1.def.primary_key, "id");
  EXPECT_EQ(std::get<std::string>(c.table("d1").data.column("name").value(2)), "cat");
}

TEST(Catalog, SchemaRoundTrip) {
  const auto c = fixture::shop();
  const auto again = load_schema(save_schema(c));
  EXPECT_EQ(save_schema(again), save_schema(c));
}

TEST(Catalog, CsvRoundTripKeepsQuotedFields) {
  auto c = load_schema(R"({"tables": [{"name": "t", "primary_key": "id", "columns": [
      {"name": "id", "type": "int64", "key": true}, {"name": "s", "type": "text"}]}]})");
  load_table_csv_text("id,s\n1,\"a,b\"\n2,\"say \"\"hi\"\"\"\n3,\n", "t", c);
  const auto text = table_to_csv(c.table("t").data);
  auto d = load_schema(save_schema(c));
  load_table_csv_text(text, "t", d);
  EXPECT_EQ(std::get<std::string>(d.table("t").data.column("s").value(0)), "a,b");
  EXPECT_EQ(std::get<std::string>(d.table("t").data.column("s").value(1)), "say \"hi\"");
  EXPECT_EQ(std::get<std::string>(d.table("t").data.column("s").value(2)), "");
}

TEST(Catalog, RejectsBadInput) {
  EXPECT_THROW(load_schema("{"), ParseError);
  EXPECT_THROW(load_schema(R"({"tables": [{"name": "t", "columns": [{"name": "a", "type": "float"}]}]})"),
               SchemaError);
  EXPECT_THROW(load_schema(R"({"tables": [{"name": "t", "columns": [{"name": "a", "type": "int64"}],
      "foreign_keys": [{"column": "a", "ref_table": "nope", "ref_column": "id"}]}]})"),
               SchemaError);
  auto c = load_schema(fixture::kShopSchema);
  EXPECT_THROW(load_table_csv_text("id,name\n1,a\n1,b\n", "d1", c), DataError);
  EXPECT_THROW(load_table_csv_text("id,v\nx,1\n", "d2", c), DataError);
  EXPECT_THROW(load_table_csv_text("id,wrong\n", "d2", c), DataError);
}

TEST(Catalog, IndexesFollowSetting) {
  auto c = fixture::shop(Setting::Indexed);
  ASSERT_NE(c.index("f1", "d1_id"), nullptr);
  ASSERT_NE(c.index("d1", "id"), nullptr);
  EXPECT_EQ(c.index("f1", "k"), nullptr);
  const auto rows = c.index("f1", "d1_id")->lookup(std::int64_t{2});
  EXPECT_EQ(std::vector<RowId>(rows.begin(), rows.end()), (std::vector<RowId>{2, 3, 9}));
  EXPECT_TRUE(c.index("f1", "d1_id")->lookup(std::int64_t{99}).empty());

  c.set_setting(Setting::NonIndexed);
  build_indexes(c);
  EXPECT_EQ(c.index_count(), 0u);
}

TEST(Catalog, ConstraintReport) {
  auto c = fixture::shop();
  EXPECT_TRUE(validate_constraints(c).clean());
  load_table_csv_text("id,d1_id,k\n1,9,5\n2,9,6\n3,1,1\n", "f2", c);
  const auto report = validate_constraints(c);
  EXPECT_EQ(report.count(ConstraintViolation::Kind::MissingReference), 1u);
  EXPECT_TRUE(validate_constraints(c, false).clean());
}

TEST(Csv, ParsesQuotesAndCrlf) {
  const auto rows = csv::parse("a,b\r\n\"x\"\"y\",\"1\n2\"\r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "x\"y");
  EXPECT_EQ(rows[1][1], "1\n2");
  EXPECT_EQ(csv::escape_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape_field("plain"), "plain");
}
