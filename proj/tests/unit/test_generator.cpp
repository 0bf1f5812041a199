#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "qolab/error.hpp"
#include "qolab/generator.hpp"

using namespace qolab;

namespace {

std::map<std::int64_t, std::size_t> histogram(const Column& c) {
  std::map<std::int64_t, std::size_t> h;
  for (auto v : c.ints()) ++h[v];
  return h;
}

GeneratorConfig small_star(double skew, double inclusion) {
  return star_config({{"d1", 50}, {"d2", 20}}, {{"f1", 1000, {"d1", "d2"}, 30}}, 17, skew, inclusion, 0.0);
}

}  // namespace

TEST(Generator, Deterministic) {
  const auto a = generate_catalog(minijob_config(0.1, 5));
  const auto b = generate_catalog(minijob_config(0.1, 5));
  const auto c = generate_catalog(minijob_config(0.1, 6));
  bool differs = false;
  for (const auto& [name, t] : a.tables()) {
    EXPECT_EQ(table_to_csv(t.data), table_to_csv(b.table(name).data)) << name;
    differs = differs || table_to_csv(t.data) != table_to_csv(c.table(name).data);
  }
  EXPECT_TRUE(differs);
}

TEST(Generator, BalancedWithoutSkew) {
  const auto c = generate_catalog(small_star(0, 1));
  const auto h = histogram(c.table("f1").data.column("d1_id"));
  ASSERT_EQ(h.size(), 50u);
  for (const auto& [v, n] : h) EXPECT_EQ(n, 20u) << v;
  EXPECT_TRUE(validate_constraints(c).clean());
}

TEST(Generator, SkewConcentratesMass) {
  const auto c = generate_catalog(small_star(1.2, 1));
  auto h = histogram(c.table("f1").data.column("d1_id"));
  std::size_t top = 0;
  for (const auto& [v, n] : h) top = std::max(top, n);
  EXPECT_GT(top, 100u);
  EXPECT_TRUE(validate_constraints(c).clean());
}

TEST(Generator, InclusionControlsDanglingReferences) {
  const auto c = generate_catalog(small_star(0, 0.9));
  std::size_t dangling = 0;
  for (auto v : c.table("f1").data.column("d1_id").ints()) dangling += (v < 1 || v > 50);
  EXPECT_EQ(dangling, 100u);
  EXPECT_FALSE(validate_constraints(c).clean());
}

TEST(Generator, CorrelationFollowsSource) {
  auto config = star_config({{"d1", 50}}, {{"f1", 5000, {"d1"}, 0}}, 3, 0, 1, 1.0);
  const auto c = generate_catalog(config);
  const auto& f1 = c.table("f1").data;
  // With correlation 1, v is a function of d1_id.
  std::map<std::int64_t, std::int64_t> seen;
  const auto fk = f1.column("d1_id").ints();
  const auto v = f1.column("v").ints();
  for (std::size_t i = 0; i < fk.size(); ++i) {
    auto [it, fresh] = seen.emplace(fk[i], v[i]);
    EXPECT_EQ(it->second, v[i]);
  }
}

TEST(Generator, ValidatesConfig) {
  auto bad = small_star(0, 1);
  bad.inclusion = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  bad = small_star(0, 1);
  bad.tables[2].columns[1].ref_table = "nope";
  EXPECT_THROW(generate_catalog(bad), Error);
}

TEST(Generator, ChainAndDatasetFiles) {
  const auto config = chain_config(5, 100, 1);
  const auto dir = (std::filesystem::temp_directory_path() / "qolab_gen_test").string();
  std::filesystem::remove_all(dir);
  generate_dataset(config, dir);
  const auto c = load_catalog_dir(dir, Setting::Indexed);
  EXPECT_EQ(c.tables().size(), 5u);
  EXPECT_EQ(c.table("t1").def.foreign_keys.at(0).to_table, "t2");
  EXPECT_GT(c.index_count(), 0u);
  EXPECT_TRUE(validate_constraints(c).clean());
  std::filesystem::remove_all(dir);
}
