#include "qolab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "qolab/error.hpp"
#include "qolab/kernels.hpp"

namespace qolab {

namespace {

using Rng = std::mt19937_64;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<std::uint64_t> permutation(std::uint64_t n, std::uint64_t seed) {
  std::vector<std::uint64_t> p(n);
  for (std::uint64_t i = 0; i < n; ++i) p[i] = i;
  Rng rng(seed);
  shuffle(p, rng);
  return p;
}

class RankSampler {
 public:
  RankSampler(std::uint64_t domain, double s) {
    cdf_.reserve(domain);
    double total = 0;
    for (std::uint64_t r = 0; r < domain; ++r) {
      total += std::pow(static_cast<double>(r + 1), -s);
      cdf_.push_back(total);
    }
  }

  std::uint64_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  }

 private:
  std::vector<double> cdf_;
};

/// n ranks over [0, domain): balanced (each rank within one of n/domain)
/// when s == 0, Zipf(s) otherwise.
std::vector<std::uint64_t> draw_ranks(std::uint64_t n, std::uint64_t domain, double s, Rng& rng) {
  std::vector<std::uint64_t> out(n);
  if (domain == 0) return out;
  if (s == 0) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = i % domain;
    shuffle(out, rng);
    return out;
  }
  const RankSampler sampler(domain, s);
  for (auto& r : out) r = sampler(rng);
  return out;
}

const TableGen& find_table(const GeneratorConfig& config, const std::string& name) {
  for (const auto& t : config.tables) {
    if (t.name == name) return t;
  }
  throw SchemaError("generator references unknown table " + name);
}

std::string text_value(const ColumnGen& c, std::uint64_t rank) {
  if (rank < c.vocabulary.size()) return c.vocabulary[rank];
  return c.prefix + std::to_string(rank);
}

std::uint64_t text_domain(const ColumnGen& c) { return std::max<std::uint64_t>(c.domain, c.vocabulary.size()); }

}  // namespace

void GeneratorConfig::validate() const {
  if (!(skew >= 0)) throw Error("skew must be non-negative");
  if (!(inclusion >= 0 && inclusion <= 1)) throw Error("inclusion must be in [0, 1]");
  if (!(correlation >= 0 && correlation <= 1)) throw Error("correlation must be in [0, 1]");
  std::map<std::string, const TableGen*> names;
  for (const auto& t : tables) {
    if (!names.emplace(t.name, &t).second) throw SchemaError("duplicate generated table " + t.name);
  }
  for (const auto& t : tables) {
    std::map<std::string, const ColumnGen*> seen;
    for (const auto& c : t.columns) {
      if (c.skew && !(*c.skew >= 0)) throw Error("skew of " + t.name + "." + c.name + " must be non-negative");
      if (c.kind == ColumnGen::Kind::ForeignKey) {
        auto it = names.find(c.ref_table);
        if (it == names.end()) throw SchemaError("dangling generated FK " + t.name + "." + c.name);
        const auto& ref = *it->second;
        const bool has_id = std::any_of(ref.columns.begin(), ref.columns.end(), [](const ColumnGen& rc) {
          return rc.kind == ColumnGen::Kind::Serial && rc.name == "id";
        });
        if (!has_id) throw SchemaError("generated FK target " + ref.name + " has no serial id column");
        if (ref.rows == 0 && t.rows > 0 && inclusion > 0) {
          throw Error("unsatisfiable config: " + t.name + "." + c.name + " must reference empty table " + ref.name);
        }
      }
      if (c.kind == ColumnGen::Kind::Int && c.domain == 0 && t.rows > 0) {
        throw Error("empty value domain for " + t.name + "." + c.name);
      }
      if (c.kind == ColumnGen::Kind::Text && text_domain(c) == 0 && t.rows > 0) {
        throw Error("empty value domain for " + t.name + "." + c.name);
      }
      if (!c.correlate_with.empty()) {
        auto it = seen.find(c.correlate_with);
        if (it == seen.end() || it->second->kind == ColumnGen::Kind::Text) {
          throw Error(t.name + "." + c.name + " must follow an earlier integer column");
        }
      }
      seen.emplace(c.name, &c);
    }
  }
}

Catalog generate_catalog(const GeneratorConfig& config, Setting setting) {
  config.validate();
  Catalog catalog(setting);
  for (const auto& t : config.tables) {
    TableDef def;
    def.name = t.name;
    for (const auto& c : t.columns) {
      ColumnDef cd;
      cd.name = c.name;
      cd.type = c.kind == ColumnGen::Kind::Text ? DataType::Text : DataType::Int64;
      cd.is_key = c.kind == ColumnGen::Kind::Serial;
      if (cd.is_key && !def.primary_key) def.primary_key = c.name;
      if (c.kind == ColumnGen::Kind::ForeignKey) def.foreign_keys.push_back({t.name, c.name, c.ref_table, "id"});
      def.columns.push_back(cd);
    }
    catalog.add_table(def);
  }

  for (const auto& t : config.tables) {
    auto& relation = catalog.mutable_table(t.name).data;
    Rng rng(config.seed ^ fnv1a(t.name));
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const auto& c = t.columns[ci];
      auto& column = relation.columns[ci];
      const double s = c.skew.value_or(config.skew);
      switch (c.kind) {
        case ColumnGen::Kind::Serial: {
          auto& ints = column.mutable_ints();
          for (std::uint64_t i = 0; i < t.rows; ++i) ints.push_back(static_cast<std::int64_t>(i + 1));
          break;
        }
        case ColumnGen::Kind::ForeignKey: {
          const std::uint64_t ref_rows = find_table(config, c.ref_table).rows;
          // Ranks map to ids through one permutation per referenced table, so
          // every fact agrees on which keys are popular.
          const auto perm = permutation(ref_rows, config.seed ^ fnv1a(c.ref_table) ^ 0x9e3779b97f4a7c15ULL);
          const auto dangling = static_cast<std::uint64_t>(std::llround((1.0 - config.inclusion) * static_cast<double>(t.rows)));
          std::vector<std::uint64_t> ranks = draw_ranks(t.rows - dangling, ref_rows, s, rng);
          auto& ints = column.mutable_ints();
          for (auto r : ranks) ints.push_back(static_cast<std::int64_t>(perm[r] + 1));
          for (std::uint64_t k = 0; k < dangling; ++k) {
            ints.push_back(static_cast<std::int64_t>(ref_rows + 1 + k % std::max<std::uint64_t>(ref_rows, 1)));
          }
          shuffle(ints, rng);
          break;
        }
        case ColumnGen::Kind::Int:
        case ColumnGen::Kind::Text: {
          const bool text = c.kind == ColumnGen::Kind::Text;
          const std::uint64_t domain = text ? text_domain(c) : c.domain;
          std::vector<std::uint64_t> ranks = draw_ranks(t.rows, domain, s, rng);
          if (!c.correlate_with.empty() && config.correlation > 0) {
            const auto& source = relation.column(c.correlate_with).ints();
            for (std::uint64_t i = 0; i < t.rows; ++i) {
              if (uniform01(rng) < config.correlation) {
                ranks[i] = kernels::mix64(static_cast<std::uint64_t>(source[i]) ^ fnv1a(c.name)) % domain;
              }
            }
          }
          // Ranks (popularity order) map to values through a fixed permutation.
          const auto perm = permutation(domain, config.seed ^ fnv1a(t.name + "." + c.name));
          if (text) {
            auto& texts = column.mutable_texts();
            for (auto r : ranks) texts.push_back(text_value(c, c.vocabulary.empty() ? perm[r] : r));
          } else {
            auto& ints = column.mutable_ints();
            for (auto r : ranks) ints.push_back(c.lo + static_cast<std::int64_t>(perm[r]));
          }
          break;
        }
      }
    }
    relation.row_count = t.rows;
  }
  build_indexes(catalog);
  return catalog;
}

void save_catalog_dir(const Catalog& catalog, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(std::filesystem::path(dir) / "schema.json", std::ios::binary);
    if (!out) throw Error("cannot write " + dir + "/schema.json");
    out << save_schema(catalog);
  }
  for (const auto& [name, table] : catalog.tables()) {
    save_table_csv((std::filesystem::path(dir) / (name + ".csv")).string(), table.data);
  }
}

void generate_dataset(const GeneratorConfig& config, const std::string& dir) {
  save_catalog_dir(generate_catalog(config, Setting::NonIndexed), dir);
}

GeneratorConfig star_config(const std::vector<DimGen>& dims, const std::vector<FactGen>& facts, std::uint64_t seed,
                            double skew, double inclusion, double correlation) {
  GeneratorConfig config;
  config.seed = seed;
  config.skew = skew;
  config.inclusion = inclusion;
  config.correlation = correlation;
  for (const auto& d : dims) {
    TableGen t{d.name, d.rows, {}};
    t.columns.push_back({.name = "id", .kind = ColumnGen::Kind::Serial});
    t.columns.push_back({.name = "v", .kind = ColumnGen::Kind::Int, .lo = 0, .domain = 100});
    t.columns.push_back({.name = "label", .kind = ColumnGen::Kind::Text, .domain = 50, .prefix = d.name + "_"});
    config.tables.push_back(std::move(t));
  }
  for (const auto& f : facts) {
    TableGen t{f.name, f.rows, {}};
    t.columns.push_back({.name = "id", .kind = ColumnGen::Kind::Serial});
    for (const auto& target : f.fk_targets) {
      t.columns.push_back({.name = target + "_id", .kind = ColumnGen::Kind::ForeignKey, .ref_table = target});
    }
    if (f.shared_domain > 0) {
      t.columns.push_back({.name = "mk", .kind = ColumnGen::Kind::Int, .lo = 1, .domain = f.shared_domain});
    }
    ColumnGen v{.name = "v", .kind = ColumnGen::Kind::Int, .lo = 0, .domain = 1000};
    if (!f.fk_targets.empty()) v.correlate_with = f.fk_targets.front() + "_id";
    t.columns.push_back(v);
    config.tables.push_back(std::move(t));
  }
  return config;
}

GeneratorConfig chain_config(int tables, std::uint64_t rows, std::uint64_t seed) {
  GeneratorConfig config;
  config.seed = seed;
  for (int i = 1; i <= tables; ++i) {
    TableGen t{"t" + std::to_string(i), rows, {}};
    t.columns.push_back({.name = "id", .kind = ColumnGen::Kind::Serial});
    if (i < tables) {
      t.columns.push_back({.name = "next_id", .kind = ColumnGen::Kind::ForeignKey, .ref_table = "t" + std::to_string(i + 1)});
    }
    t.columns.push_back({.name = "v", .kind = ColumnGen::Kind::Int, .lo = 0, .domain = 100});
    config.tables.push_back(std::move(t));
  }
  return config;
}

GeneratorConfig minijob_config(double scale, std::uint64_t seed) {
  using K = ColumnGen::Kind;
  auto rows = [&](std::uint64_t n) { return static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * scale)); };
  auto serial = [] { return ColumnGen{.name = "id", .kind = K::Serial}; };
  auto fk = [](std::string name, std::string ref, double s) {
    return ColumnGen{.name = std::move(name), .kind = K::ForeignKey, .ref_table = std::move(ref), .skew = s};
  };
  auto vocab = [](std::string name, std::vector<std::string> words, double s, std::string follows = {}) {
    return ColumnGen{.name = std::move(name), .kind = K::Text, .vocabulary = std::move(words), .skew = s,
                     .correlate_with = std::move(follows)};
  };
  auto pattern = [](std::string name, std::string prefix, std::uint64_t domain, double s) {
    return ColumnGen{.name = std::move(name), .kind = K::Text, .domain = domain, .prefix = std::move(prefix), .skew = s};
  };

  GeneratorConfig c;
  c.seed = seed;
  c.skew = 0.6;
  c.inclusion = 1.0;
  c.correlation = 0.7;

  c.tables.push_back({"kind_type", 7, {serial(), vocab("kind", {"movie", "tv series", "tv movie", "video movie",
                                                                "tv mini series", "video game", "episode"}, 0)}});
  std::vector<std::string> infos = {"rating", "votes", "genres", "budget", "countries", "languages", "release dates",
                                    "runtimes", "top 250 rank", "bottom 10 rank", "gross", "color info", "sound mix",
                                    "certificates", "locations", "tech info"};
  for (int i = static_cast<int>(infos.size()); i < 40; ++i) infos.push_back("info " + std::to_string(i));
  c.tables.push_back({"info_type", 40, {serial(), vocab("info", infos, 0)}});
  c.tables.push_back({"role_type", 12, {serial(), vocab("role", {"actor", "actress", "producer", "writer",
                                                                 "cinematographer", "composer", "costume designer",
                                                                 "director", "editor", "miscellaneous crew",
                                                                 "production designer", "guest"}, 0)}});
  c.tables.push_back({"company_type", 4, {serial(), vocab("kind", {"distributors", "production companies",
                                                                   "special effects companies",
                                                                   "miscellaneous companies"}, 0)}});
  c.tables.push_back({"title", rows(4000),
                      {serial(), fk("kind_id", "kind_type", 1.2), pattern("title", "Title ", rows(3600), 0.2),
                       ColumnGen{.name = "production_year", .kind = K::Int, .lo = 1950, .domain = 70, .skew = 0.5,
                                 .correlate_with = "kind_id"}}});
  c.tables.push_back({"name", rows(3000),
                      {serial(), pattern("name", "Name ", rows(2600), 0.3), vocab("gender", {"m", "f", ""}, 0.8)}});
  c.tables.push_back({"company_name", rows(800),
                      {serial(), pattern("name", "Company ", rows(800), 0),
                       vocab("country_code", {"[us]", "[gb]", "[de]", "[fr]", "[jp]", "[it]", "[ca]", "[in]", "[es]",
                                              "[se]", "[nl]", "[au]", "[br]", "[ru]", "[kr]"}, 1.1)}});
  c.tables.push_back({"keyword", rows(1500),
                      {serial(), ColumnGen{.name = "keyword", .kind = K::Text, .domain = rows(1500),
                                           .vocabulary = {"character-name-in-title", "sequel", "based-on-novel",
                                                          "superhero", "marvel-comics", "murder", "love",
                                                          "independent-film", "female-nudity", "blood",
                                                          "violence", "revenge", "friendship", "death"},
                                           .prefix = "kw-", .skew = 0.3}}});
  c.tables.push_back({"cast_info", rows(24000),
                      {serial(), fk("person_id", "name", 0.7), fk("movie_id", "title", 0.5),
                       fk("role_id", "role_type", 0.9),
                       vocab("note", {"", "(voice)", "(uncredited)", "(producer)", "(executive producer)",
                                      "(archive footage)", "(as himself)", "(writer)"}, 1.0, "role_id"),
                       ColumnGen{.name = "nr_order", .kind = K::Int, .lo = 1, .domain = 50, .skew = 0.8}}});
  c.tables.push_back({"movie_info", rows(16000),
                      {serial(), fk("movie_id", "title", 0.5), fk("info_type_id", "info_type", 1.0),
                       vocab("info", {"Drama", "Comedy", "USA", "English", "Horror", "Action", "Germany", "German",
                                      "Thriller", "Documentary", "Romance", "Sci-Fi", "Japan", "French", "Western",
                                      "90", "120", "Color", "Black and White", "Dolby"}, 0.9, "info_type_id")}});
  c.tables.push_back({"movie_info_idx", rows(8000),
                      {serial(), fk("movie_id", "title", 0.5), fk("info_type_id", "info_type", 1.4),
                       pattern("info", "", 100, 0.4)}});
  c.tables.push_back({"movie_companies", rows(10000),
                      {serial(), fk("movie_id", "title", 0.5), fk("company_id", "company_name", 0.8),
                       fk("company_type_id", "company_type", 0.7),
                       vocab("note", {"", "(USA)", "(worldwide)", "(theatrical)", "(TV)", "(DVD)", "(co-production)",
                                      "(presents)"}, 0.9, "company_type_id")}});
  c.tables.push_back({"movie_keyword", rows(12000),
                      {serial(), fk("movie_id", "title", 0.5), fk("keyword_id", "keyword", 0.7)}});
  return c;
}

}  // namespace qolab
