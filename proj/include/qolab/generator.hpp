#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qolab/catalog.hpp"

namespace qolab {

struct ColumnGen {
  enum class Kind { Serial, ForeignKey, Int, Text };

  std::string name;
  Kind kind = Kind::Int;
  /// ForeignKey: referenced table (its key column is `id`).
  std::string ref_table;
  /// Int: values lo .. lo + domain - 1. Text: `domain` distinct strings,
  /// vocabulary entries first, then prefix + rank.
  std::int64_t lo = 0;
  std::uint64_t domain = 0;
  std::vector<std::string> vocabulary;
  std::string prefix;
  /// Zipf exponent; falls back to GeneratorConfig::skew.
  std::optional<double> skew;
  /// Earlier column of the same table this one follows with probability
  /// GeneratorConfig::correlation.
  std::string correlate_with;
};

struct TableGen {
  std::string name;
  std::uint64_t rows = 0;
  std::vector<ColumnGen> columns;
};

struct GeneratorConfig {
  std::uint64_t seed = 42;
  std::vector<TableGen> tables;
  double skew = 0;         // Zipf s; 0 draws each value equally often (within 1)
  double inclusion = 1.0;  // fraction of FK values that reference an existing key
  double correlation = 0;  // see ColumnGen::correlate_with

  void validate() const;
};

struct DimGen {
  std::string name;
  std::uint64_t rows = 0;
};

struct FactGen {
  std::string name;
  std::uint64_t rows = 0;
  std::vector<std::string> fk_targets;
  /// Domain of the shared `mk` column joining facts many-to-many; 0 = none.
  std::uint64_t shared_domain = 0;
};

/// Star/snowflake shape: dims get (id, v, label); facts get (id, <dim>_id
/// per target, mk when shared_domain > 0, v correlated with the first FK).
GeneratorConfig star_config(const std::vector<DimGen>& dims, const std::vector<FactGen>& facts, std::uint64_t seed,
                            double skew, double inclusion, double correlation);

/// IMDB-like schema used by the mini-JOB workload; scale multiplies all
/// non-lookup table sizes.
GeneratorConfig minijob_config(double scale = 1.0, std::uint64_t seed = 42);

/// Chain t1 -> t2 -> ... -> tn of FK joins plus per-table value columns.
GeneratorConfig chain_config(int tables, std::uint64_t rows, std::uint64_t seed = 42);

Catalog generate_catalog(const GeneratorConfig& config, Setting setting = Setting::NonIndexed);

/// Writes schema.json and one CSV per table into dir (created if needed).
void generate_dataset(const GeneratorConfig& config, const std::string& dir);

void save_catalog_dir(const Catalog& catalog, const std::string& dir);

}  // namespace qolab
