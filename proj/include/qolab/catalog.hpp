#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace qolab {

using RowId = std::uint32_t;

enum class DataType { Int64, Text };

std::string_view to_string(DataType type);

/// A literal or stored value. Columns are typed, so a Value taken from a
/// column always holds the alternative matching the column's DataType.
using Value = std::variant<std::int64_t, std::string>;

std::string value_to_string(const Value& value);

struct ColumnDef {
  std::string name;
  DataType type = DataType::Int64;
  bool is_key = false;
};

struct ForeignKey {
  std::string from_table;
  std::string from_column;
  std::string to_table;
  std::string to_column;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::optional<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  /// -1 when absent.
  int column_index(std::string_view column) const;
  const ColumnDef& column(std::string_view column) const;
};

/// Columnar storage for a single attribute. Exactly one of the two vectors is
/// populated, depending on type.
class Column {
 public:
  explicit Column(DataType type = DataType::Int64) : type_(type) {}

  DataType type() const noexcept { return type_; }
  std::size_t size() const noexcept {
    return type_ == DataType::Int64 ? ints_.size() : texts_.size();
  }

  std::span<const std::int64_t> ints() const noexcept { return ints_; }
  std::span<const std::string> texts() const noexcept { return texts_; }
  std::vector<std::int64_t>& mutable_ints() noexcept { return ints_; }
  std::vector<std::string>& mutable_texts() noexcept { return texts_; }

  Value value(RowId row) const;
  void append(const Value& value);

 private:
  DataType type_;
  std::vector<std::int64_t> ints_;
  std::vector<std::string> texts_;
};

struct Relation {
  TableDef def;
  std::vector<Column> columns;
  std::size_t row_count = 0;

  const Column& column(std::string_view name) const;
};

/// Unclustered equality lookup on one column: value -> row positions.
/// Row lists are stored contiguously (CSR layout) in ascending row order.
class EqualityIndex {
 public:
  EqualityIndex() = default;
  EqualityIndex(std::string table, std::string column, const Column& data);

  const std::string& table() const noexcept { return table_; }
  const std::string& column() const noexcept { return column_; }

  std::span<const RowId> lookup(std::int64_t value) const;
  std::span<const RowId> lookup(const std::string& value) const;
  std::span<const RowId> lookup(const Value& value) const;

  std::size_t distinct_keys() const noexcept { return int_slots_.size() + text_slots_.size(); }

 private:
  struct Slot {
    std::uint32_t offset;
    std::uint32_t count;
  };

  std::string table_;
  std::string column_;
  std::vector<RowId> rows_;
  std::unordered_map<std::int64_t, Slot> int_slots_;
  std::unordered_map<std::string, Slot> text_slots_;
};

enum class Setting { Indexed, NonIndexed };

std::string_view to_string(Setting setting);
Setting parse_setting(std::string_view text);

class Catalog {
 public:
  struct Table {
    TableDef def;
    Relation data;
  };

  explicit Catalog(Setting setting = Setting::NonIndexed) : setting_(setting) {}

  Setting setting() const noexcept { return setting_; }
  void set_setting(Setting setting) noexcept { setting_ = setting; }

  bool has_table(std::string_view name) const;
  const Table& table(std::string_view name) const;
  Table& mutable_table(std::string_view name);
  const std::map<std::string, Table, std::less<>>& tables() const noexcept { return tables_; }
  void add_table(TableDef def);

  /// nullptr when no index exists on table.column.
  const EqualityIndex* index(std::string_view table, std::string_view column) const;
  std::size_t index_count() const noexcept { return indexes_.size(); }
  void put_index(EqualityIndex index);
  void clear_indexes() { indexes_.clear(); }

 private:
  Setting setting_;
  std::map<std::string, Table, std::less<>> tables_;
  std::map<std::pair<std::string, std::string>, EqualityIndex> indexes_;
};

/// Parses the JSON schema document
/// {tables: [{name, columns: [{name, type, key}], primary_key, foreign_keys: [{column, ref_table, ref_column}]}]}
/// into a catalog with empty relations.
Catalog load_schema(std::string_view document, Setting setting = Setting::NonIndexed);
Catalog load_schema_file(const std::string& path, Setting setting = Setting::NonIndexed);
std::string save_schema(const Catalog& catalog);

/// Loads one CSV (header line first) into catalog's relation for table.
void load_table_csv(const std::string& path, std::string_view table, Catalog& catalog);
void load_table_csv_text(std::string_view text, std::string_view table, Catalog& catalog);
void save_table_csv(const std::string& path, const Relation& relation);
std::string table_to_csv(const Relation& relation);

/// Loads schema.json and one <table>.csv per table from a directory.
Catalog load_catalog_dir(const std::string& dir, Setting setting);

/// In the indexed setting builds an index on every primary-key and
/// foreign-key column; in the non-indexed setting drops all indexes.
void build_indexes(Catalog& catalog);

struct ConstraintViolation {
  enum class Kind { DuplicateKey, MissingReference };
  Kind kind;
  std::string table;
  std::string column;
  Value value;
  std::string describe() const;
};

struct ConstraintReport {
  std::vector<ConstraintViolation> violations;
  bool clean() const noexcept { return violations.empty(); }
  std::size_t count(ConstraintViolation::Kind kind) const;
};

ConstraintReport validate_constraints(const Catalog& catalog, bool check_inclusion = true);

}  // namespace qolab
