#include "qolab/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "qolab/csv.hpp"
#include "qolab/error.hpp"

namespace qolab {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::optional<std::int64_t> parse_int64(std::string_view text) {
  std::int64_t out = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return out;
}

DataType parse_type(const std::string& text) {
  if (text == "int64" || text == "int" || text == "integer") return DataType::Int64;
  if (text == "text" || text == "string") return DataType::Text;
  throw SchemaError("unknown column type '" + text + "'");
}

}  // namespace

std::string_view to_string(DataType type) {
  return type == DataType::Int64 ? "int64" : "text";
}

std::string value_to_string(const Value& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  return std::get<std::string>(value);
}

int TableDef::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return static_cast<int>(i);
  }
  return -1;
}

const ColumnDef& TableDef::column(std::string_view column) const {
  const int i = column_index(column);
  if (i < 0) throw SchemaError("table " + name + " has no column " + std::string(column));
  return columns[static_cast<std::size_t>(i)];
}

Value Column::value(RowId row) const {
  if (type_ == DataType::Int64) return ints_[row];
  return texts_[row];
}

void Column::append(const Value& value) {
  if (type_ == DataType::Int64) {
    ints_.push_back(std::get<std::int64_t>(value));
  } else {
    texts_.push_back(std::get<std::string>(value));
  }
}

const Column& Relation::column(std::string_view name) const {
  const int i = def.column_index(name);
  if (i < 0) throw SchemaError("table " + def.name + " has no column " + std::string(name));
  return columns[static_cast<std::size_t>(i)];
}

EqualityIndex::EqualityIndex(std::string table, std::string column, const Column& data)
    : table_(std::move(table)), column_(std::move(column)) {
  const std::size_t n = data.size();
  rows_.resize(n);
  // Two passes: count per key, then scatter rows so each list stays ascending.
  if (data.type() == DataType::Int64) {
    const auto values = data.ints();
    for (std::size_t r = 0; r < n; ++r) ++int_slots_[values[r]].count;
    std::uint32_t offset = 0;
    std::vector<std::int64_t> keys;
    keys.reserve(int_slots_.size());
    for (const auto& [key, slot] : int_slots_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (auto key : keys) {
      auto& slot = int_slots_[key];
      slot.offset = offset;
      offset += slot.count;
      slot.count = 0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      auto& slot = int_slots_[values[r]];
      rows_[slot.offset + slot.count++] = static_cast<RowId>(r);
    }
  } else {
    const auto values = data.texts();
    for (std::size_t r = 0; r < n; ++r) ++text_slots_[values[r]].count;
    std::uint32_t offset = 0;
    std::vector<std::string> keys;
    keys.reserve(text_slots_.size());
    for (const auto& [key, slot] : text_slots_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (const auto& key : keys) {
      auto& slot = text_slots_[key];
      slot.offset = offset;
      offset += slot.count;
      slot.count = 0;
    }
    for (std::size_t r = 0; r < n; ++r) {
      auto& slot = text_slots_[values[r]];
      rows_[slot.offset + slot.count++] = static_cast<RowId>(r);
    }
  }
}

std::span<const RowId> EqualityIndex::lookup(std::int64_t value) const {
  auto it = int_slots_.find(value);
  if (it == int_slots_.end()) return {};
  return std::span<const RowId>(rows_).subspan(it->second.offset, it->second.count);
}

std::span<const RowId> EqualityIndex::lookup(const std::string& value) const {
  auto it = text_slots_.find(value);
  if (it == text_slots_.end()) return {};
  return std::span<const RowId>(rows_).subspan(it->second.offset, it->second.count);
}

std::span<const RowId> EqualityIndex::lookup(const Value& value) const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return lookup(*i);
  return lookup(std::get<std::string>(value));
}

std::string_view to_string(Setting setting) {
  return setting == Setting::Indexed ? "indexed" : "nonindexed";
}

Setting parse_setting(std::string_view text) {
  if (text == "indexed") return Setting::Indexed;
  if (text == "nonindexed" || text == "non_indexed" || text == "non-indexed") return Setting::NonIndexed;
  throw Error("unknown setting '" + std::string(text) + "'");
}

bool Catalog::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

const Catalog::Table& Catalog::table(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw SchemaError("unknown table " + std::string(name));
  return it->second;
}

Catalog::Table& Catalog::mutable_table(std::string_view name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw SchemaError("unknown table " + std::string(name));
  return it->second;
}

void Catalog::add_table(TableDef def) {
  if (has_table(def.name)) throw SchemaError("duplicate table name " + def.name);
  Relation data;
  data.def = def;
  for (const auto& column : def.columns) data.columns.emplace_back(column.type);
  std::string name = def.name;
  tables_.emplace(std::move(name), Table{std::move(def), std::move(data)});
}

const EqualityIndex* Catalog::index(std::string_view table, std::string_view column) const {
  auto it = indexes_.find({std::string(table), std::string(column)});
  return it == indexes_.end() ? nullptr : &it->second;
}

void Catalog::put_index(EqualityIndex index) {
  auto key = std::make_pair(index.table(), index.column());
  indexes_.insert_or_assign(std::move(key), std::move(index));
}

Catalog load_schema(std::string_view document, Setting setting) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("schema: ") + e.what(), e.byte);
  }

  Catalog catalog(setting);
  try {
    if (!root.contains("tables") || !root["tables"].is_array()) {
      throw ParseError("schema: missing 'tables' array", 0);
    }
    for (const auto& t : root["tables"]) {
      TableDef def;
      def.name = t.at("name").get<std::string>();
      std::set<std::string> seen;
      for (const auto& c : t.at("columns")) {
        ColumnDef column;
        column.name = c.at("name").get<std::string>();
        column.type = parse_type(c.value("type", std::string("int64")));
        column.is_key = c.value("key", false);
        if (!seen.insert(column.name).second) {
          throw SchemaError("duplicate column " + def.name + "." + column.name);
        }
        def.columns.push_back(std::move(column));
      }
      if (t.contains("primary_key") && !t["primary_key"].is_null()) {
        const auto pk = t["primary_key"].get<std::string>();
        const int i = def.column_index(pk);
        if (i < 0) throw SchemaError("primary key " + def.name + "." + pk + " is not a column");
        def.columns[static_cast<std::size_t>(i)].is_key = true;
        def.primary_key = pk;
      }
      if (t.contains("foreign_keys")) {
        for (const auto& f : t["foreign_keys"]) {
          ForeignKey fk;
          fk.from_table = def.name;
          fk.from_column = f.at("column").get<std::string>();
          fk.to_table = f.at("ref_table").get<std::string>();
          fk.to_column = f.at("ref_column").get<std::string>();
          if (def.column_index(fk.from_column) < 0) {
            throw SchemaError("foreign key column " + def.name + "." + fk.from_column + " is not a column");
          }
          def.foreign_keys.push_back(std::move(fk));
        }
      }
      catalog.add_table(std::move(def));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema: ") + e.what(), 0);
  }

  // References are resolved after all tables are known; schemas may be cyclic.
  for (const auto& [name, table] : catalog.tables()) {
    for (const auto& fk : table.def.foreign_keys) {
      if (!catalog.has_table(fk.to_table)) {
        throw SchemaError("dangling foreign key " + name + "." + fk.from_column + " -> missing table " +
                          fk.to_table);
      }
      const auto& target = catalog.table(fk.to_table).def;
      const int i = target.column_index(fk.to_column);
      if (i < 0) {
        throw SchemaError("dangling foreign key " + name + "." + fk.from_column + " -> missing column " +
                          fk.to_table + "." + fk.to_column);
      }
      if (!target.columns[static_cast<std::size_t>(i)].is_key) {
        throw SchemaError("foreign key " + name + "." + fk.from_column + " references non-key column " +
                          fk.to_table + "." + fk.to_column);
      }
    }
  }
  return catalog;
}

Catalog load_schema_file(const std::string& path, Setting setting) {
  return load_schema(read_file(path), setting);
}

std::string save_schema(const Catalog& catalog) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& [name, table] : catalog.tables()) {
    nlohmann::json t;
    t["name"] = name;
    t["columns"] = nlohmann::json::array();
    for (const auto& c : table.def.columns) {
      t["columns"].push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}, {"key", c.is_key}});
    }
    t["primary_key"] = table.def.primary_key ? nlohmann::json(*table.def.primary_key) : nlohmann::json();
    t["foreign_keys"] = nlohmann::json::array();
    for (const auto& fk : table.def.foreign_keys) {
      t["foreign_keys"].push_back({{"column", fk.from_column}, {"ref_table", fk.to_table}, {"ref_column", fk.to_column}});
    }
    tables.push_back(std::move(t));
  }
  return nlohmann::json({{"tables", tables}}).dump(2) + "\n";
}

void load_table_csv_text(std::string_view text, std::string_view table_name, Catalog& catalog) {
  auto& table = catalog.mutable_table(table_name);
  const auto& def = table.def;
  auto records = csv::parse(text);
  if (records.empty()) throw DataError("table " + def.name + ": missing CSV header");

  const auto& header = records.front();
  if (header.size() != def.columns.size()) {
    throw DataError("table " + def.name + ": header mismatch, expected " + std::to_string(def.columns.size()) +
                    " columns, got " + std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] != def.columns[c].name) {
      throw DataError("table " + def.name + ": header mismatch at column " + std::to_string(c + 1) +
                      ", expected '" + def.columns[c].name + "' got '" + header[c] + "'");
    }
  }

  Relation relation;
  relation.def = def;
  for (const auto& column : def.columns) relation.columns.emplace_back(column.type);
  for (auto& column : relation.columns) {
    if (column.type() == DataType::Int64) {
      column.mutable_ints().reserve(records.size() - 1);
    } else {
      column.mutable_texts().reserve(records.size() - 1);
    }
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& record = records[r];
    if (record.size() != def.columns.size()) {
      throw DataError("table " + def.name + ": row " + std::to_string(r) + " has " + std::to_string(record.size()) +
                      " fields, expected " + std::to_string(def.columns.size()));
    }
    for (std::size_t c = 0; c < record.size(); ++c) {
      auto& column = relation.columns[c];
      if (column.type() == DataType::Int64) {
        auto v = parse_int64(record[c]);
        if (!v) {
          throw DataError("table " + def.name + ": cannot parse '" + record[c] + "' as int64 at row " +
                          std::to_string(r) + ", column " + def.columns[c].name);
        }
        column.mutable_ints().push_back(*v);
      } else {
        column.mutable_texts().push_back(std::move(record[c]));
      }
    }
  }
  relation.row_count = records.size() - 1;

  for (std::size_t c = 0; c < def.columns.size(); ++c) {
    if (!def.columns[c].is_key) continue;
    const auto& column = relation.columns[c];
    if (column.type() == DataType::Int64) {
      std::unordered_set<std::int64_t> seen;
      seen.reserve(relation.row_count);
      for (std::size_t r = 0; r < relation.row_count; ++r) {
        if (!seen.insert(column.ints()[r]).second) {
          throw DataError("table " + def.name + ": duplicate key value " + std::to_string(column.ints()[r]) +
                          " in column " + def.columns[c].name + " at row " + std::to_string(r + 1));
        }
      }
    } else {
      std::unordered_set<std::string> seen;
      for (std::size_t r = 0; r < relation.row_count; ++r) {
        if (!seen.insert(column.texts()[r]).second) {
          throw DataError("table " + def.name + ": duplicate key value '" + column.texts()[r] + "' in column " +
                          def.columns[c].name + " at row " + std::to_string(r + 1));
        }
      }
    }
  }
  table.data = std::move(relation);
}

void load_table_csv(const std::string& path, std::string_view table, Catalog& catalog) {
  load_table_csv_text(read_file(path), table, catalog);
}

std::string table_to_csv(const Relation& relation) {
  std::string out;
  for (std::size_t c = 0; c < relation.def.columns.size(); ++c) {
    if (c) out.push_back(',');
    out += csv::escape_field(relation.def.columns[c].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < relation.row_count; ++r) {
    for (std::size_t c = 0; c < relation.columns.size(); ++c) {
      if (c) out.push_back(',');
      const auto& column = relation.columns[c];
      if (column.type() == DataType::Int64) {
        out += std::to_string(column.ints()[r]);
      } else {
        const auto& text = column.texts()[r];
        // An empty text field is quoted so a single-column row is not an empty line.
        out += text.empty() ? std::string("\"\"") : csv::escape_field(text);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void save_table_csv(const std::string& path, const Relation& relation) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << table_to_csv(relation);
}

Catalog load_catalog_dir(const std::string& dir, Setting setting) {
  Catalog catalog = load_schema_file(dir + "/schema.json", setting);
  std::vector<std::string> names;
  for (const auto& [name, table] : catalog.tables()) names.push_back(name);
  for (const auto& name : names) load_table_csv(dir + "/" + name + ".csv", name, catalog);
  build_indexes(catalog);
  return catalog;
}

void build_indexes(Catalog& catalog) {
  catalog.clear_indexes();
  if (catalog.setting() != Setting::Indexed) return;
  for (const auto& [name, table] : catalog.tables()) {
    std::set<std::string> columns;
    if (table.def.primary_key) columns.insert(*table.def.primary_key);
    for (const auto& fk : table.def.foreign_keys) columns.insert(fk.from_column);
    for (const auto& column : columns) {
      catalog.put_index(EqualityIndex(name, column, table.data.column(column)));
    }
  }
}

std::string ConstraintViolation::describe() const {
  const char* label = kind == Kind::DuplicateKey ? "duplicate key" : "missing reference";
  return std::string(label) + " " + table + "." + column + " = " + value_to_string(value);
}

std::size_t ConstraintReport::count(ConstraintViolation::Kind kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const auto& v) { return v.kind == kind; }));
}

ConstraintReport validate_constraints(const Catalog& catalog, bool check_inclusion) {
  ConstraintReport report;
  for (const auto& [name, table] : catalog.tables()) {
    const auto& rel = table.data;
    for (std::size_t c = 0; c < table.def.columns.size(); ++c) {
      if (!table.def.columns[c].is_key) continue;
      const auto& column = rel.columns[c];
      std::set<Value> seen;
      std::set<Value> reported;
      for (std::size_t r = 0; r < rel.row_count; ++r) {
        Value v = column.value(static_cast<RowId>(r));
        if (!seen.insert(v).second && reported.insert(v).second) {
          report.violations.push_back(
              {ConstraintViolation::Kind::DuplicateKey, name, table.def.columns[c].name, std::move(v)});
        }
      }
    }
    if (!check_inclusion) continue;
    for (const auto& fk : table.def.foreign_keys) {
      const auto& target = catalog.table(fk.to_table).data.column(fk.to_column);
      std::set<Value> keys;
      for (std::size_t r = 0; r < target.size(); ++r) keys.insert(target.value(static_cast<RowId>(r)));
      const auto& column = rel.column(fk.from_column);
      std::set<Value> reported;
      for (std::size_t r = 0; r < rel.row_count; ++r) {
        Value v = column.value(static_cast<RowId>(r));
        if (!keys.count(v) && reported.insert(v).second) {
          report.violations.push_back(
              {ConstraintViolation::Kind::MissingReference, name, fk.from_column, std::move(v)});
        }
      }
    }
  }
  return report;
}

}  // namespace qolab
