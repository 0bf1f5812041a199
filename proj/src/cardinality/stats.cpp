#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "qolab/cardinality.hpp"
#include "qolab/error.hpp"

namespace qolab {

namespace {

using nlohmann::json;

template <typename T>
void fill_stats(std::vector<T> values, int mcv_slots, int buckets, ColumnStats& out) {
  std::sort(values.begin(), values.end());
  out.rows = values.size();
  if (values.empty()) return;
  out.min = Value(values.front());
  out.max = Value(values.back());

  std::vector<std::pair<T, std::uint64_t>> freq;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    freq.emplace_back(values[i], j - i);
    i = j;
  }
  out.ndv = freq.size();

  std::vector<std::size_t> order(freq.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Most frequent first; ties by ascending value (order is already sorted).
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freq[a].second > freq[b].second; });
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, mcv_slots)), freq.size());
  std::vector<bool> is_mcv(freq.size(), false);
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < k; ++i) {
    is_mcv[order[i]] = true;
    out.mcv.emplace_back(Value(freq[order[i]].first), static_cast<double>(freq[order[i]].second) / n);
  }

  std::vector<T> rest;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (!is_mcv[i]) rest.insert(rest.end(), freq[i].second, freq[i].first);
  }
  if (rest.empty() || buckets <= 0) return;
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(buckets), rest.size());
  for (std::size_t i = 0; i <= b; ++i) {
    const std::size_t pos = std::min(rest.size() - 1, i * rest.size() / b);
    out.histogram.emplace_back(rest[i == b ? rest.size() - 1 : pos]);
  }
}

// Fraction of histogram rows strictly below v (inclusive=false) or at most v.
double histogram_cdf(const ColumnStats& s, const Value& v, bool inclusive) {
  const auto& h = s.histogram;
  if (h.size() < 2) return 0;
  const double nb = static_cast<double>(h.size() - 1);
  if (std::holds_alternative<std::int64_t>(v)) {
    // Integers are discrete: x <= v is x < v + 1.
    const double x = static_cast<double>(std::get<std::int64_t>(v)) + (inclusive ? 1.0 : 0.0);
    const double lo = static_cast<double>(std::get<std::int64_t>(h.front()));
    const double hi = static_cast<double>(std::get<std::int64_t>(h.back())) + 1.0;
    if (x <= lo) return 0;
    if (x >= hi) return 1;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      const double a = static_cast<double>(std::get<std::int64_t>(h[i]));
      double b = static_cast<double>(std::get<std::int64_t>(h[i + 1]));
      if (i + 2 == h.size()) b += 1.0;
      if (x < b || i + 2 == h.size()) {
        const double frac = b > a ? std::clamp((x - a) / (b - a), 0.0, 1.0) : 1.0;
        return (static_cast<double>(i) + frac) / nb;
      }
    }
    return 1;
  }
  if (v < h.front()) return 0;
  if (v > h.back()) return 1;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (v < h[i + 1] || (inclusive && v == h[i + 1] && i + 2 == h.size())) {
      const double frac = v == h[i] ? (inclusive ? 0.5 : 0.0) : 0.5;
      return (static_cast<double>(i) + frac) / nb;
    }
  }
  return 1;
}

double equality(const ColumnStats& s, const Value& v) {
  for (const auto& [value, f] : s.mcv) {
    if (value == v) return f;
  }
  if (s.ndv <= s.mcv.size()) return 0;
  return std::max(0.0, 1.0 - s.mcv_mass() - s.null_frac) / static_cast<double>(s.ndv - s.mcv.size());
}

// Selectivity of lo <(=) x <(=) hi; either bound may be absent.
double range(const ColumnStats& s, const std::optional<Value>& lo, bool lo_inclusive, const std::optional<Value>& hi,
             bool hi_inclusive) {
  double mass = 0;
  for (const auto& [value, f] : s.mcv) {
    const bool above = !lo || (lo_inclusive ? value >= *lo : value > *lo);
    const bool below = !hi || (hi_inclusive ? value <= *hi : value < *hi);
    if (above && below) mass += f;
  }
  const double upper = hi ? histogram_cdf(s, *hi, hi_inclusive) : 1.0;
  const double lower = lo ? histogram_cdf(s, *lo, !lo_inclusive) : 0.0;
  const double rest = std::max(0.0, 1.0 - s.mcv_mass() - s.null_frac);
  return mass + std::max(0.0, upper - lower) * rest;
}

json value_json(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

Value json_value(const json& j, DataType dtype) {
  if (dtype == DataType::Int64) return j.get<std::int64_t>();
  return j.get<std::string>();
}

}  // namespace

double ColumnStats::mcv_mass() const {
  double m = 0;
  for (const auto& e : mcv) m += e.second;
  return m;
}

ColumnStats build_column_stats(const Column& column, int mcv_slots, int buckets) {
  ColumnStats s;
  s.dtype = column.type();
  if (column.type() == DataType::Int64) {
    fill_stats(std::vector<std::int64_t>(column.ints().begin(), column.ints().end()), mcv_slots, buckets, s);
  } else {
    fill_stats(std::vector<std::string>(column.texts().begin(), column.texts().end()), mcv_slots, buckets, s);
  }
  return s;
}

const TableStats& StatsCatalog::table(std::string_view table) const {
  auto it = tables_.find(table);
  if (it == tables_.end()) throw Error("no statistics for table " + std::string(table));
  return it->second;
}

const ColumnStats& StatsCatalog::at(std::string_view table, std::string_view column) const {
  const auto& t = this->table(table);
  auto it = t.columns.find(column);
  if (it == t.columns.end()) throw Error("no statistics for " + std::string(table) + "." + std::string(column));
  return it->second;
}

bool StatsCatalog::has(std::string_view table, std::string_view column) const {
  auto it = tables_.find(table);
  return it != tables_.end() && it->second.columns.count(column) > 0;
}

ColumnStats& StatsCatalog::mutable_column(std::string_view table, std::string_view column) {
  auto it = tables_.find(table);
  if (it == tables_.end()) throw Error("no statistics for table " + std::string(table));
  auto c = it->second.columns.find(column);
  if (c == it->second.columns.end()) {
    throw Error("no statistics for " + std::string(table) + "." + std::string(column));
  }
  return c->second;
}

StatsCatalog build_stats(const Catalog& catalog, const StatsParams& params) {
  StatsCatalog stats;
  stats.params = params;
  for (const auto& [name, table] : catalog.tables()) {
    TableStats t;
    t.rows = table.data.row_count;
    for (std::size_t c = 0; c < table.def.columns.size(); ++c) {
      t.columns.emplace(table.def.columns[c].name,
                        build_column_stats(table.data.columns[c], params.mcv_slots, params.buckets));
    }
    stats.put(name, std::move(t));
  }
  return stats;
}

std::string save_stats(const StatsCatalog& stats) {
  json root;
  root["mcv_slots"] = stats.params.mcv_slots;
  root["buckets"] = stats.params.buckets;
  root["like_selectivity"] = stats.params.like_selectivity;
  json tables = json::object();
  for (const auto& [name, t] : stats.tables()) {
    json jt;
    jt["rows"] = t.rows;
    json cols = json::object();
    for (const auto& [cname, c] : t.columns) {
      json jc;
      jc["type"] = std::string(to_string(c.dtype));
      jc["rows"] = c.rows;
      jc["ndv"] = c.ndv;
      jc["null_frac"] = c.null_frac;
      jc["min"] = c.min ? value_json(*c.min) : json(nullptr);
      jc["max"] = c.max ? value_json(*c.max) : json(nullptr);
      json mcv = json::array();
      for (const auto& [v, f] : c.mcv) mcv.push_back({value_json(v), f});
      jc["mcv"] = mcv;
      json hist = json::array();
      for (const auto& v : c.histogram) hist.push_back(value_json(v));
      jc["histogram"] = hist;
      cols[cname] = jc;
    }
    jt["columns"] = cols;
    tables[name] = jt;
  }
  root["tables"] = tables;
  return root.dump(1) + "\n";
}

StatsCatalog load_stats(std::string_view document) {
  StatsCatalog stats;
  try {
    const json root = json::parse(document);
    stats.params.mcv_slots = root.value("mcv_slots", 10);
    stats.params.buckets = root.value("buckets", 20);
    stats.params.like_selectivity = root.value("like_selectivity", 0.01);
    for (const auto& [name, jt] : root.at("tables").items()) {
      TableStats t;
      t.rows = jt.at("rows").get<std::uint64_t>();
      for (const auto& [cname, jc] : jt.at("columns").items()) {
        ColumnStats c;
        c.dtype = jc.at("type").get<std::string>() == "text" ? DataType::Text : DataType::Int64;
        c.rows = jc.at("rows").get<std::uint64_t>();
        c.ndv = jc.at("ndv").get<std::uint64_t>();
        c.null_frac = jc.at("null_frac").get<double>();
        if (!jc.at("min").is_null()) c.min = json_value(jc.at("min"), c.dtype);
        if (!jc.at("max").is_null()) c.max = json_value(jc.at("max"), c.dtype);
        for (const auto& e : jc.at("mcv")) c.mcv.emplace_back(json_value(e.at(0), c.dtype), e.at(1).get<double>());
        for (const auto& e : jc.at("histogram")) c.histogram.push_back(json_value(e, c.dtype));
        t.columns.emplace(cname, std::move(c));
      }
      stats.put(name, std::move(t));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("statistics document: ") + e.what(), 0);
  }
  return stats;
}

double selectivity_selection(const SelectionPredicate& pred, const ColumnStats& stats, const StatsParams& params) {
  if (stats.rows == 0) return 0;
  const auto& ops = pred.operands;
  double s = 0;
  switch (pred.op) {
    case SelectionOp::Eq: s = equality(stats, ops.at(0)); break;
    case SelectionOp::Ne: s = 1.0 - stats.null_frac - equality(stats, ops.at(0)); break;
    case SelectionOp::In: {
      std::vector<Value> distinct(ops.begin(), ops.end());
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      for (const auto& v : distinct) s += equality(stats, v);
      break;
    }
    case SelectionOp::Lt: s = range(stats, std::nullopt, false, ops.at(0), false); break;
    case SelectionOp::Le: s = range(stats, std::nullopt, false, ops.at(0), true); break;
    case SelectionOp::Gt: s = range(stats, ops.at(0), false, std::nullopt, false); break;
    case SelectionOp::Ge: s = range(stats, ops.at(0), true, std::nullopt, false); break;
    case SelectionOp::Between: s = range(stats, ops.at(0), true, ops.at(1), true); break;
    case SelectionOp::Like: s = params.like_selectivity; break;
  }
  return std::clamp(s, 0.0, 1.0);
}

double selectivity_join(const ColumnStats& left, const ColumnStats& right) {
  const std::uint64_t ndv = std::max(left.ndv, right.ndv);
  if (ndv == 0) return 1.0;
  return 1.0 / static_cast<double>(ndv);
}

double estimate_cardinality(AliasSet key, const JoinGraph& graph, const StatsCatalog& stats) {
  if (key == 0 || !graph.connected(key)) throw PlanError("estimate for a disconnected alias set " + graph.describe(key));
  double rows = 1;
  bool empty = false;
  for (AliasSet rest = key; rest; rest &= rest - 1) {
    const auto& v = graph.vertex(lowest_vertex(rest));
    rows *= static_cast<double>(v.rows);
    empty = empty || v.rows == 0;
  }
  if (empty) return 0;
  for (AliasSet rest = key; rest; rest &= rest - 1) {
    const int v = lowest_vertex(rest);
    for (int s : graph.selections_of(v)) {
      const auto& pred = graph.spec().selections[static_cast<std::size_t>(s)];
      rows *= selectivity_selection(pred, stats.at(graph.vertex(v).table, pred.column.column), stats.params);
    }
  }
  for (const auto& edge : graph.edges()) {
    if ((key & singleton(edge.a)) == 0 || (key & singleton(edge.b)) == 0) continue;
    for (int p : edge.predicates) {
      const auto& jp = graph.spec().joins[static_cast<std::size_t>(p)];
      const auto& l = stats.at(graph.spec().table_of(jp.left.alias), jp.left.column);
      const auto& r = stats.at(graph.spec().table_of(jp.right.alias), jp.right.column);
      // Divide rather than multiply by 1/ndv so integral cases stay exact.
      const std::uint64_t ndv = std::max(l.ndv, r.ndv);
      if (ndv > 0) rows /= static_cast<double>(ndv);
    }
  }
  return std::max(1.0, rows);
}

}  // namespace qolab
