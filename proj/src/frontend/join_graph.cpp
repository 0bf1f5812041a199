#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qolab/error.hpp"
#include "qolab/frontend.hpp"

namespace qolab {

namespace {

bool literal_matches(const Value& value, DataType type) {
  return type == DataType::Int64 ? std::holds_alternative<std::int64_t>(value)
                                 : std::holds_alternative<std::string>(value);
}

const ColumnDef& resolve(const QuerySpec& spec, const Catalog& catalog, const ColumnRef& ref) {
  if (!spec.declares(ref.alias)) throw SchemaError("predicate on undeclared alias " + ref.alias);
  const auto& table = catalog.table(spec.table_of(ref.alias));
  const int i = table.def.column_index(ref.column);
  if (i < 0) throw SchemaError("unknown column " + ref.alias + "." + ref.column + " (table " + table.def.name + ")");
  return table.def.columns[static_cast<std::size_t>(i)];
}

}  // namespace

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::OneToMany: return "1:n";
    case EdgeKind::ManyToMany: return "m:n";
    case EdgeKind::OneToOne: return "1:1";
  }
  return "?";
}

void bind_query(const QuerySpec& spec, const Catalog& catalog) {
  if (spec.aliases.empty()) throw SchemaError("query declares no aliases");
  if (spec.aliases.size() > static_cast<std::size_t>(kMaxAliases)) {
    throw SchemaError("query declares more than " + std::to_string(kMaxAliases) + " aliases");
  }
  for (const auto& [alias, table] : spec.aliases) {
    if (!catalog.has_table(table)) throw SchemaError("alias " + alias + " refers to unknown table " + table);
  }
  for (const auto& sel : spec.selections) {
    const auto& column = resolve(spec, catalog, sel.column);
    if (sel.operands.empty()) throw SchemaError("predicate without operand on " + sel.column.alias);
    for (const auto& v : sel.operands) {
      if (!literal_matches(v, column.type)) {
        throw SchemaError("operand " + render_literal(v) + " does not match type " +
                          std::string(to_string(column.type)) + " of " + sel.column.alias + "." + sel.column.column);
      }
    }
    if (sel.op == SelectionOp::Like && column.type != DataType::Text) {
      throw SchemaError("LIKE on non-text column " + sel.column.alias + "." + sel.column.column);
    }
    if (sel.op == SelectionOp::Between) {
      if (sel.operands.size() != 2) throw SchemaError("BETWEEN needs two operands");
      if (sel.operands[1] < sel.operands[0]) {
        throw SchemaError("BETWEEN bounds out of order on " + sel.column.alias + "." + sel.column.column);
      }
    } else if (sel.op != SelectionOp::In && sel.operands.size() != 1) {
      throw SchemaError("predicate expects one operand");
    }
  }
  for (const auto& join : spec.joins) {
    const auto& l = resolve(spec, catalog, join.left);
    const auto& r = resolve(spec, catalog, join.right);
    if (join.left.alias == join.right.alias) throw UnsupportedError("join predicate within a single alias");
    if (l.type != r.type) {
      throw SchemaError("join columns of different types: " + render_predicate(join));
    }
  }
  for (const auto& ref : spec.output.min_columns) resolve(spec, catalog, ref);
}

int JoinGraph::vertex_of(std::string_view alias) const {
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    if (vertices_[v].alias == alias) return static_cast<int>(v);
  }
  return -1;
}

AliasSet JoinGraph::neighbors(AliasSet set) const {
  AliasSet out = 0;
  for (AliasSet rest = set; rest; rest &= rest - 1) out |= adjacency_[static_cast<std::size_t>(lowest_vertex(rest))];
  return out & ~set;
}

bool JoinGraph::connected(AliasSet set) const {
  if (set == 0) return false;
  AliasSet reached = singleton(lowest_vertex(set));
  for (;;) {
    AliasSet grown = reached;
    for (AliasSet rest = reached; rest; rest &= rest - 1) {
      grown |= adjacency_[static_cast<std::size_t>(lowest_vertex(rest))] & set;
    }
    if (grown == reached) break;
    reached = grown;
  }
  return reached == set;
}

std::vector<int> JoinGraph::crossing_predicates(AliasSet left, AliasSet right) const {
  std::vector<int> out;
  for (std::size_t p = 0; p < predicate_vertices_.size(); ++p) {
    const auto [u, v] = predicate_vertices_[p];
    const AliasSet su = singleton(u);
    const AliasSet sv = singleton(v);
    if (((su & left) && (sv & right)) || ((su & right) && (sv & left))) out.push_back(static_cast<int>(p));
  }
  return out;
}

int JoinGraph::edge_between(int u, int v) const {
  const int a = std::min(u, v);
  const int b = std::max(u, v);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].a == a && edges_[e].b == b) return static_cast<int>(e);
  }
  return -1;
}

std::string JoinGraph::describe(AliasSet set) const {
  std::string out = "{";
  bool first = true;
  for (AliasSet rest = set; rest; rest &= rest - 1) {
    if (!first) out += ",";
    out += vertex(lowest_vertex(rest)).alias;
    first = false;
  }
  return out + "}";
}

JoinGraph build_join_graph(const QuerySpec& spec, const Catalog& catalog) {
  bind_query(spec, catalog);

  JoinGraph graph;
  graph.spec_ = spec;
  for (const auto& [alias, table] : spec.aliases) {
    graph.vertices_.push_back({alias, table, catalog.table(table).data.row_count});
  }
  std::sort(graph.vertices_.begin(), graph.vertices_.end(),
            [](const Vertex& x, const Vertex& y) { return x.alias < y.alias; });
  const std::size_t n = graph.vertices_.size();
  graph.adjacency_.assign(n, 0);
  graph.selections_.assign(n, {});

  for (std::size_t s = 0; s < spec.selections.size(); ++s) {
    const int v = graph.vertex_of(spec.selections[s].column.alias);
    graph.selections_[static_cast<std::size_t>(v)].push_back(static_cast<int>(s));
  }

  // Per predicate: which endpoints carry a declared key column.
  struct PairInfo {
    std::vector<int> predicates;
    bool key_low = false;
    bool key_high = false;
    bool both_in_one = false;
  };
  std::map<std::pair<int, int>, PairInfo> pairs;
  for (std::size_t p = 0; p < spec.joins.size(); ++p) {
    const auto& join = spec.joins[p];
    const int u = graph.vertex_of(join.left.alias);
    const int v = graph.vertex_of(join.right.alias);
    graph.predicate_vertices_.emplace_back(u, v);
    const bool key_u = resolve(spec, catalog, join.left).is_key;
    const bool key_v = resolve(spec, catalog, join.right).is_key;
    const int a = std::min(u, v);
    const int b = std::max(u, v);
    auto& info = pairs[{a, b}];
    info.predicates.push_back(static_cast<int>(p));
    const bool key_a = (a == u) ? key_u : key_v;
    const bool key_b = (a == u) ? key_v : key_u;
    if (key_a && key_b) info.both_in_one = true;
    info.key_low |= key_a;
    info.key_high |= key_b;
  }

  for (auto& [endpoints, info] : pairs) {
    JoinEdge edge;
    edge.a = endpoints.first;
    edge.b = endpoints.second;
    edge.predicates = std::move(info.predicates);
    if (info.both_in_one || (info.key_low && info.key_high)) {
      edge.kind = EdgeKind::OneToOne;
    } else if (info.key_low || info.key_high) {
      edge.kind = EdgeKind::OneToMany;
      edge.key_side = info.key_low ? edge.a : edge.b;
    } else {
      edge.kind = EdgeKind::ManyToMany;
    }
    graph.adjacency_[static_cast<std::size_t>(edge.a)] |= singleton(edge.b);
    graph.adjacency_[static_cast<std::size_t>(edge.b)] |= singleton(edge.a);
    graph.edges_.push_back(std::move(edge));
  }
  return graph;
}

bool connected(const JoinGraph& graph, const std::vector<std::string>& aliases) {
  AliasSet set = 0;
  for (const auto& alias : aliases) {
    const int v = graph.vertex_of(alias);
    if (v < 0) throw SchemaError("unknown alias " + alias);
    set |= singleton(v);
  }
  return graph.connected(set);
}

QuerySpec load_query_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  QuerySpec spec = parse_query(text.str());
  spec.name = std::filesystem::path(path).stem().string();
  return spec;
}

std::vector<QuerySpec> load_workload(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw Error("workload " + dir + " has no manifest.txt");
  std::vector<QuerySpec> queries;
  std::string line;
  while (std::getline(manifest, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    queries.push_back(load_query_file(dir + "/" + line.substr(first, last - first + 1)));
  }
  return queries;
}

}  // namespace qolab
