#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qolab/catalog.hpp"

namespace qolab {

/// Set of query aliases, one bit per join-graph vertex. Vertex ids follow
/// ascending alias name, so bit order is also lexicographic alias order.
using AliasSet = std::uint32_t;

inline constexpr int kMaxAliases = 32;

inline constexpr AliasSet singleton(int vertex) { return AliasSet{1} << vertex; }
inline int alias_count(AliasSet set) { return std::popcount(set); }
inline int lowest_vertex(AliasSet set) { return std::countr_zero(set); }

struct ColumnRef {
  std::string alias;
  std::string column;

  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

enum class SelectionOp { Eq, Ne, Lt, Le, Gt, Ge, Like, In, Between };

std::string_view to_string(SelectionOp op);

struct SelectionPredicate {
  ColumnRef column;
  SelectionOp op = SelectionOp::Eq;
  /// One operand, except IN (one or more) and BETWEEN (lo, hi).
  std::vector<Value> operands;

  friend bool operator==(const SelectionPredicate&, const SelectionPredicate&) = default;
};

/// Equality between columns of two different aliases.
struct JoinPredicate {
  ColumnRef left;
  ColumnRef right;

  friend bool operator==(const JoinPredicate&, const JoinPredicate&) = default;
};

struct OutputSpec {
  /// COUNT(*) when empty; otherwise one MIN(alias.column) per entry.
  std::vector<ColumnRef> min_columns;
  std::vector<std::string> min_labels;

  bool count_star() const noexcept { return min_columns.empty(); }
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct QuerySpec {
  std::string name;
  /// (alias, table) in declaration order.
  std::vector<std::pair<std::string, std::string>> aliases;
  std::vector<SelectionPredicate> selections;
  std::vector<JoinPredicate> joins;
  OutputSpec output;

  const std::string& table_of(std::string_view alias) const;
  bool declares(std::string_view alias) const;

  /// Structural equality ignoring the query name.
  bool same_query(const QuerySpec& other) const {
    return aliases == other.aliases && selections == other.selections && joins == other.joins &&
           output == other.output;
  }
};

/// Parses the conjunctive SPJ dialect:
///   SELECT COUNT(*) | MIN(a.c) [AS l], ... FROM <from> [WHERE p AND p ...]
/// FROM items are comma separated `table [AS] alias` references, explicit
/// `x JOIN y ON p AND ...` chains, parenthesized joins, or derived tables
/// `(SELECT * FROM ... [WHERE ...]) [AS] name` whose aliases and predicates
/// are flattened into the outer query.
QuerySpec parse_query(std::string_view text);

/// Canonical comma-join rendering; parse_query(render_query(q)) reproduces q.
std::string render_query(const QuerySpec& spec);

std::string render_predicate(const SelectionPredicate& pred);
std::string render_predicate(const JoinPredicate& pred);
std::string render_literal(const Value& value);

/// Checks aliases, tables, columns and operand types against the catalog.
void bind_query(const QuerySpec& spec, const Catalog& catalog);

enum class EdgeKind { OneToMany, ManyToMany, OneToOne };

std::string_view to_string(EdgeKind kind);

struct JoinEdge {
  int a = -1;  ///< lower vertex id
  int b = -1;  ///< higher vertex id
  std::vector<int> predicates;  ///< indexes into QuerySpec::joins
  EdgeKind kind = EdgeKind::ManyToMany;
  /// Vertex holding the key for OneToMany edges, -1 otherwise.
  int key_side = -1;

  int other(int v) const noexcept { return v == a ? b : a; }
  int fk_side() const noexcept { return kind == EdgeKind::OneToMany ? other(key_side) : -1; }
};

struct Vertex {
  std::string alias;
  std::string table;
  std::uint64_t rows = 0;
};

class JoinGraph {
 public:
  JoinGraph() = default;

  const QuerySpec& spec() const noexcept { return spec_; }
  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  const std::vector<JoinEdge>& edges() const noexcept { return edges_; }
  int size() const noexcept { return static_cast<int>(vertices_.size()); }
  AliasSet all() const noexcept { return size() == 32 ? ~AliasSet{0} : (singleton(size()) - 1); }

  /// -1 when not a vertex.
  int vertex_of(std::string_view alias) const;
  const Vertex& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  AliasSet neighbors(int v) const { return adjacency_[static_cast<std::size_t>(v)]; }
  AliasSet neighbors(AliasSet set) const;

  /// True iff the induced subgraph on set is connected; singletons are.
  bool connected(AliasSet set) const;
  bool has_edge_between(AliasSet left, AliasSet right) const { return (neighbors(left) & right) != 0; }

  /// Join predicates with one side in left and the other in right, ascending.
  std::vector<int> crossing_predicates(AliasSet left, AliasSet right) const;
  /// Selection predicates on the alias of vertex v.
  const std::vector<int>& selections_of(int v) const { return selections_[static_cast<std::size_t>(v)]; }
  /// Vertices of the two sides of a join predicate.
  std::pair<int, int> predicate_vertices(int predicate) const { return predicate_vertices_[static_cast<std::size_t>(predicate)]; }
  /// Edge index connecting u and v, -1 when none.
  int edge_between(int u, int v) const;

  std::string describe(AliasSet set) const;

 private:
  friend JoinGraph build_join_graph(const QuerySpec& spec, const Catalog& catalog);

  QuerySpec spec_;
  std::vector<Vertex> vertices_;
  std::vector<JoinEdge> edges_;
  std::vector<AliasSet> adjacency_;
  std::vector<std::vector<int>> selections_;
  std::vector<std::pair<int, int>> predicate_vertices_;
};

/// Builds the typed join graph. Requires bind_query to succeed; throws
/// otherwise. Vertices are ordered by alias name.
JoinGraph build_join_graph(const QuerySpec& spec, const Catalog& catalog);

/// Alias-name overload of JoinGraph::connected; throws on unknown alias.
bool connected(const JoinGraph& graph, const std::vector<std::string>& aliases);

/// Reads a workload directory: manifest.txt lists one .sql file per line in
/// execution order (blank lines and '#' comments skipped). Query names are
/// the file stems.
std::vector<QuerySpec> load_workload(const std::string& dir);
QuerySpec load_query_file(const std::string& path);

}  // namespace qolab
