#include "qolab/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "qolab/error.hpp"
#include "qolab/kernels.hpp"

namespace qolab {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kScanChunk = 1 << 16;
constexpr std::size_t kProbeChunk = 1 << 12;
constexpr std::size_t kMinRowsPerWorker = 1 << 11;
constexpr std::uint32_t kNil = 0xFFFFFFFFu;

class Deadline {
 public:
  explicit Deadline(std::chrono::milliseconds budget) : at_(Clock::now() + budget) {}
  void check() const {
    if (Clock::now() > at_) throw BudgetExceeded("execution timed out");
  }

 private:
  Clock::time_point at_;
};

/// Splits [0, n) into contiguous ranges, one per worker, and runs fn(worker,
/// begin, end) concurrently. Results that workers append to per-worker
/// buffers are concatenated in worker order by callers, so output order does
/// not depend on the worker count.
template <typename Fn>
int parallel_ranges(int workers, std::size_t n, Fn&& fn) {
  int parts = std::max(1, workers);
  parts = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(parts),
                                                  std::max<std::size_t>(1, n / kMinRowsPerWorker)));
  if (parts == 1) {
    fn(0, std::size_t{0}, n);
    return 1;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(parts));
  auto run = [&](int w) {
    const std::size_t begin = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(parts);
    const std::size_t end = n * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(parts);
    try {
      fn(w, begin, end);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(parts - 1));
  for (int w = 1; w < parts; ++w) threads.emplace_back(run, w);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return parts;
}

/// Selection predicate bound to its stored column.
struct BoundSelection {
  const SelectionPredicate* pred = nullptr;
  const Column* column = nullptr;
  bool vector_kernel = false;  // int64 comparison or BETWEEN
  bool between = false;
  kernels::CompareOp op = kernels::CompareOp::Eq;
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::vector<std::int64_t> in_ints;
  std::vector<std::string> in_texts;

  bool matches(RowId row) const {
    if (column->type() == DataType::Int64) {
      const std::int64_t v = column->ints()[row];
      if (vector_kernel) {
        if (between) return v >= a && v <= b;
        switch (op) {
          case kernels::CompareOp::Eq: return v == a;
          case kernels::CompareOp::Ne: return v != a;
          case kernels::CompareOp::Lt: return v < a;
          case kernels::CompareOp::Le: return v <= a;
          case kernels::CompareOp::Gt: return v > a;
          case kernels::CompareOp::Ge: return v >= a;
        }
      }
      return std::binary_search(in_ints.begin(), in_ints.end(), v);
    }
    if (pred->op == SelectionOp::In) {
      return std::binary_search(in_texts.begin(), in_texts.end(), column->texts()[row]);
    }
    return selection_matches(*pred, *column, row);
  }
};

std::optional<kernels::CompareOp> kernel_op(SelectionOp op) {
  switch (op) {
    case SelectionOp::Eq: return kernels::CompareOp::Eq;
    case SelectionOp::Ne: return kernels::CompareOp::Ne;
    case SelectionOp::Lt: return kernels::CompareOp::Lt;
    case SelectionOp::Le: return kernels::CompareOp::Le;
    case SelectionOp::Gt: return kernels::CompareOp::Gt;
    case SelectionOp::Ge: return kernels::CompareOp::Ge;
    default: return std::nullopt;
  }
}

BoundSelection bind_selection(const SelectionPredicate& pred, const Column& column) {
  BoundSelection s;
  s.pred = &pred;
  s.column = &column;
  if (column.type() == DataType::Int64) {
    if (pred.op == SelectionOp::Between) {
      s.vector_kernel = true;
      s.between = true;
      s.a = std::get<std::int64_t>(pred.operands.at(0));
      s.b = std::get<std::int64_t>(pred.operands.at(1));
    } else if (auto op = kernel_op(pred.op)) {
      s.vector_kernel = true;
      s.op = *op;
      s.a = std::get<std::int64_t>(pred.operands.at(0));
    } else if (pred.op == SelectionOp::In) {
      for (const auto& v : pred.operands) s.in_ints.push_back(std::get<std::int64_t>(v));
      std::sort(s.in_ints.begin(), s.in_ints.end());
    }
  } else if (pred.op == SelectionOp::In) {
    for (const auto& v : pred.operands) s.in_texts.push_back(std::get<std::string>(v));
    std::sort(s.in_texts.begin(), s.in_texts.end());
  }
  return s;
}

std::vector<BoundSelection> bind_selections(const PlanNode& leaf, const JoinGraph& graph, const Catalog& catalog) {
  const auto& relation = catalog.table(graph.vertex(leaf.vertex).table).data;
  std::vector<BoundSelection> out;
  for (int s : leaf.selections) {
    const auto& pred = graph.spec().selections[static_cast<std::size_t>(s)];
    out.push_back(bind_selection(pred, relation.column(pred.column.column)));
  }
  // Vectorizable predicates first: they run over contiguous ranges.
  std::stable_partition(out.begin(), out.end(), [](const BoundSelection& s) { return s.vector_kernel; });
  return out;
}

struct Batch {
  std::vector<int> vertices;  // ascending
  std::vector<std::vector<RowId>> rows;
  std::size_t size = 0;

  int slot(int vertex) const {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), vertex);
    return static_cast<int>(it - vertices.begin());
  }
};

/// One side of an equality predicate as seen from an input batch.
struct KeyRef {
  int slot = 0;
  const Column* column = nullptr;
};

struct KeyPair {
  KeyRef left;
  KeyRef right;
};

using PairBuffer = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

class Engine {
 public:
  Engine(const JoinGraph& graph, const Catalog& catalog, int workers, Deadline deadline, std::uint64_t max_rows)
      : graph_(graph), catalog_(catalog), workers_(std::max(1, workers)), deadline_(deadline), max_rows_(max_rows) {}

  const JoinGraph& graph() const { return graph_; }
  const Catalog& catalog() const { return catalog_; }
  int workers() const { return workers_; }
  const Deadline& deadline() const { return deadline_; }
  std::uint64_t max_rows() const { return max_rows_; }

  const Column& column_of(int vertex, const std::string& column) const {
    return catalog_.table(graph_.vertex(vertex).table).data.column(column);
  }

  std::vector<RowId> scan(const PlanNode& leaf) {
    const auto& relation = catalog_.table(graph_.vertex(leaf.vertex).table).data;
    const std::size_t n = relation.row_count;
    const auto selections = bind_selections(leaf, graph_, catalog_);
    if (selections.empty()) {
      std::vector<RowId> all(n);
      std::iota(all.begin(), all.end(), RowId{0});
      return all;
    }
    std::vector<std::vector<RowId>> parts(static_cast<std::size_t>(workers_));
    const int used = parallel_ranges(workers_, n, [&](int w, std::size_t begin, std::size_t end) {
      auto& local = parts[static_cast<std::size_t>(w)];
      std::vector<RowId> buf(std::min(kScanChunk, end - begin));
      for (std::size_t chunk = begin; chunk < end; chunk += kScanChunk) {
        deadline_.check();
        const std::size_t len = std::min(kScanChunk, end - chunk);
        std::size_t count = filter_range(selections.front(), chunk, len, buf.data());
        for (std::size_t s = 1; s < selections.size() && count > 0; ++s) {
          count = refine(selections[s], std::span<const RowId>(buf.data(), count), buf.data());
        }
        local.insert(local.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(count));
      }
    });
    return concat(parts, used);
  }

  Batch materialize(const PlanNode& node) {
    if (node.is_leaf()) {
      Batch b;
      b.vertices = {node.vertex};
      b.rows.push_back(scan(node));
      b.size = b.rows.front().size();
      return b;
    }
    Batch left = materialize(*node.left);
    std::optional<Batch> right;
    if (node.algo == JoinAlgo::HJ) right = materialize(*node.right);

    std::vector<PairBuffer> pairs(static_cast<std::size_t>(workers_));
    std::atomic<std::uint64_t> produced{0};
    auto emit = [&](int w, std::uint32_t l, std::uint32_t r) {
      auto& buf = pairs[static_cast<std::size_t>(w)];
      buf.emplace_back(l, r);
      if ((buf.size() & 0xFFFF) == 0) {
        deadline_.check();
        if (produced.fetch_add(0x10000) + 0x10000 > max_rows_) {
          throw BudgetExceeded("intermediate result exceeds " + std::to_string(max_rows_) + " rows");
        }
      }
    };
    const int used = join(node, left, right ? &*right : nullptr, emit);
    return gather(node, left, right ? &*right : nullptr, pairs, used);
  }

  /// Runs the plan and hands every result row, as (left position, right
  /// position) of the root join, to sink. Leaves are handed row ids.
  template <typename Emit>
  int run_root(const PlanNode& node, Batch& left_out, std::optional<Batch>& right_out, Emit& emit) {
    if (node.is_leaf()) {
      left_out.vertices = {node.vertex};
      left_out.rows.push_back(scan(node));
      left_out.size = left_out.rows.front().size();
      const auto& rows = left_out.rows.front();
      return parallel_ranges(workers_, rows.size(), [&](int w, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) emit(w, static_cast<std::uint32_t>(i), 0u);
      });
    }
    left_out = materialize(*node.left);
    if (node.algo == JoinAlgo::HJ) right_out = materialize(*node.right);
    return join(node, left_out, right_out ? &*right_out : nullptr, emit);
  }

 private:
  std::size_t filter_range(const BoundSelection& s, std::size_t begin, std::size_t len, RowId* out) const {
    if (s.vector_kernel) {
      const auto values = s.column->ints().subspan(begin, len);
      const auto base = static_cast<std::uint32_t>(begin);
      return s.between ? kernels::filter_between(values, s.a, s.b, base, out)
                       : kernels::filter_compare(values, s.op, s.a, base, out);
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const auto row = static_cast<RowId>(begin + i);
      out[n] = row;
      n += s.matches(row) ? 1 : 0;
    }
    return n;
  }

  std::size_t refine(const BoundSelection& s, std::span<const RowId> candidates, RowId* out) const {
    if (s.vector_kernel) {
      return s.between ? kernels::refine_between(s.column->ints(), candidates, s.a, s.b, out)
                       : kernels::refine_compare(s.column->ints(), candidates, s.op, s.a, out);
    }
    std::size_t n = 0;
    for (const RowId row : candidates) {
      out[n] = row;
      n += s.matches(row) ? 1 : 0;
    }
    return n;
  }

  static std::vector<RowId> concat(std::vector<std::vector<RowId>>& parts, int used) {
    if (used == 1) return std::move(parts.front());
    std::size_t total = 0;
    for (int w = 0; w < used; ++w) total += parts[static_cast<std::size_t>(w)].size();
    std::vector<RowId> out;
    out.reserve(total);
    for (int w = 0; w < used; ++w) {
      const auto& p = parts[static_cast<std::size_t>(w)];
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::vector<KeyPair> key_pairs(const PlanNode& node, const Batch& left, const Batch* right,
                                 std::optional<int> skip = std::nullopt) const {
    std::vector<KeyPair> keys;
    for (int p : node.predicates) {
      if (skip && p == *skip) continue;
      const auto [u, v] = graph_.predicate_vertices(p);
      const int lv = (node.left->aliases & singleton(u)) ? u : v;
      const int rv = lv == u ? v : u;
      KeyPair k;
      k.left = {left.slot(lv), &column_of(lv, predicate_side(graph_, p, lv).column)};
      k.right = {right ? right->slot(rv) : 0, &column_of(rv, predicate_side(graph_, p, rv).column)};
      keys.push_back(k);
    }
    return keys;
  }

  static bool keys_equal(const Column& a, RowId ra, const Column& b, RowId rb) {
    if (a.type() == DataType::Int64) return a.ints()[ra] == b.ints()[rb];
    return a.texts()[ra] == b.texts()[rb];
  }

  // Folds each key column into per-row hashes for batch positions [begin, end).
  static void hash_positions(const Batch& batch, const std::vector<KeyRef>& keys, std::size_t begin, std::size_t end,
                             std::uint64_t* out) {
    std::fill(out, out + (end - begin), std::uint64_t{0});
    for (const auto& key : keys) {
      const std::span<const RowId> rows(batch.rows[static_cast<std::size_t>(key.slot)].data() + begin, end - begin);
      if (key.column->type() == DataType::Int64) {
        kernels::hash_combine_gather(key.column->ints(), rows, out);
      } else {
        const auto texts = key.column->texts();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          out[i] = kernels::mix64(out[i] * kernels::kCombine + std::hash<std::string>{}(texts[rows[i]]));
        }
      }
    }
  }

  template <typename Emit>
  int join(const PlanNode& node, const Batch& left, const Batch* right, Emit& emit) {
    if (node.algo == JoinAlgo::HJ) return hash_join(node, left, *right, emit);
    return index_nested_loop(node, left, emit);
  }

  template <typename Emit>
  int hash_join(const PlanNode& node, const Batch& left, const Batch& right, Emit& emit) {
    const bool build_left = node.build == BuildSide::Left;
    const Batch& build = build_left ? left : right;
    const Batch& probe = build_left ? right : left;
    const auto keys = key_pairs(node, left, &right);
    std::vector<KeyRef> build_keys;
    std::vector<KeyRef> probe_keys;
    for (const auto& k : keys) {
      build_keys.push_back(build_left ? k.left : k.right);
      probe_keys.push_back(build_left ? k.right : k.left);
    }

    // Build (sequential): chained table over build positions.
    const std::size_t n = build.size;
    std::vector<std::uint64_t> hashes(n);
    for (std::size_t begin = 0; begin < n; begin += kScanChunk) {
      deadline_.check();
      hash_positions(build, build_keys, begin, std::min(n, begin + kScanChunk), hashes.data() + begin);
    }
    std::size_t buckets = 16;
    while (buckets < 2 * n) buckets <<= 1;
    const std::uint64_t mask = buckets - 1;
    std::vector<std::uint32_t> heads(buckets, kNil);
    std::vector<std::uint32_t> next(n, kNil);
    for (std::size_t i = n; i-- > 0;) {
      const std::size_t b = hashes[i] & mask;
      next[i] = heads[b];
      heads[b] = static_cast<std::uint32_t>(i);
    }

    // Probe (partitioned across workers).
    return parallel_ranges(workers_, probe.size, [&](int w, std::size_t begin, std::size_t end) {
      std::vector<std::uint64_t> probe_hashes(kProbeChunk);
      for (std::size_t chunk = begin; chunk < end; chunk += kProbeChunk) {
        deadline_.check();
        const std::size_t stop = std::min(end, chunk + kProbeChunk);
        hash_positions(probe, probe_keys, chunk, stop, probe_hashes.data());
        for (std::size_t i = chunk; i < stop; ++i) {
          const std::uint64_t h = probe_hashes[i - chunk];
          for (std::uint32_t j = heads[h & mask]; j != kNil; j = next[j]) {
            if (hashes[j] != h) continue;
            bool equal = true;
            for (std::size_t k = 0; k < build_keys.size() && equal; ++k) {
              const auto& bk = build_keys[k];
              const auto& pk = probe_keys[k];
              equal = keys_equal(*pk.column, probe.rows[static_cast<std::size_t>(pk.slot)][i], *bk.column,
                                 build.rows[static_cast<std::size_t>(bk.slot)][j]);
            }
            if (!equal) continue;
            if (build_left) {
              emit(w, j, static_cast<std::uint32_t>(i));
            } else {
              emit(w, static_cast<std::uint32_t>(i), j);
            }
          }
        }
      }
    });
  }

  template <typename Emit>
  int index_nested_loop(const PlanNode& node, const Batch& outer, Emit& emit) {
    const PlanNode& inner = *node.right;
    if (!inner.is_leaf()) throw PlanError("NLJ inner input must be a base relation");
    const auto lookup = index_lookup_predicate(graph_, catalog_, node.left->aliases, inner.vertex);
    if (!lookup) throw PlanError("NLJ inner " + graph_.vertex(inner.vertex).alias + " has no usable index");
    const auto& inner_table = graph_.vertex(inner.vertex).table;
    const auto& inner_column = predicate_side(graph_, *lookup, inner.vertex).column;
    const EqualityIndex* index = catalog_.index(inner_table, inner_column);
    if (!index) throw PlanError("missing index " + inner_table + "." + inner_column);

    const auto [u, v] = graph_.predicate_vertices(*lookup);
    const int outer_vertex = u == inner.vertex ? v : u;
    const KeyRef outer_key{outer.slot(outer_vertex),
                           &column_of(outer_vertex, predicate_side(graph_, *lookup, outer_vertex).column)};
    const auto residual = key_pairs(node, outer, nullptr, lookup);
    const auto selections = bind_selections(inner, graph_, catalog_);

    return parallel_ranges(workers_, outer.size, [&](int w, std::size_t begin, std::size_t end) {
      const auto& outer_rows = outer.rows[static_cast<std::size_t>(outer_key.slot)];
      for (std::size_t i = begin; i < end; ++i) {
        if (((i - begin) & (kProbeChunk - 1)) == 0) deadline_.check();
        const RowId outer_row = outer_rows[i];
        const std::span<const RowId> matches =
            outer_key.column->type() == DataType::Int64 ? index->lookup(outer_key.column->ints()[outer_row])
                                                        : index->lookup(outer_key.column->texts()[outer_row]);
        for (const RowId inner_row : matches) {
          bool ok = true;
          for (const auto& s : selections) {
            if (!s.matches(inner_row)) {
              ok = false;
              break;
            }
          }
          for (std::size_t k = 0; k < residual.size() && ok; ++k) {
            const auto& key = residual[k];
            ok = keys_equal(*key.left.column, outer.rows[static_cast<std::size_t>(key.left.slot)][i],
                            *key.right.column, inner_row);
          }
          if (ok) emit(w, static_cast<std::uint32_t>(i), inner_row);
        }
      }
    });
  }

  Batch gather(const PlanNode& node, const Batch& left, const Batch* right, std::vector<PairBuffer>& pairs,
               int used) {
    Batch out;
    std::vector<std::size_t> offsets(static_cast<std::size_t>(used) + 1, 0);
    for (int w = 0; w < used; ++w) {
      offsets[static_cast<std::size_t>(w) + 1] = offsets[static_cast<std::size_t>(w)] + pairs[static_cast<std::size_t>(w)].size();
    }
    out.size = offsets.back();
    if (out.size > max_rows_) {
      throw BudgetExceeded("intermediate result exceeds " + std::to_string(max_rows_) + " rows");
    }
    // Column sources: (from left?, slot) per output vertex, ascending vertex.
    struct Source {
      int vertex;
      bool from_left;
      int slot;
    };
    std::vector<Source> sources;
    for (std::size_t s = 0; s < left.vertices.size(); ++s) sources.push_back({left.vertices[s], true, static_cast<int>(s)});
    if (right) {
      for (std::size_t s = 0; s < right->vertices.size(); ++s) {
        sources.push_back({right->vertices[s], false, static_cast<int>(s)});
      }
    } else {
      sources.push_back({node.right->vertex, false, -1});  // NLJ inner: pair holds the row id
    }
    std::sort(sources.begin(), sources.end(), [](const Source& a, const Source& b) { return a.vertex < b.vertex; });
    for (const auto& s : sources) out.vertices.push_back(s.vertex);
    out.rows.assign(sources.size(), std::vector<RowId>(out.size));

    auto fill = [&](int w) {
      const auto& buf = pairs[static_cast<std::size_t>(w)];
      const std::size_t base = offsets[static_cast<std::size_t>(w)];
      for (std::size_t c = 0; c < sources.size(); ++c) {
        const auto& s = sources[c];
        RowId* dst = out.rows[c].data() + base;
        if (s.from_left) {
          const RowId* src = left.rows[static_cast<std::size_t>(s.slot)].data();
          for (std::size_t k = 0; k < buf.size(); ++k) dst[k] = src[buf[k].first];
        } else if (s.slot >= 0) {
          const RowId* src = right->rows[static_cast<std::size_t>(s.slot)].data();
          for (std::size_t k = 0; k < buf.size(); ++k) dst[k] = src[buf[k].second];
        } else {
          for (std::size_t k = 0; k < buf.size(); ++k) dst[k] = buf[k].second;
        }
      }
    };
    if (used == 1) {
      fill(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 1; w < used; ++w) threads.emplace_back(fill, w);
      fill(0);
      for (auto& t : threads) t.join();
    }
    return out;
  }

  const JoinGraph& graph_;
  const Catalog& catalog_;
  int workers_;
  Deadline deadline_;
  std::uint64_t max_rows_;
};

/// Maps a root output (left position, right position) to the row ids of all
/// vertices in ascending vertex order.
class RowAssembler {
 public:
  RowAssembler(const PlanNode& root, const Batch& left, const std::optional<Batch>& right) : left_(left), right_(right) {
    if (root.is_leaf()) {
      sources_.push_back({root.vertex, true, 0});
    } else {
      for (std::size_t s = 0; s < left.vertices.size(); ++s) sources_.push_back({left.vertices[s], true, static_cast<int>(s)});
      if (right) {
        for (std::size_t s = 0; s < right->vertices.size(); ++s) {
          sources_.push_back({right->vertices[s], false, static_cast<int>(s)});
        }
      } else {
        sources_.push_back({root.right->vertex, false, -1});
      }
    }
    std::sort(sources_.begin(), sources_.end(), [](const Source& a, const Source& b) { return a.vertex < b.vertex; });
  }

  std::size_t width() const { return sources_.size(); }
  int vertex_at(std::size_t i) const { return sources_[i].vertex; }

  void assemble(std::uint32_t l, std::uint32_t r, RowId* out) const {
    for (std::size_t c = 0; c < sources_.size(); ++c) {
      const auto& s = sources_[c];
      if (s.from_left) {
        out[c] = left_.rows[static_cast<std::size_t>(s.slot)][l];
      } else if (s.slot >= 0) {
        out[c] = (*right_).rows[static_cast<std::size_t>(s.slot)][r];
      } else {
        out[c] = r;
      }
    }
  }

 private:
  struct Source {
    int vertex;
    bool from_left;
    int slot;
  };
  const Batch& left_;
  const std::optional<Batch>& right_;
  std::vector<Source> sources_;
};

struct WorkerSink {
  ResultDigest digest;
  std::vector<std::optional<Value>> mins;
  std::vector<RowId> row;
};

struct RunResult {
  std::uint64_t count = 0;
  std::uint64_t digest = ResultDigest::kEmpty;
  std::vector<std::optional<Value>> aggregates;
};

RunResult run_once(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog, int workers,
                   Deadline deadline, std::uint64_t max_rows) {
  Engine engine(graph, catalog, workers, deadline, max_rows);
  const auto& output = graph.spec().output;
  struct MinColumn {
    int vertex;
    const Column* column;
  };
  std::vector<MinColumn> min_columns;
  for (const auto& ref : output.min_columns) {
    const int v = graph.vertex_of(ref.alias);
    min_columns.push_back({v, &engine.column_of(v, ref.column)});
  }

  Batch left;
  std::optional<Batch> right;
  std::vector<WorkerSink> sinks(static_cast<std::size_t>(std::max(1, workers)));
  std::unique_ptr<RowAssembler> assembler;
  std::vector<int> min_slots;

  std::atomic<bool> ready{false};
  auto prepare = [&] {
    assembler = std::make_unique<RowAssembler>(plan, left, right);
    for (const auto& m : min_columns) {
      for (std::size_t i = 0; i < assembler->width(); ++i) {
        if (assembler->vertex_at(i) == m.vertex) min_slots.push_back(static_cast<int>(i));
      }
    }
    for (auto& s : sinks) {
      s.row.resize(assembler->width());
      s.mins.assign(min_columns.size(), std::nullopt);
    }
    ready = true;
  };

  auto emit = [&](int w, std::uint32_t l, std::uint32_t r) {
    auto& sink = sinks[static_cast<std::size_t>(w)];
    assembler->assemble(l, r, sink.row.data());
    sink.digest.add_row(sink.row);
    for (std::size_t m = 0; m < min_columns.size(); ++m) {
      const RowId row = sink.row[static_cast<std::size_t>(min_slots[m])];
      Value v = min_columns[m].column->value(row);
      auto& best = sink.mins[m];
      if (!best || v < *best) best = std::move(v);
    }
    if ((sink.digest.count() & 0xFFFFF) == 0) deadline.check();
  };

  // The assembler needs the materialized root inputs, so wrap emit to
  // initialize lazily on the first row (inputs are complete by then).
  std::mutex init_mutex;
  auto guarded = [&](int w, std::uint32_t l, std::uint32_t r) {
    if (!ready) {
      std::lock_guard lock(init_mutex);
      if (!ready) prepare();
    }
    emit(w, l, r);
  };
  engine.run_root(plan, left, right, guarded);

  RunResult result;
  ResultDigest total;
  result.aggregates.assign(min_columns.size(), std::nullopt);
  for (auto& s : sinks) {
    total.merge(s.digest);
    for (std::size_t m = 0; m < s.mins.size(); ++m) {
      if (s.mins[m] && (!result.aggregates[m] || *s.mins[m] < *result.aggregates[m])) result.aggregates[m] = s.mins[m];
    }
  }
  result.count = total.count();
  result.digest = total.value();
  return result;
}

}  // namespace

void ResultDigest::add_row(std::span<const RowId> row_ids) { add_hash(hash_row(row_ids)); }

std::uint64_t ResultDigest::hash_row(std::span<const RowId> row_ids) {
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    h = kernels::mix64(h * kernels::kCombine + kernels::mix64((static_cast<std::uint64_t>(i) << 32) | row_ids[i]));
  }
  return h;
}

std::uint64_t ResultDigest::value() const noexcept {
  if (count_ == 0) return kEmpty;
  return kernels::mix64(sum_ ^ kernels::mix64(count_));
}

std::string format_digest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

ResultSummary execute_plan(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog,
                           const ExecConfig& config) {
  ResultSummary summary;
  const int runs = std::max(1, config.runs);
  for (int run = 0; run < runs; ++run) {
    const auto start = Clock::now();
    try {
      RunResult r = run_once(plan, graph, catalog, config.workers, Deadline(config.timeout), config.max_rows);
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      summary.elapsed_ms.push_back(ms);
      if (run == 0) {
        summary.row_count = r.count;
        summary.digest = r.digest;
        summary.aggregates = std::move(r.aggregates);
      }
    } catch (const BudgetExceeded&) {
      summary.timed_out = true;
      summary.elapsed_ms.push_back(static_cast<double>(config.timeout.count()));
      break;
    }
  }
  if (summary.timed_out) {
    summary.median_ms = static_cast<double>(config.timeout.count());
    summary.row_count = 0;
    summary.digest = ResultDigest::kEmpty;
    summary.aggregates.clear();
    return summary;
  }
  std::vector<double> sorted = summary.elapsed_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  summary.median_ms = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  return summary;
}

PlanPtr left_deep_hash_plan(const std::vector<int>& order, const JoinGraph& graph) {
  if (order.empty()) throw PlanError("empty join order");
  PlanPtr plan = make_leaf(graph, order.front());
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!graph.has_edge_between(plan->aliases, singleton(order[i]))) {
      throw PlanError("join order prefix is not connected at " + graph.vertex(order[i]).alias);
    }
    plan = make_join(graph, plan, make_leaf(graph, order[i]), JoinAlgo::HJ, BuildSide::Right);
  }
  return plan;
}

std::vector<int> default_subset_order(AliasSet key, const JoinGraph& graph) {
  if (!graph.connected(key)) throw PlanError("sub-join key " + graph.describe(key) + " is not connected");
  auto rows = [&](int v) { return graph.vertex(v).rows; };
  int start = -1;
  for (AliasSet rest = key; rest; rest &= rest - 1) {
    const int v = lowest_vertex(rest);
    if (start < 0 || rows(v) < rows(start)) start = v;
  }
  std::vector<int> order = {start};
  AliasSet placed = singleton(start);
  while (placed != key) {
    int best = -1;
    bool best_one_to_many = false;
    for (AliasSet rest = graph.neighbors(placed) & key; rest; rest &= rest - 1) {
      const int v = lowest_vertex(rest);
      bool one_to_many = false;
      for (AliasSet in = graph.neighbors(v) & placed; in; in &= in - 1) {
        const int e = graph.edge_between(v, lowest_vertex(in));
        if (graph.edges()[static_cast<std::size_t>(e)].kind != EdgeKind::ManyToMany) one_to_many = true;
      }
      const bool better = best < 0 || (one_to_many && !best_one_to_many) ||
                          (one_to_many == best_one_to_many && rows(v) < rows(best));
      if (better) {
        best = v;
        best_one_to_many = one_to_many;
      }
    }
    order.push_back(best);
    placed |= singleton(best);
  }
  return order;
}

std::uint64_t execute_subset_in_order(AliasSet key, const std::vector<int>& order, const JoinGraph& graph,
                                      const Catalog& catalog, const ExecBudget& budget) {
  AliasSet covered = 0;
  for (int v : order) covered |= singleton(v);
  if (covered != key || order.size() != static_cast<std::size_t>(alias_count(key))) {
    throw PlanError("join order does not cover " + graph.describe(key));
  }
  const PlanPtr plan = left_deep_hash_plan(order, graph);
  Engine engine(graph, catalog, budget.workers, Deadline(budget.timeout), budget.max_rows);
  Batch left;
  std::optional<Batch> right;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::max(1, budget.workers)), 0);
  auto emit = [&](int w, std::uint32_t, std::uint32_t) { ++counts[static_cast<std::size_t>(w)]; };
  engine.run_root(*plan, left, right, emit);
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t execute_subset(AliasSet key, const JoinGraph& graph, const Catalog& catalog, const ExecBudget& budget) {
  return execute_subset_in_order(key, default_subset_order(key, graph), graph, catalog, budget);
}

bool like_match(std::string_view text, std::string_view pattern) {
  std::size_t t = 0;
  std::size_t p = 0;
  std::size_t star_p = std::string_view::npos;
  std::size_t star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool selection_matches(const SelectionPredicate& pred, const Column& column, RowId row) {
  const Value v = column.value(row);
  const auto& ops = pred.operands;
  switch (pred.op) {
    case SelectionOp::Eq: return v == ops.at(0);
    case SelectionOp::Ne: return v != ops.at(0);
    case SelectionOp::Lt: return v < ops.at(0);
    case SelectionOp::Le: return v <= ops.at(0);
    case SelectionOp::Gt: return v > ops.at(0);
    case SelectionOp::Ge: return v >= ops.at(0);
    case SelectionOp::Between: return v >= ops.at(0) && v <= ops.at(1);
    case SelectionOp::In: return std::find(ops.begin(), ops.end(), v) != ops.end();
    case SelectionOp::Like:
      return std::holds_alternative<std::string>(v) &&
             like_match(std::get<std::string>(v), std::get<std::string>(ops.at(0)));
  }
  return false;
}

}  // namespace qolab
