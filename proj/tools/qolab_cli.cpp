#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qolab/cardinality.hpp"
#include "qolab/error.hpp"
#include "qolab/generator.hpp"
#include "qolab/harness.hpp"

namespace fs = std::filesystem;
using namespace qolab;

namespace {

struct Globals {
  std::string data_dir = ".";
  std::string setting = "both";
  std::uint64_t seed = 42;
  double tau = 0.2;
  double lambda = 2.0;
  int workers = 1;
  int runs = 11;
  long timeout_ms = 30'000;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

template <typename Fn>
void write_csv(const fs::path& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  write_file(path, out.str());
  std::cerr << "wrote " << path.string() << "\n";
}

HarnessOptions harness_options(const Globals& g) {
  HarnessOptions o;
  o.settings = parse_settings(g.setting);
  o.seed = g.seed;
  o.cost.tau = g.tau;
  o.cost.lambda = g.lambda;
  o.cost.validate();
  o.exec.workers = g.workers;
  o.exec.runs = g.runs;
  o.exec.timeout = std::chrono::milliseconds(g.timeout_ms);
  o.truecard_budget.timeout = std::chrono::milliseconds(g.timeout_ms);
  return o;
}

StatsCatalog load_or_build_stats(const Globals& g, const Catalog& catalog) {
  const fs::path path = fs::path(g.data_dir) / "stats.json";
  if (fs::exists(path)) return load_stats(read_file(path.string()));
  return build_stats(catalog);
}

std::vector<QueryContext> load_queries(const std::string& dir, const Catalog& catalog) {
  std::vector<QueryContext> out;
  for (auto& spec : load_workload(dir)) out.emplace_back(std::move(spec), catalog);
  return out;
}

QueryContext load_one_query(const std::string& file, const std::string& sql, const Catalog& catalog) {
  if (!sql.empty()) {
    auto spec = parse_query(sql);
    spec.name = "adhoc";
    return QueryContext(std::move(spec), catalog);
  }
  if (file.empty()) throw Error("give --query FILE or --sql TEXT");
  return QueryContext(load_query_file(file), catalog);
}

// Restores exact cardinalities from a key->count file when present and
// writes back everything computed.
void with_truecard_file(const std::string& path, std::vector<QueryContext>& queries,
                        const std::function<void()>& body) {
  if (path.empty()) {
    body();
    return;
  }
  TrueCardStore store;
  if (fs::exists(path)) store = load_truecard_store(read_file(path));
  for (auto& q : queries) restore_memo(store, q.graph, *q.memo);
  body();
  for (auto& q : queries) store_memo(store, q.graph, *q.memo);
  write_file(path, save_truecard_store(store));
}

int report_failures(const std::vector<QueryFailure>& failures) {
  int internal = 0;
  for (const auto& f : failures) {
    std::cerr << (f.timeout ? "timeout: " : "error: ") << f.query << " " << f.method << " " << f.setting << ": "
              << f.message << "\n";
    if (!f.timeout) ++internal;
  }
  return internal == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qolab: join-order optimization laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Dataset directory (schema.json + CSVs)");
  app.add_option("--setting", g.setting, "indexed, nonindexed or both");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--tau", g.tau, "Scan cost factor");
  app.add_option("--lambda", g.lambda, "Index lookup cost factor");
  app.add_option("--workers", g.workers, "Executor workers")->check(CLI::PositiveNumber);
  app.add_option("--runs", g.runs, "Timed runs per query (median reported)")->check(CLI::PositiveNumber);
  app.add_option("--timeout-ms", g.timeout_ms, "Per-execution budget")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::string preset = "minijob";
  double scale = 1.0;
  std::optional<double> skew, inclusion, correlation;
  int dims = 3, facts = 2, chain = 12;
  std::uint64_t dim_rows = 1000, fact_rows = 100000, shared_domain = 0;
  gen->add_option("--preset", preset, "minijob, star or chain")->check(CLI::IsMember({"minijob", "star", "chain"}));
  gen->add_option("--scale", scale, "Size multiplier (minijob)");
  gen->add_option("--skew", skew, "Zipf exponent");
  gen->add_option("--inclusion", inclusion, "Fraction of FK values referencing existing keys");
  gen->add_option("--correlation", correlation, "Value/FK column linkage");
  gen->add_option("--dims", dims, "Dimension tables (star)");
  gen->add_option("--facts", facts, "Fact tables (star)");
  gen->add_option("--dim-rows", dim_rows, "Rows per dimension (star)");
  gen->add_option("--fact-rows", fact_rows, "Rows per fact (star, chain)");
  gen->add_option("--shared-domain", shared_domain, "Domain of the facts' shared m:n key (star)");
  gen->add_option("--tables", chain, "Tables (chain)");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Build column statistics");
  int mcv = 10, buckets = 20;
  double like_sel = 0.01;
  std::string queries_dir, truecard_file;
  stats_cmd->add_option("--mcv", mcv, "Most-common-value slots");
  stats_cmd->add_option("--buckets", buckets, "Equi-depth histogram buckets");
  stats_cmd->add_option("--like-selectivity", like_sel, "Constant LIKE selectivity");
  stats_cmd->add_option("--queries", queries_dir, "Workload directory (for --precompute-truecard)");
  stats_cmd->add_option("--precompute-truecard", truecard_file, "Write exact sub-join counts to this file");

  // optimize
  auto* opt = app.add_subcommand("optimize", "Optimize one query and print the plan");
  std::string method = "truecard", shape = "bushy", query_file, sql;
  std::size_t n = 1;
  opt->add_option("--method", method, "truecard, ce, noce or quickpick");
  opt->add_option("--shape", shape, "bushy or leftdeep");
  opt->add_option("--n", n, "QuickPick samples");
  opt->add_option("--query", query_file, "Query file");
  opt->add_option("--sql", sql, "Query text");

  // run
  auto* run = app.add_subcommand("run", "Run a workload with several methods");
  std::string methods = "truecard,ce,noce,quickpick", out_dir = "report";
  std::size_t qp_n = 100;
  bool no_exec = false;
  for (auto* sub : {run, app.add_subcommand("census", "Operator counts per method"),
                    app.add_subcommand("sweep-threads", "Time a workload at several worker counts")}) {
    sub->add_option("--queries", queries_dir, "Workload directory (default <data-dir>/queries)");
    sub->add_option("--methods", methods, "Comma-separated methods");
    sub->add_option("--shape", shape, "bushy or leftdeep");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--qp-n", qp_n, "Samples for the quickpick method");
    sub->add_option("--precompute-truecard", truecard_file, "Exact sub-join count file (read and updated)");
  }
  run->add_flag("--no-exec", no_exec, "Optimize and cost only");
  auto* census = app.get_subcommand("census");
  auto* sweep = app.get_subcommand("sweep-threads");
  std::string worker_list = "1,2,4";
  sweep->add_option("--worker-list", worker_list, "Comma-separated worker counts, must include 1");

  // distribution
  auto* dist = app.add_subcommand("distribution", "Cost distribution of random plans");
  std::size_t exec_sample = 0;
  std::size_t dist_n = 10'000;
  std::string dist_out = "distribution.csv";
  dist->add_option("--query", query_file, "Query file");
  dist->add_option("--sql", sql, "Query text");
  dist->add_option("--n", dist_n, "QuickPick samples");
  dist->add_option("--exec-sample", exec_sample, "Execute the first K samples and the markers");
  dist->add_option("--shape", shape, "bushy or leftdeep");
  dist->add_option("--out", dist_out, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GeneratorConfig config;
      if (preset == "minijob") {
        config = minijob_config(scale, g.seed);
      } else if (preset == "star") {
        std::vector<DimGen> d;
        std::vector<FactGen> f;
        std::vector<std::string> names;
        for (int i = 1; i <= dims; ++i) {
          d.push_back({"d" + std::to_string(i), dim_rows});
          names.push_back(d.back().name);
        }
        for (int i = 1; i <= facts; ++i) f.push_back({"f" + std::to_string(i), fact_rows, names, shared_domain});
        config = star_config(d, f, g.seed, 0, 1, 0);
      } else {
        config = chain_config(chain, fact_rows, g.seed);
      }
      if (skew) config.skew = *skew;
      if (inclusion) config.inclusion = *inclusion;
      if (correlation) config.correlation = *correlation;
      generate_dataset(config, g.data_dir);
      std::cerr << "generated " << config.tables.size() << " tables in " << g.data_dir << "\n";
      return 0;
    }

    const auto settings = parse_settings(g.setting);
    Catalog catalog = load_catalog_dir(g.data_dir, settings.front());
    if (queries_dir.empty()) queries_dir = (fs::path(g.data_dir) / "queries").string();

    if (*stats_cmd) {
      StatsParams params{mcv, buckets, like_sel};
      const auto stats = build_stats(catalog, params);
      write_file(fs::path(g.data_dir) / "stats.json", save_stats(stats));
      std::cerr << "wrote " << (fs::path(g.data_dir) / "stats.json").string() << "\n";
      if (!truecard_file.empty()) {
        auto queries = load_queries(queries_dir, catalog);
        const auto o = harness_options(g);
        with_truecard_file(truecard_file, queries, [&] {
          for (auto& q : queries) q.ensure_true_cards(catalog, o.truecard_budget);
        });
        std::cerr << "wrote " << truecard_file << "\n";
      }
      return 0;
    }

    const auto stats = load_or_build_stats(g, catalog);
    auto options = harness_options(g);
    options.shape = parse_shape(shape);

    if (*opt) {
      build_indexes(catalog);
      const auto query = load_one_query(query_file, sql, catalog);
      query.ensure_true_cards(catalog, options.truecard_budget);
      options.quickpick_n = n;
      const Method m = parse_method(method);
      const auto planned = optimize_query(m, query, catalog, stats, options);
      const auto violations = validate_plan(*planned.plan, query.graph, catalog);
      for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
      const TrueCardProvider truth(query.graph, catalog, *query.memo, options.truecard_budget);
      const auto annotated = annotate(planned.plan, query.graph, truth, options.cost);
      std::cout << "-- method " << to_string(m) << ", setting " << to_string(catalog.setting()) << ", plan time "
                << planned.plan_time_ms << " ms\n";
      std::cout << "-- cost under true cardinalities: " << annotated.cost() << "\n";
      if (m == Method::CE || m == Method::QuickPick) {
        const EstimatedProvider est(query.graph, stats);
        std::cout << "-- cost under estimates: " << annotate(planned.plan, query.graph, est, options.cost).cost()
                  << "\n";
      }
      std::cout << "-- digest " << plan_digest(*planned.plan, query.graph) << "\n";
      std::cout << render_plan_text(*planned.plan, query.graph, &annotated) << "\n";
      std::cout << render_sql(*planned.plan, query.graph);
      return violations.empty() ? 0 : 1;
    }

    if (*dist) {
      build_indexes(catalog);
      const auto query = load_one_query(query_file, sql, catalog);
      const auto rows = distribution_experiment(query, catalog, stats, options, dist_n, exec_sample);
      write_csv(dist_out, [&](std::ostream& out) { write_distribution_csv(out, rows); });
      const fs::path script = fs::path(dist_out).replace_extension(".py");
      write_plot_script(script.string(), "distribution", dist_out);
      return 0;
    }

    auto queries = load_queries(queries_dir, catalog);
    options.methods = parse_methods(methods);
    options.quickpick_n = qp_n;
    const fs::path out(out_dir);

    if (*run || *census) {
      options.execute = *run && !no_exec;
      WorkloadReport report;
      with_truecard_file(truecard_file, queries, [&] { report = run_workload(queries, catalog, stats, options); });
      if (*run) {
        write_csv(out / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, report.rows); });
        write_csv(out / "summary.csv", [&](std::ostream& o) { write_aggregates_csv(o, report.aggregates); });
        write_plot_script((out / "metrics.py").string(), "run", (out / "metrics.csv").string());
        write_aggregates_csv(std::cout, report.aggregates);
      }
      const auto rows = operator_census(report.rows);
      write_csv(out / "census.csv", [&](std::ostream& o) { write_census_csv(o, rows); });
      if (*census) write_census_csv(std::cout, rows);
      write_csv(out / "failures.csv", [&](std::ostream& o) { write_failures_csv(o, report.failures); });
      return report_failures(report.failures);
    }

    if (*sweep) {
      std::vector<int> workers;
      std::stringstream in(worker_list);
      for (std::string item; std::getline(in, item, ',');) workers.push_back(std::stoi(item));
      SweepReport report;
      with_truecard_file(truecard_file, queries,
                         [&] { report = thread_sweep(queries, catalog, stats, options, workers); });
      write_csv(out / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, report.rows); });
      write_csv(out / "sweep_buckets.csv", [&](std::ostream& o) { write_sweep_buckets_csv(o, report.buckets); });
      write_plot_script((out / "sweep.py").string(), "sweep", (out / "sweep.csv").string());
      write_sweep_buckets_csv(std::cout, report.buckets);
      return report_failures(report.failures);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
