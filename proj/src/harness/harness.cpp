#include "qolab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qolab/error.hpp"

namespace qolab {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool is_timeout(const std::exception& e) { return dynamic_cast<const BudgetExceeded*>(&e) != nullptr; }

void check_plan(const PlanNode& plan, const JoinGraph& graph, const Catalog& catalog) {
  const auto violations = validate_plan(plan, graph, catalog);
  if (!violations.empty()) throw PlanError("invalid plan: " + violations.front());
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::TrueCard: return "truecard";
    case Method::CE: return "ce";
    case Method::NoCE: return "noce";
    case Method::QuickPick: return "quickpick";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "truecard") return Method::TrueCard;
  if (text == "ce") return Method::CE;
  if (text == "noce" || text == "simpli2") return Method::NoCE;
  if (text == "quickpick") return Method::QuickPick;
  throw Error("unknown method '" + std::string(text) + "'");
}

std::vector<Method> parse_methods(std::string_view comma_list) {
  std::vector<Method> out;
  for (const auto& m : split_list(comma_list)) out.push_back(parse_method(m));
  if (out.empty()) throw Error("no methods given");
  return out;
}

std::vector<Setting> parse_settings(std::string_view comma_list) {
  std::vector<Setting> out;
  for (const auto& s : split_list(comma_list)) {
    if (s == "both") {
      out.push_back(Setting::NonIndexed);
      out.push_back(Setting::Indexed);
    } else {
      out.push_back(parse_setting(s));
    }
  }
  if (out.empty()) throw Error("no settings given");
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

QueryContext::QueryContext(QuerySpec s, const Catalog& catalog) : spec(std::move(s)) {
  bind_query(spec, catalog);
  graph = build_join_graph(spec, catalog);
}

void QueryContext::ensure_true_cards(const Catalog& catalog, const ExecBudget& budget) const {
  precompute_true_cardinalities(graph, catalog, *memo, budget);
}

MethodPlan optimize_query(Method method, const QueryContext& query, const Catalog& catalog, const StatsCatalog& stats,
                          const HarnessOptions& options) {
  const auto config = OptimizerConfig::for_setting(catalog.setting(), options.shape);
  MethodPlan out;
  const auto start = Clock::now();
  switch (method) {
    case Method::TrueCard: {
      const TrueCardProvider provider(query.graph, catalog, *query.memo, options.truecard_budget);
      out.plan = dp_optimize(query.graph, catalog, provider, options.cost, config);
      break;
    }
    case Method::CE: {
      const EstimatedProvider provider(query.graph, stats);
      out.plan = dp_optimize(query.graph, catalog, provider, options.cost, config);
      break;
    }
    case Method::NoCE: {
      const auto order = simpli2_order(query.graph, catalog.setting());
      out.plan = simpli2_plan(order, query.graph, catalog, config);
      break;
    }
    case Method::QuickPick: {
      const EstimatedProvider provider(query.graph, stats);
      QuickPickOptions qp;
      qp.n = std::max<std::size_t>(1, options.quickpick_n);
      qp.seed = options.seed;
      const auto samples = quickpick_sample(query.graph, catalog, qp, config, &provider, options.cost);
      double best = 0;
      for (const auto& p : samples) {
        const double c = annotate(p, query.graph, provider, options.cost).cost();
        if (!out.plan || c < best) {
          best = c;
          out.plan = p;
        }
      }
      break;
    }
  }
  out.plan_time_ms = ms_since(start);
  return out;
}

WorkloadReport run_workload(std::vector<QueryContext>& queries, Catalog& catalog, const StatsCatalog& stats,
                            const HarnessOptions& options) {
  WorkloadReport report;
  for (const Setting setting : options.settings) {
    catalog.set_setting(setting);
    build_indexes(catalog);
    for (auto& query : queries) {
      try {
        query.ensure_true_cards(catalog, options.truecard_budget);
      } catch (const std::exception& e) {
        for (Method m : options.methods) {
          report.failures.push_back({query.spec.name, std::string(to_string(m)), std::string(to_string(setting)),
                                     std::string("exact cardinalities: ") + e.what(), is_timeout(e)});
        }
        continue;
      }
      const TrueCardProvider truth(query.graph, catalog, *query.memo, options.truecard_budget);
      const EstimatedProvider estimated(query.graph, stats);
      for (const Method method : options.methods) {
        try {
          const auto planned = optimize_query(method, query, catalog, stats, options);
          check_plan(*planned.plan, query.graph, catalog);
          MetricsRow row;
          row.query = query.spec.name;
          row.method = method;
          row.setting = setting;
          row.workers = options.exec.workers;
          row.plan_time_ms = planned.plan_time_ms;
          row.cost_under_true_cards = annotate(planned.plan, query.graph, truth, options.cost).cost();
          switch (method) {
            case Method::TrueCard: row.cost_under_method_cards = row.cost_under_true_cards; break;
            case Method::CE:
            case Method::QuickPick:
              row.cost_under_method_cards = annotate(planned.plan, query.graph, estimated, options.cost).cost();
              break;
            case Method::NoCE: break;
          }
          row.census = count_operators(*planned.plan);
          row.plan_digest = plan_digest(*planned.plan, query.graph);
          if (options.execute) {
            const auto result = execute_plan(*planned.plan, query.graph, catalog, options.exec);
            row.exec_time_median_ms = result.median_ms;
            row.result_count = result.row_count;
            row.result_digest = result.digest;
            row.timed_out = result.timed_out;
          } else {
            row.result_count = static_cast<std::uint64_t>(truth.cardinality(query.graph.all()));
          }
          report.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          report.failures.push_back(
              {query.spec.name, std::string(to_string(method)), std::string(to_string(setting)), e.what(), is_timeout(e)});
        }
      }
    }
  }
  report.aggregates = aggregate(report.rows);
  return report;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<int, int, int>;  // setting, workers, method
  std::map<Key, AggregateRow> groups;
  std::map<std::tuple<int, int, std::string>, const MetricsRow*> truecard;
  for (const auto& r : rows) {
    auto& g = groups[{static_cast<int>(r.setting), r.workers, static_cast<int>(r.method)}];
    g.method = r.method;
    g.setting = r.setting;
    g.workers = r.workers;
    ++g.queries;
    g.cumulative_cost += r.cost_under_true_cards;
    g.cumulative_exec_ms += r.exec_time_median_ms;
    g.cumulative_plan_ms += r.plan_time_ms;
    if (r.method == Method::TrueCard) truecard[{static_cast<int>(r.setting), r.workers, r.query}] = &r;
  }
  std::vector<AggregateRow> out;
  for (auto& [key, g] : groups) {
    double cost = 0, exec = 0, total = 0, base_cost = 0, base_exec = 0, base_total = 0;
    bool matched = false;
    for (const auto& r : rows) {
      if (r.setting != g.setting || r.workers != g.workers || r.method != g.method) continue;
      auto it = truecard.find({static_cast<int>(r.setting), r.workers, r.query});
      if (it == truecard.end()) continue;
      matched = true;
      cost += r.cost_under_true_cards;
      exec += r.exec_time_median_ms;
      total += r.exec_time_median_ms + r.plan_time_ms;
      base_cost += it->second->cost_under_true_cards;
      base_exec += it->second->exec_time_median_ms;
      base_total += it->second->exec_time_median_ms + it->second->plan_time_ms;
    }
    const double nan = std::nan("");
    g.cost_ratio = matched && base_cost > 0 ? cost / base_cost : nan;
    g.exec_ratio = matched && base_exec > 0 ? exec / base_exec : nan;
    g.total_ratio = matched && base_total > 0 ? total / base_total : nan;
    out.push_back(g);
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "query,method,setting,workers,plan_time_ms,exec_time_median_ms,cost_under_true_cards,"
         "cost_under_method_cards,result_count,ss,is,hj,nlj,timed_out\n";
  for (const auto& r : rows) {
    out << r.query << ',' << to_string(r.method) << ',' << to_string(r.setting) << ',' << r.workers << ','
        << ms(r.plan_time_ms) << ',' << ms(r.exec_time_median_ms) << ',' << num(r.cost_under_true_cards) << ','
        << (r.cost_under_method_cards ? num(*r.cost_under_method_cards) : "") << ',' << r.result_count << ','
        << r.census.ss << ',' << r.census.is << ',' << r.census.hj << ',' << r.census.nlj << ','
        << (r.timed_out ? "true" : "false") << '\n';
  }
}

void write_aggregates_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "method,setting,workers,queries,cumulative_cost,cumulative_exec_ms,cumulative_plan_ms,cost_ratio,"
         "exec_ratio,total_ratio\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.setting) << ',' << r.workers << ',' << r.queries << ','
        << num(r.cumulative_cost) << ',' << ms(r.cumulative_exec_ms) << ',' << ms(r.cumulative_plan_ms) << ','
        << num(r.cost_ratio) << ',' << num(r.exec_ratio) << ',' << num(r.total_ratio) << '\n';
  }
}

void write_failures_csv(std::ostream& out, const std::vector<QueryFailure>& rows) {
  out << "query,method,setting,timeout,message\n";
  for (const auto& r : rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), '"', '\'');
    out << r.query << ',' << r.method << ',' << r.setting << ',' << (r.timeout ? "true" : "false") << ",\"" << msg
        << "\"\n";
  }
}

std::vector<DistributionRow> distribution_experiment(const QueryContext& query, const Catalog& catalog,
                                                     const StatsCatalog& stats, const HarnessOptions& options,
                                                     std::size_t n, std::size_t execute_first) {
  query.ensure_true_cards(catalog, options.truecard_budget);
  const auto config = OptimizerConfig::for_setting(catalog.setting(), options.shape);
  const TrueCardProvider truth(query.graph, catalog, *query.memo, options.truecard_budget);

  std::vector<std::pair<std::string, PlanPtr>> markers;
  markers.emplace_back("truecard", optimize_query(Method::TrueCard, query, catalog, stats, options).plan);
  markers.emplace_back("ce", optimize_query(Method::CE, query, catalog, stats, options).plan);
  markers.emplace_back("noce", optimize_query(Method::NoCE, query, catalog, stats, options).plan);
  const double reference = annotate(markers.front().second, query.graph, truth, options.cost).cost();

  QuickPickOptions qp;
  qp.n = n;
  qp.seed = options.seed;
  const auto samples = quickpick_sample(query.graph, catalog, qp, config, &truth, options.cost);

  std::vector<DistributionRow> out;
  auto add = [&](const std::string& kind, std::size_t index, const PlanPtr& plan, bool run) {
    check_plan(*plan, query.graph, catalog);
    DistributionRow row;
    row.kind = kind;
    row.index = index;
    row.digest = plan_digest(*plan, query.graph);
    row.cost = annotate(plan, query.graph, truth, options.cost).cost();
    row.normalized_cost = reference > 0 ? row.cost / reference : 1.0;
    if (run) row.runtime_ms = execute_plan(*plan, query.graph, catalog, options.exec).median_ms;
    out.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < samples.size(); ++i) add("sample", i, samples[i], i < execute_first);
  for (std::size_t i = 0; i < markers.size(); ++i) add(markers[i].first, i, markers[i].second, execute_first > 0);
  return out;
}

void write_distribution_csv(std::ostream& out, const std::vector<DistributionRow>& rows) {
  out << "kind,index,digest,cost,normalized_cost,runtime_ms\n";
  for (const auto& r : rows) {
    out << r.kind << ',' << r.index << ",\"" << r.digest << "\"," << num(r.cost) << ',' << num(r.normalized_cost)
        << ',' << (r.runtime_ms ? ms(*r.runtime_ms) : "") << '\n';
  }
}

ChangeBucket change_bucket(double change_pct) {
  if (change_pct < 0) return ChangeBucket::Negative;
  if (change_pct < 40) return ChangeBucket::Low;
  return ChangeBucket::High;
}

std::string_view to_string(ChangeBucket bucket) {
  switch (bucket) {
    case ChangeBucket::Negative: return "<0%";
    case ChangeBucket::Low: return "0.1-39%";
    case ChangeBucket::High: return "40-94%";
  }
  return "?";
}

SweepReport thread_sweep(std::vector<QueryContext>& queries, Catalog& catalog, const StatsCatalog& stats,
                         const HarnessOptions& options, const std::vector<int>& worker_list) {
  const auto base_it = std::find(worker_list.begin(), worker_list.end(), 1);
  if (base_it == worker_list.end()) throw Error("worker list must include 1");
  const std::size_t base = static_cast<std::size_t>(base_it - worker_list.begin());

  SweepReport report;
  struct Samples {
    std::vector<double> speedups;
    std::vector<double> changes;
  };
  // Keyed by (method, setting, position in worker_list).
  std::map<std::tuple<int, int, std::size_t>, Samples> samples;
  for (const Setting setting : options.settings) {
    catalog.set_setting(setting);
    build_indexes(catalog);
    for (auto& query : queries) {
      for (const Method method : options.methods) {
        try {
          query.ensure_true_cards(catalog, options.truecard_budget);
          const auto plan = optimize_query(method, query, catalog, stats, options).plan;
          check_plan(*plan, query.graph, catalog);
          std::vector<SweepRow> rows;
          for (const int w : worker_list) {
            ExecConfig exec = options.exec;
            exec.workers = w;
            const auto result = execute_plan(*plan, query.graph, catalog, exec);
            SweepRow row;
            row.query = query.spec.name;
            row.method = method;
            row.setting = setting;
            row.workers = w;
            row.runtime_ms = result.median_ms;
            row.timed_out = result.timed_out;
            rows.push_back(row);
          }
          const double t1 = rows[base].runtime_ms;
          for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].speedup = rows[i].runtime_ms > 0 ? t1 / rows[i].runtime_ms : 1.0;
            rows[i].change_pct = t1 > 0 ? (t1 - rows[i].runtime_ms) / t1 * 100.0 : 0.0;
            if (i != base) {
              auto& bucket = samples[{static_cast<int>(method), static_cast<int>(setting), i}];
              bucket.speedups.push_back(rows[i].speedup);
              bucket.changes.push_back(rows[i].change_pct);
            }
            report.rows.push_back(rows[i]);
          }
        } catch (const std::exception& e) {
          report.failures.push_back(
              {query.spec.name, std::string(to_string(method)), std::string(to_string(setting)), e.what(), is_timeout(e)});
        }
      }
    }
  }
  for (const auto& [key, values] : samples) {
    const auto [method, setting, pos] = key;
    SweepBucketRow b;
    b.method = static_cast<Method>(method);
    b.setting = static_cast<Setting>(setting);
    b.workers = worker_list[pos];
    for (double c : values.changes) {
      switch (change_bucket(c)) {
        case ChangeBucket::Negative: ++b.negative; break;
        case ChangeBucket::Low: ++b.low; break;
        case ChangeBucket::High: ++b.high; break;
      }
    }
    const auto& s = values.speedups;
    b.median_speedup = median(s);
    b.fraction_faster =
        static_cast<double>(std::count_if(s.begin(), s.end(), [](double x) { return x > 1.0; })) /
        static_cast<double>(s.size());
    report.buckets.push_back(b);
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "query,method,setting,workers,runtime_ms,speedup,change_pct,timed_out\n";
  for (const auto& r : rows) {
    out << r.query << ',' << to_string(r.method) << ',' << to_string(r.setting) << ',' << r.workers << ','
        << ms(r.runtime_ms) << ',' << num(r.speedup) << ',' << num(r.change_pct) << ','
        << (r.timed_out ? "true" : "false") << '\n';
  }
}

void write_sweep_buckets_csv(std::ostream& out, const std::vector<SweepBucketRow>& rows) {
  out << "method,setting,workers,lt0,pct_0_39,pct_40_94,median_speedup,fraction_faster\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.setting) << ',' << r.workers << ',' << r.negative << ','
        << r.low << ',' << r.high << ',' << num(r.median_speedup) << ',' << num(r.fraction_faster) << '\n';
  }
}

std::vector<CensusRow> operator_census(const std::vector<MetricsRow>& rows) {
  std::map<std::tuple<int, int, int>, CensusRow> groups;
  for (const auto& r : rows) {
    auto& g = groups[{static_cast<int>(r.setting), r.workers, static_cast<int>(r.method)}];
    g.method = r.method;
    g.setting = r.setting;
    g.workers = r.workers;
    g.census += r.census;
    ++g.plans;
  }
  std::vector<CensusRow> out;
  for (auto& [key, g] : groups) out.push_back(g);
  return out;
}

void write_census_csv(std::ostream& out, const std::vector<CensusRow>& rows) {
  out << "method,setting,workers,plans,ss,is,hj,nlj,total\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.setting) << ',' << r.workers << ',' << r.plans << ','
        << r.census.ss << ',' << r.census.is << ',' << r.census.hj << ',' << r.census.nlj << ','
        << r.census.total() << '\n';
  }
}

void write_plot_script(const std::string& path, const std::string& kind, const std::string& csv_path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n";
  out << "csv = sys.argv[1] if len(sys.argv) > 1 else '" << csv_path << "'\n";
  out << "df = pd.read_csv(csv)\nfig, ax = plt.subplots(figsize=(7, 4))\n";
  if (kind == "distribution") {
    out << "s = df[df.kind == 'sample']\n"
           "ax.scatter(range(len(s)), s.normalized_cost, s=4, alpha=0.5, label='QuickPick')\n"
           "for k, c in [('truecard', 'k'), ('ce', 'b'), ('noce', 'r')]:\n"
           "    m = df[df.kind == k]\n"
           "    ax.axhline(m.normalized_cost.iloc[0], color=c, label=k)\n"
           "ax.set_yscale('log')\nax.set_ylabel('cost relative to truecard')\nax.legend()\n";
  } else if (kind == "sweep") {
    out << "g = df.groupby(['method', 'setting', 'workers']).speedup.median().unstack(0)\n"
           "g.plot.bar(ax=ax)\nax.set_ylabel('median speed-up')\n";
  } else {
    out << "g = df.groupby(['setting', 'method']).cost_under_true_cards.sum().unstack(1)\n"
           "g.plot.bar(ax=ax, logy=True)\nax.set_ylabel('cumulative cost')\n";
  }
  out << "fig.tight_layout()\nfig.savefig(csv.rsplit('.', 1)[0] + '.png', dpi=150)\n";
}

}  // namespace qolab
