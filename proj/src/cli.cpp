#include "aot/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"

#include "aot/adapted_metrics.hpp"
#include "aot/experiment.hpp"
#include "aot/json_io.hpp"
#include "aot/simplex.hpp"
#include "aot/weak_ot.hpp"

namespace aot::cli {

namespace {

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(std::ostream& out, const nlohmann::json& doc, const std::string& path) {
  if (path.empty())
    out << doc.dump(2) << '\n';
  else
    save_json_file(path, doc);
}

struct DistArgs {
  std::string metric = "aw";
  double p = 1.0;
  std::string left, right;
};

int run_dist(const DistArgs& a, std::ostream& out) {
  double value = 0;
  if (a.metric == "vsym") {
    value = v_sym(load_measure(a.left), load_measure(a.right), a.p);
  } else {
    ProcessTree x = load_tree(a.left), y = load_tree(a.right);
    if (a.metric == "w")
      value = w_dist(x, y, a.p).value;
    else if (a.metric == "cw")
      value = cw_dist(x, y, a.p).value;
    else if (a.metric == "scw")
      value = scw_dist(x, y, a.p);
    else
      value = aw_dist(x, y, a.p).value;
  }
  out << full(value) << '\n';
  return 0;
}

struct CheckArgs {
  std::vector<std::string> chain;  // two tree files
  double p = 1.0;
  std::string markov_file;
  int markov_order = 1;
  std::string coupling_file;
  std::string coupling_mode = "bicausal";
};

int run_check(const CheckArgs& a, std::ostream& out) {
  if (!a.chain.empty()) {
    ProcessTree x = load_tree(a.chain[0]), y = load_tree(a.chain[1]);
    double w = w_dist(x, y, a.p).value;
    double cw = cw_dist(x, y, a.p).value;
    double scw = scw_dist(x, y, a.p);
    double aw = aw_dist(x, y, a.p).value;
    out << "w=" << full(w) << " cw=" << full(cw) << " scw=" << full(scw) << " aw=" << full(aw)
        << '\n';
    bool ok = w <= cw + 1e-8 && cw <= scw + 1e-8 && scw <= aw + 1e-8;
    out << "chain: " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
  }
  if (!a.markov_file.empty()) {
    bool ok = is_n_markov(load_tree(a.markov_file), a.markov_order);
    out << "markov-" << a.markov_order << ": " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
  }
  Coupling pi = coupling_from_json(load_json_file(a.coupling_file), a.coupling_file);
  CouplingMode mode = a.coupling_mode == "marginal"  ? CouplingMode::Marginal
                      : a.coupling_mode == "causal" ? CouplingMode::Causal
                                                    : CouplingMode::Bicausal;
  double violation = coupling_violation(pi, mode);
  bool ok = violation <= 1e-8;
  out << a.coupling_mode << " violation=" << full(violation) << '\n'
      << "coupling: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

struct StatsArgs {
  std::string file;
  int prediction = -1;
  int hellwig_t = -1;
  int markov_n = -1;
  int markov_t = 1;
};

int run_stats(const StatsArgs& a, std::ostream& out, const std::string& out_path) {
  ProcessTree x = load_tree(a.file);
  if (a.prediction >= 0) {
    emit(out, to_json(prediction_process(x, a.prediction)), out_path);
    return 0;
  }
  if (a.hellwig_t >= 0) {
    emit(out, to_json(hellwig_statistic(x, a.hellwig_t)), out_path);
    return 0;
  }
  if (a.markov_n >= 0) {
    emit(out, to_json(markov_statistic(x, a.markov_n, a.markov_t).law), out_path);
    return 0;
  }
  int order = 0;  // smallest n with the Markov property, 0 = none below horizon
  for (int n = 1; n < std::max(x.horizon(), 2); ++n)
    if (is_n_markov(x, n)) {
      order = n;
      break;
    }
  TreePartition partition = hk_partition(x);
  nlohmann::json summary{{"schema", "adapted-ot/stats-v1"},
                         {"horizon", x.horizon()},
                         {"dim", x.dim()},
                         {"nodes", x.size()},
                         {"leaves", x.leaves().size()},
                         {"markov_order", order > 0 ? nlohmann::json(order) : nlohmann::json()},
                         {"hk_classes", partition.classes},
                         {"hk_quotient_nodes", hk_quotient(x).size()}};
  emit(out, summary, out_path);
  return 0;
}

struct ConvergeArgs {
  std::string config_file;
  ExperimentConfig cfg;
  std::vector<std::string> metrics;
  std::vector<std::string> limit_flags;
  std::string csv_path, json_path;
};

int run_converge(ConvergeArgs& a, const CLI::App* cmd, std::ostream& out) {
  ExperimentConfig cfg;
  if (!a.config_file.empty())
    cfg = config_from_json(load_json_file(a.config_file), a.config_file);

  // explicit flags override the config file
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--family")) cfg.family = a.cfg.family;
  if (given("--k-min")) cfg.params.k_min = a.cfg.params.k_min;
  if (given("--k-max")) cfg.params.k_max = a.cfg.params.k_max;
  if (given("--order")) cfg.params.order = a.cfg.params.order;
  if (given("--horizon")) cfg.params.horizon = a.cfg.params.horizon;
  if (given("--states")) cfg.params.states = a.cfg.params.states;
  if (given("--seed")) cfg.params.seed = a.cfg.params.seed;
  if (given("--p")) cfg.p = a.cfg.p;
  if (given("--tol")) cfg.tolerance = a.cfg.tolerance;
  if (given("--jobs")) cfg.jobs = a.cfg.jobs;
  if (given("--file")) cfg.files = a.cfg.files;
  if (given("--metrics")) cfg.metrics = a.metrics;
  if (!a.limit_flags.empty()) {
    cfg.limits.clear();
    for (const std::string& spec : a.limit_flags) {
      auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw std::invalid_argument("--limit expects id=builtin or id=@file, got \"" + spec +
                                    "\"");
      LimitSpec limit;
      limit.id = spec.substr(0, eq);
      std::string target = spec.substr(eq + 1);
      if (target.front() == '@')
        limit.file = target.substr(1);
      else
        limit.builtin = target;
      cfg.limits.push_back(std::move(limit));
    }
  }

  ConvergenceReport report = run_convergence_experiment(cfg);
  if (!a.csv_path.empty()) {
    std::ofstream csv(a.csv_path);
    if (!csv) throw SchemaError(a.csv_path + ": cannot open file for writing");
    write_csv(report, csv);
  }
  if (!a.json_path.empty()) save_json_file(a.json_path, to_json(report));

  for (const ConvergenceVerdict& v : report.verdicts)
    out << v.metric << " -> " << v.limit_id << ": " << (v.converges ? "converges" : "diverges")
        << '\n';
  for (const std::string& metric : cfg.metrics) {
    out << metric << "-limits:";
    for (const std::string& id : limit_set(report, metric)) out << ' ' << id;
    out << '\n';
  }
  for (std::size_t i = 0; i < cfg.metrics.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.metrics.size(); ++j) {
      bool same = limit_set(report, cfg.metrics[i]) == limit_set(report, cfg.metrics[j]);
      out << cfg.metrics[i] << "-limit " << (same ? "= " : "!= ") << cfg.metrics[j] << "-limit\n";
    }
  return 0;
}

int run_validate(const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
  int failures = 0;
  for (const std::string& path : files) {
    try {
      nlohmann::json doc = load_json_file(path);
      std::string schema = schema_of(doc);
      if (schema == "adapted-ot/tree-v1")
        (void)tree_from_json(doc, path);
      else if (schema == "adapted-ot/measure-v1")
        (void)measure_from_json(doc, path);
      else if (schema == "adapted-ot/coupling-v1")
        (void)coupling_from_json(doc, path);
      else if (schema == "adapted-ot/experiment-v1")
        (void)config_from_json(doc, path);
      else if (schema == "adapted-ot/nested-law-v1" || schema == "adapted-ot/report-v1") {
        // output documents: shallow key check only
        const char* key = schema == "adapted-ot/report-v1" ? "cells" : "atoms";
        if (!doc.contains(key))
          throw SchemaError(path + ": missing key \"" + std::string(key) + "\"");
      } else {
        throw SchemaError(path + ": schema: unrecognized document type \"" + schema + "\"");
      }
      out << path << ": ok (" << schema << ")\n";
    } catch (const SchemaError& e) {
      err << e.what() << '\n';
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adapted optimal transport toolkit for finite process trees"};
  app.require_subcommand(1);

  DistArgs dist_args;
  CLI::App* dist = app.add_subcommand("dist", "Distance between two documents");
  dist->add_option("--metric", dist_args.metric, "w|cw|scw|aw|vsym")
      ->check(CLI::IsMember({"w", "cw", "scw", "aw", "vsym"}))
      ->capture_default_str();
  dist->add_option("--p", dist_args.p, "cost exponent")->capture_default_str();
  dist->add_option("left", dist_args.left, "tree or measure file")->required();
  dist->add_option("right", dist_args.right, "tree or measure file")->required();

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "Run invariant checks");
  CLI::Option* chain_opt =
      check->add_option("--chain", check_args.chain, "two tree files: verify w <= cw <= scw <= aw")
          ->expected(2);
  check->add_option("--p", check_args.p, "cost exponent for --chain")->capture_default_str();
  CLI::Option* markov_opt =
      check->add_option("--markov", check_args.markov_file, "tree file: verify the Markov order");
  check->add_option("--order", check_args.markov_order, "order for --markov")
      ->capture_default_str();
  CLI::Option* coupling_opt =
      check->add_option("--coupling", check_args.coupling_file, "coupling file: verify feasibility");
  check->add_option("--mode", check_args.coupling_mode, "marginal|causal|bicausal")
      ->check(CLI::IsMember({"marginal", "causal", "bicausal"}))
      ->capture_default_str();
  chain_opt->excludes(markov_opt)->excludes(coupling_opt);
  markov_opt->excludes(coupling_opt);

  std::string quotient_file, quotient_out;
  bool quotient_plain = false;
  CLI::App* quotient = app.add_subcommand("quotient", "Emit the minimal equivalent tree");
  quotient->add_option("tree", quotient_file, "tree file")->required();
  quotient->add_flag("--plain", quotient_plain, "natural filtration of the path law instead");
  quotient->add_option("-o,--out", quotient_out, "write to file instead of stdout");

  StatsArgs stats_args;
  std::string stats_out;
  CLI::App* stats = app.add_subcommand("stats", "Filtration statistics of a tree");
  stats->add_option("tree", stats_args.file, "tree file")->required();
  CLI::Option* pred_opt =
      stats->add_option("--prediction", stats_args.prediction, "iterated prediction law of rank R");
  CLI::Option* hell_opt =
      stats->add_option("--hellwig", stats_args.hellwig_t, "information statistic at time T");
  CLI::Option* mark_opt =
      stats->add_option("--markov", stats_args.markov_n, "order-N one-step statistic");
  stats->add_option("--time", stats_args.markov_t, "time for --markov")->capture_default_str();
  stats->add_option("-o,--out", stats_out, "write to file instead of stdout");
  pred_opt->excludes(hell_opt)->excludes(mark_opt);
  hell_opt->excludes(mark_opt);

  ConvergeArgs conv;
  CLI::App* converge = app.add_subcommand("converge", "Run a convergence experiment");
  converge->add_option("--config", conv.config_file, "experiment config file");
  converge->add_option("--family", conv.cfg.family,
                       "leaky-bet|markov-perturbation|random-walk-quantization|custom-file-sequence");
  converge->add_option("--k-min", conv.cfg.params.k_min, "grid start");
  converge->add_option("--k-max", conv.cfg.params.k_max, "grid end");
  converge->add_option("--order", conv.cfg.params.order, "markov order");
  converge->add_option("--horizon", conv.cfg.params.horizon, "tree horizon");
  converge->add_option("--states", conv.cfg.params.states, "kernel states");
  converge->add_option("--seed", conv.cfg.params.seed, "family seed");
  converge->add_option("--p", conv.cfg.p, "cost exponent");
  converge->add_option("--tol", conv.cfg.tolerance, "convergence threshold");
  converge->add_option("--jobs", conv.cfg.jobs, "concurrent grid points");
  converge->add_option("--file", conv.cfg.files, "custom-file-sequence member (repeatable)");
  converge->add_option("--metrics", conv.metrics, "comma-separated metric list")->delimiter(',');
  converge->add_option("--limit", conv.limit_flags, "limit candidate id=builtin or id=@file");
  converge->add_option("--csv", conv.csv_path, "write cells as CSV");
  converge->add_option("--json", conv.json_path, "write the full report as JSON");

  std::vector<std::string> validate_files;
  CLI::App* validate = app.add_subcommand("validate", "Schema-check documents");
  validate->add_option("files", validate_files, "JSON documents")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 64;
  }

  try {
    if (dist->parsed()) return run_dist(dist_args, out);
    if (check->parsed()) {
      if (check_args.chain.empty() && check_args.markov_file.empty() &&
          check_args.coupling_file.empty())
        throw std::invalid_argument("check: pick one of --chain, --markov, --coupling");
      return run_check(check_args, out);
    }
    if (quotient->parsed()) {
      ProcessTree x = load_tree(quotient_file);
      emit(out, to_json(quotient_plain ? plainify(x) : hk_quotient(x)), quotient_out);
      return 0;
    }
    if (stats->parsed()) return run_stats(stats_args, out, stats_out);
    if (converge->parsed()) return run_converge(conv, converge, out);
    return run_validate(validate_files, out, err);
  } catch (const SchemaError& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const LpError& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace aot::cli
