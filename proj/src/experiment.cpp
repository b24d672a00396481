#include "aot/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "aot/adapted_metrics.hpp"
#include "aot/json_io.hpp"
#include "aot/weak_ot.hpp"

namespace aot {

namespace {

const char* const kMetricNames[] = {"w", "cw", "scw", "aw", "vsym", "os", "hellwig", "markov-n"};

// Fixed 1-Lipschitz stopping costs (w.r.t. the per-time path metric); the
// "os" metric is the largest Snell-value gap over this family.
double stopping_cost(int which, int t, const Vec& history, int dim) {
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t blocks = history.size() / d;
  Vec last(history.end() - static_cast<std::ptrdiff_t>(d), history.end());
  double last_norm = 0;
  for (double v : last) last_norm += v * v;
  last_norm = std::sqrt(last_norm);
  switch (which) {
    case 0:
      return last_norm;
    case 1:
      return std::max(last[0], 0.0);
    case 2:
      return -last[0];
    default: {  // half the running mean of block norms
      double acc = 0;
      for (std::size_t b = 0; b < blocks; ++b) {
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) s += history[b * d + i] * history[b * d + i];
        acc += std::sqrt(s);
      }
      (void)t;
      return 0.5 * acc / static_cast<double>(blocks);
    }
  }
}

double os_gap(const ProcessTree& x, const ProcessTree& y) {
  if (x.horizon() != y.horizon() || x.dim() != y.dim())
    throw std::invalid_argument("os metric: trees must share horizon and dimension");
  double worst = 0;
  for (int which = 0; which < 4; ++which) {
    auto cost = [which, d = x.dim()](int t, const Vec& h) {
      return stopping_cost(which, t, h, d);
    };
    double vx = optimal_stopping_value(x, node_costs_from_function(x, cost));
    double vy = optimal_stopping_value(y, node_costs_from_function(y, cost));
    worst = std::max(worst, std::abs(vx - vy));
  }
  return worst;
}

double statistic_gap(const ProcessTree& x, const ProcessTree& y, int markov_order,
                     bool hellwig) {
  if (x.horizon() != y.horizon() || x.dim() != y.dim())
    throw std::invalid_argument("statistic metrics: trees must share horizon and dimension");
  // plain term keeps the metric meaningful at horizon 1
  double total = wasserstein(path_law(x), path_law(y), 1.0);
  for (int t = 1; t < x.horizon(); ++t) {
    if (hellwig)
      total += nested_distance(hellwig_statistic(x, t), hellwig_statistic(y, t));
    else
      total += nested_distance(markov_statistic(x, markov_order, t).law,
                               markov_statistic(y, markov_order, t).law);
  }
  return total;
}

ProcessTree resolve_builtin(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "plain-bet") return plain_bet();
  if (name == "informed-bet") return informed_bet();
  if (name == "duplicated-bet") return duplicated_bet();
  if (name == "markov-base")
    return random_markov_base(cfg.params.order, cfg.params.horizon, cfg.params.states,
                              cfg.params.seed);
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string head = name.substr(0, colon);
    int k = 0;
    try {
      k = std::stoi(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("unknown builtin limit \"" + name + "\"");
    }
    if (head == "leaky-bet") return leaky_bet(k);
    if (head == "walk") return random_walk_quantization(k, cfg.params.horizon);
  }
  throw std::invalid_argument("unknown builtin limit \"" + name + "\"");
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.metrics.empty()) throw std::invalid_argument("experiment: no metrics requested");
  for (const std::string& m : cfg.metrics)
    if (!known_metric(m)) throw std::invalid_argument("experiment: unknown metric \"" + m + "\"");
  if (cfg.limits.empty()) throw std::invalid_argument("experiment: no limit candidates");
  for (const LimitSpec& l : cfg.limits) {
    if (l.id.empty() || l.id.find(',') != std::string::npos)
      throw std::invalid_argument("experiment: limit ids must be non-empty and comma-free");
    if (l.builtin.empty() == l.file.empty())
      throw std::invalid_argument("experiment: limit \"" + l.id +
                                  "\" needs exactly one of builtin/file");
  }
  if (cfg.family.find(',') != std::string::npos)
    throw std::invalid_argument("experiment: family name must be comma-free");
  if (!(cfg.p >= 1.0) || !std::isfinite(cfg.p))
    throw std::invalid_argument("experiment: p must be finite and >= 1");
  if (cfg.jobs < 1) throw std::invalid_argument("experiment: jobs must be >= 1");
}

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool known_metric(const std::string& name) {
  for (const char* m : kMetricNames)
    if (name == m) return true;
  return false;
}

double metric_value(const std::string& metric, const ProcessTree& x, const ProcessTree& limit,
                    double p, int markov_order) {
  if (metric == "w") return w_dist(x, limit, p).value;
  if (metric == "cw") return cw_dist(x, limit, p).value;
  if (metric == "scw") return scw_dist(x, limit, p);
  if (metric == "aw") return aw_dist(x, limit, p).value;
  if (metric == "vsym") return v_sym(path_law(x), path_law(limit), p);
  if (metric == "os") return os_gap(x, limit);
  if (metric == "hellwig") return statistic_gap(x, limit, markov_order, true);
  if (metric == "markov-n") return statistic_gap(x, limit, markov_order, false);
  throw std::invalid_argument("unknown metric \"" + metric + "\"");
}

ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);

  std::vector<ProcessTree> trees;
  std::vector<int> grid;
  if (cfg.family == "custom-file-sequence") {
    if (cfg.files.empty())
      throw std::invalid_argument("experiment: custom-file-sequence needs files");
    for (std::size_t i = 0; i < cfg.files.size(); ++i) {
      trees.push_back(load_tree(cfg.files[i]));
      grid.push_back(static_cast<int>(i) + 1);
    }
  } else {
    trees = generate(cfg.family, cfg.params);
    for (int k = cfg.params.k_min; k <= cfg.params.k_max; ++k) grid.push_back(k);
  }

  std::vector<ProcessTree> limits;
  limits.reserve(cfg.limits.size());
  for (const LimitSpec& l : cfg.limits)
    limits.push_back(l.file.empty() ? resolve_builtin(l.builtin, cfg) : load_tree(l.file));

  // grid points run concurrently; each slot is written by exactly one worker
  const std::size_t cells_per_point = cfg.metrics.size() * cfg.limits.size();
  std::vector<ConvergenceCell> cells(trees.size() * cells_per_point);
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_lock;

  auto worker = [&] {
    for (;;) {
      std::size_t g = cursor.fetch_add(1);
      if (g >= trees.size()) return;
      try {
        std::size_t slot = g * cells_per_point;
        for (const std::string& metric : cfg.metrics)
          for (std::size_t l = 0; l < limits.size(); ++l) {
            auto start = std::chrono::steady_clock::now();
            double value = metric_value(metric, trees[g], limits[l], cfg.p, cfg.params.order);
            std::chrono::duration<double, std::milli> took =
                std::chrono::steady_clock::now() - start;
            cells[slot++] = {grid[g], metric, cfg.limits[l].id, value, took.count()};
          }
      } catch (...) {
        std::lock_guard<std::mutex> hold(error_lock);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_threads =
      std::min(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(trees.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ConvergenceReport report;
  report.family = cfg.family;
  report.p = cfg.p;
  report.tolerance = cfg.tolerance;
  report.grid = grid;
  report.cells = std::move(cells);
  report.verdicts = verdicts_from_cells(report.cells, grid, cfg.tolerance);
  return report;
}

std::vector<ConvergenceVerdict> verdicts_from_cells(const std::vector<ConvergenceCell>& cells,
                                                    const std::vector<int>& grid,
                                                    double tolerance) {
  // series per (metric, limit), in first-encounter order
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<Vec> series;
  for (const ConvergenceCell& c : cells) {
    std::pair<std::string, std::string> key{c.metric, c.limit_id};
    auto it = std::find(keys.begin(), keys.end(), key);
    std::size_t at = static_cast<std::size_t>(it - keys.begin());
    if (it == keys.end()) {
      keys.push_back(key);
      series.emplace_back();
    }
    series[at].push_back(c.value);
  }

  std::vector<ConvergenceVerdict> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const Vec& v = series[i];
    bool ok = v.size() == grid.size() && !v.empty() && v.back() <= tolerance;
    const std::size_t tail = std::min<std::size_t>(3, v.size());
    for (std::size_t j = v.size() - tail; ok && j + 1 < v.size(); ++j)
      ok = v[j] + 1e-12 >= v[j + 1];
    out.push_back({keys[i].first, keys[i].second, ok});
  }
  return out;
}

std::vector<std::string> limit_set(const ConvergenceReport& report, const std::string& metric) {
  std::vector<std::string> out;
  for (const ConvergenceVerdict& v : report.verdicts)
    if (v.metric == metric && v.converges) out.push_back(v.limit_id);
  return out;
}

void write_csv(const ConvergenceReport& report, std::ostream& out) {
  out << "family,k,metric,p,limit_id,value,runtime_ms\n";
  for (const ConvergenceCell& c : report.cells) {
    char runtime[32];
    std::snprintf(runtime, sizeof runtime, "%.3f", c.runtime_ms);
    out << report.family << ',' << c.k << ',' << c.metric << ',' << csv_double(report.p) << ','
        << c.limit_id << ',' << csv_double(c.value) << ',' << runtime << '\n';
  }
}

std::vector<ConvergenceCell> read_csv_cells(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "family,k,metric,p,limit_id,value,runtime_ms")
    throw std::invalid_argument("read_csv_cells: missing or unexpected header");
  std::vector<ConvergenceCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7)
      throw std::invalid_argument("read_csv_cells: expected 7 columns, got line \"" + line + "\"");
    ConvergenceCell c;
    c.k = std::stoi(fields[1]);
    c.metric = fields[2];
    c.limit_id = fields[4];
    c.value = std::stod(fields[5]);
    c.runtime_ms = std::stod(fields[6]);
    cells.push_back(std::move(c));
  }
  return cells;
}

nlohmann::json to_json(const ConvergenceReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const ConvergenceCell& c : report.cells)
    cells.push_back({{"k", c.k},
                     {"metric", c.metric},
                     {"limit_id", c.limit_id},
                     {"value", c.value},
                     {"runtime_ms", c.runtime_ms}});
  nlohmann::json verdicts = nlohmann::json::array();
  for (const ConvergenceVerdict& v : report.verdicts)
    verdicts.push_back({{"metric", v.metric}, {"limit_id", v.limit_id}, {"converges", v.converges}});
  return {{"schema", "adapted-ot/report-v1"},
          {"family", report.family},
          {"p", report.p},
          {"tolerance", report.tolerance},
          {"grid", report.grid},
          {"cells", std::move(cells)},
          {"verdicts", std::move(verdicts)}};
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object() || schema_of(j) != "adapted-ot/experiment-v1")
    throw SchemaError(source + ": expected an adapted-ot/experiment-v1 object");
  static const char* const known[] = {"schema", "family",  "k_min", "k_max", "order",
                                      "horizon", "states", "seed",  "files", "metrics",
                                      "p",       "tolerance", "limits", "jobs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw SchemaError(source + ": unknown key \"" + it.key() + "\"");
  }
  ExperimentConfig cfg;
  auto fetch = [&](const char* key, auto& into) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      into = it->get<std::decay_t<decltype(into)>>();
    } catch (const nlohmann::json::exception&) {
      throw SchemaError(source + ": " + key + ": wrong type");
    }
  };
  fetch("family", cfg.family);
  fetch("k_min", cfg.params.k_min);
  fetch("k_max", cfg.params.k_max);
  fetch("order", cfg.params.order);
  fetch("horizon", cfg.params.horizon);
  fetch("states", cfg.params.states);
  fetch("seed", cfg.params.seed);
  fetch("files", cfg.files);
  fetch("metrics", cfg.metrics);
  fetch("p", cfg.p);
  fetch("tolerance", cfg.tolerance);
  fetch("jobs", cfg.jobs);
  if (auto it = j.find("limits"); it != j.end()) {
    if (!it->is_array()) throw SchemaError(source + ": limits: expected an array");
    cfg.limits.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const nlohmann::json& l = (*it)[i];
      std::string path = source + ": limits[" + std::to_string(i) + "]";
      if (!l.is_object()) throw SchemaError(path + ": expected an object");
      LimitSpec spec;
      for (auto kit = l.begin(); kit != l.end(); ++kit) {
        if (kit.key() == "id" && kit->is_string())
          spec.id = kit->get<std::string>();
        else if (kit.key() == "builtin" && kit->is_string())
          spec.builtin = kit->get<std::string>();
        else if (kit.key() == "file" && kit->is_string())
          spec.file = kit->get<std::string>();
        else
          throw SchemaError(path + ": unknown or mistyped key \"" + kit.key() + "\"");
      }
      cfg.limits.push_back(std::move(spec));
    }
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json limits = nlohmann::json::array();
  for (const LimitSpec& l : cfg.limits) {
    nlohmann::json spec{{"id", l.id}};
    if (!l.builtin.empty()) spec["builtin"] = l.builtin;
    if (!l.file.empty()) spec["file"] = l.file;
    limits.push_back(std::move(spec));
  }
  return {{"schema", "adapted-ot/experiment-v1"},
          {"family", cfg.family},
          {"k_min", cfg.params.k_min},
          {"k_max", cfg.params.k_max},
          {"order", cfg.params.order},
          {"horizon", cfg.params.horizon},
          {"states", cfg.params.states},
          {"seed", cfg.params.seed},
          {"files", cfg.files},
          {"metrics", cfg.metrics},
          {"p", cfg.p},
          {"tolerance", cfg.tolerance},
          {"limits", std::move(limits)},
          {"jobs", cfg.jobs}};
}

}  // namespace aot
