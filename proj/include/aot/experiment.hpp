// Convergence experiments: evaluate process distances from a parametric
// family to declared limit candidates over a grid, emit CSV/JSON, and derive
// convergence verdicts from the values alone.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "aot/generate.hpp"
#include "aot/process.hpp"

namespace aot {

/// A limit candidate: exactly one of `builtin` and `file` is set.  Builtins:
/// "plain-bet", "informed-bet", "duplicated-bet", "leaky-bet:K", "walk:K"
/// (quantized walk at the config horizon), "markov-base" (the family's
/// unperturbed seeded base).
struct LimitSpec {
  std::string id;
  std::string builtin;
  std::string file;
};

struct ExperimentConfig {
  std::string family = "leaky-bet";  // generate() families or "custom-file-sequence"
  GenerateParams params;
  std::vector<std::string> files;  // custom-file-sequence members, index = grid point
  std::vector<std::string> metrics{"w", "aw"};
  double p = 1.0;
  double tolerance = 1e-6;
  std::vector<LimitSpec> limits;
  int jobs = 1;
};

/// Known metric names: w, cw, scw, aw, vsym, os, hellwig, markov-n.
bool known_metric(const std::string& name);

/// One evaluated grid cell.  `runtime_ms` is wall time of the single
/// evaluation; every other field is deterministic in (config, seed).
struct ConvergenceCell {
  int k = 0;
  std::string metric;
  std::string limit_id;
  double value = 0.0;
  double runtime_ms = 0.0;
};

struct ConvergenceVerdict {
  std::string metric;
  std::string limit_id;
  bool converges = false;
};

struct ConvergenceReport {
  std::string family;
  double p = 1.0;
  double tolerance = 1e-6;
  std::vector<int> grid;
  std::vector<ConvergenceCell> cells;  // k major, then metric, then limit (config order)
  std::vector<ConvergenceVerdict> verdicts;
};

/// Distance from x to `limit` under the named metric.  Path metrics use the
/// library solvers; "os" is the largest Snell-value gap over a fixed family
/// of 1-Lipschitz stopping costs; "hellwig"/"markov-n" sum nested W1
/// distances of the respective statistics over inner times plus the plain
/// path-law distance (which keeps them meaningful at horizon 1).
double metric_value(const std::string& metric, const ProcessTree& x, const ProcessTree& limit,
                    double p, int markov_order);

/// Evaluates the full grid (concurrently up to config.jobs; assembly is
/// deterministic) and fills in verdicts.
ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg);

/// Pure verdict logic: a (metric, limit) series converges when the final
/// value is <= tolerance and the last three grid points are non-increasing.
std::vector<ConvergenceVerdict> verdicts_from_cells(const std::vector<ConvergenceCell>& cells,
                                                    const std::vector<int>& grid,
                                                    double tolerance);

/// Limit ids the metric converges to, in report order.
std::vector<std::string> limit_set(const ConvergenceReport& report, const std::string& metric);

/// CSV with header family,k,metric,p,limit_id,value,runtime_ms; values are
/// printed with 17 significant digits (round-trip exact).
void write_csv(const ConvergenceReport& report, std::ostream& out);
/// Reads cells back from write_csv output (header required).
std::vector<ConvergenceCell> read_csv_cells(std::istream& in);

nlohmann::json to_json(const ConvergenceReport& report);

/// Config documents (schema adapted-ot/experiment-v1).  Omitted keys keep
/// their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& source = "config");
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace aot
