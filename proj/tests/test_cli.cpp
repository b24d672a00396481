#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aot/adapted_metrics.hpp"
#include "aot/cli.hpp"
#include "aot/experiment.hpp"
#include "aot/json_io.hpp"
#include "aot/weak_ot.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aot;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string write_doc(const std::string& name, const json& j) {
  std::string path = "tmp_cli_" + name;
  save_json_file(path, j);
  return path;
}

std::string write_text(const std::string& name, const std::string& text) {
  std::string path = "tmp_cli_" + name;
  std::ofstream f(path);
  f << text;
  return path;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

double first_number(const std::string& text) { return std::stod(text); }

}  // namespace

TEST_CASE("dist prints the library value to full precision") {
  std::string e1 = write_doc("e1.json", to_json(plain_bet()));
  std::string e2 = write_doc("e2.json", to_json(informed_bet()));

  CliResult r = run_cli({"dist", "--metric", "aw", "--p", "1", e1, e2});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == aw_dist(plain_bet(), informed_bet(), 1.0).value);
  CHECK(first_number(r.out) == 1.0);

  r = run_cli({"dist", "--metric", "w", "--p", "2", e1, e2});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == w_dist(plain_bet(), informed_bet(), 2.0).value);
  CHECK(first_number(r.out) == 0.0);

  r = run_cli({"dist", "--metric", "cw", "--p", "1", e2, e1});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == 0.0);

  r = run_cli({"dist", "--metric", "scw", "--p", "1", e1, e2});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == scw_dist(plain_bet(), informed_bet(), 1.0));

  // default metric is aw
  r = run_cli({"dist", e1, e2});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == 1.0);

  DiscreteMeasure coin = make_measure({{1.0}, {-1.0}}, {0.5, 0.5});
  DiscreteMeasure still = make_measure({{0.0}}, {1.0});
  std::string cf = write_doc("coin.json", to_json(coin));
  std::string sf = write_doc("still.json", to_json(still));
  r = run_cli({"dist", "--metric", "vsym", "--p", "1", cf, sf});
  REQUIRE(r.code == 0);
  CHECK(first_number(r.out) == doctest::Approx(v_sym(coin, still, 1.0)).epsilon(1e-12));
}

TEST_CASE("quotient merges duplicate structure; --plain strips information") {
  std::string e2 = write_doc("q_e2.json", to_json(informed_bet()));
  std::string e3 = write_doc("q_e3.json", to_json(duplicated_bet()));

  CliResult r = run_cli({"quotient", e3});
  REQUIRE(r.code == 0);
  ProcessTree q = tree_from_json(parse_json_text(r.out, "stdout"), "stdout");
  CHECK(q.size() == plain_bet().size());
  CHECK(aw_dist(q, plain_bet(), 1.0).value <= 1e-9);

  // informed bet is already minimal
  r = run_cli({"quotient", e2});
  REQUIRE(r.code == 0);
  q = tree_from_json(parse_json_text(r.out, "stdout"), "stdout");
  CHECK(q.size() == informed_bet().size());
  CHECK(aw_dist(q, informed_bet(), 1.0).value <= 1e-9);

  // the natural filtration of the path law forgets the early information
  r = run_cli({"quotient", "--plain", e2});
  REQUIRE(r.code == 0);
  q = tree_from_json(parse_json_text(r.out, "stdout"), "stdout");
  CHECK(aw_dist(q, plain_bet(), 1.0).value <= 1e-9);

  // -o writes the document instead of printing it
  r = run_cli({"quotient", e3, "-o", "tmp_cli_quotient_out.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  CHECK(aw_dist(load_tree("tmp_cli_quotient_out.json"), plain_bet(), 1.0).value <= 1e-9);
}

TEST_CASE("check runs chain, markov, and coupling suites") {
  std::string e1 = write_doc("c_e1.json", to_json(plain_bet()));
  std::string e2 = write_doc("c_e2.json", to_json(informed_bet()));

  CliResult r = run_cli({"check", "--chain", e1, e2, "--p", "1"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "chain: PASS"));
  CHECK(contains(r.out, "aw="));

  r = run_cli({"check", "--markov", e1, "--order", "1"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "markov-1: PASS"));

  // same path law, but the split at time 1 is invisible to the values
  r = run_cli({"check", "--markov", e2, "--order", "1"});
  CHECK(r.code == 1);
  CHECK(contains(r.out, "markov-1: FAIL"));

  // a bicausal optimizer passes every mode
  std::string good = write_doc("c_good.json", to_json(aw_dist(plain_bet(), informed_bet(), 1.0).coupling));
  for (const char* mode : {"marginal", "causal", "bicausal"}) {
    r = run_cli({"check", "--coupling", good, "--mode", mode});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "coupling: PASS"));
  }

  // anticipative coupling (entries index leaf positions): y's first step
  // reveals x's final outcome.  Correct marginals, so only the causality
  // checks reject it.
  json bad{{"schema", "adapted-ot/coupling-v1"},
           {"left", to_json(plain_bet())},
           {"right", to_json(informed_bet())},
           {"entries", json::array({json::array({0, 0, 0.5}), json::array({1, 1, 0.5})})}};
  std::string badf = write_doc("c_bad.json", bad);
  r = run_cli({"check", "--coupling", badf, "--mode", "marginal"});
  CHECK(r.code == 0);
  r = run_cli({"check", "--coupling", badf, "--mode", "causal"});
  CHECK(r.code == 1);
  CHECK(contains(r.out, "coupling: FAIL"));
  r = run_cli({"check", "--coupling", badf});  // bicausal by default
  CHECK(r.code == 1);

  // picking none of the suites is an error
  r = run_cli({"check"});
  CHECK(r.code == 1);
}

TEST_CASE("stats summarizes a tree and emits statistics") {
  std::string e1 = write_doc("s_e1.json", to_json(plain_bet()));
  std::string e2 = write_doc("s_e2.json", to_json(informed_bet()));

  CliResult r = run_cli({"stats", e1});
  REQUIRE(r.code == 0);
  json summary = parse_json_text(r.out, "stdout");
  CHECK(summary.at("horizon") == 2);
  CHECK(summary.at("nodes") == 4);
  CHECK(summary.at("leaves") == 2);
  CHECK(summary.at("markov_order") == 1);
  CHECK(summary.at("hk_classes") == 4);

  // no finite order: the one-step law at time 1 is not a function of values
  r = run_cli({"stats", e2});
  REQUIRE(r.code == 0);
  summary = parse_json_text(r.out, "stdout");
  CHECK(summary.at("markov_order").is_null());
  CHECK(summary.at("nodes") == 5);

  r = run_cli({"stats", e2, "--hellwig", "1"});
  REQUIRE(r.code == 0);
  json law = parse_json_text(r.out, "stdout");
  CHECK(law.at("schema") == "adapted-ot/nested-law-v1");
  CHECK(law.at("atoms").size() == 2);  // up and down carry distinct futures

  r = run_cli({"stats", e1, "--markov", "1", "--time", "1"});
  REQUIRE(r.code == 0);
  law = parse_json_text(r.out, "stdout");
  CHECK(law.at("atoms").size() == 1);

  r = run_cli({"stats", e1, "--prediction", "2"});
  REQUIRE(r.code == 0);
  CHECK(parse_json_text(r.out, "stdout").at("schema") == "adapted-ot/nested-law-v1");

  // statistics outside 1..N-1 are rejected
  r = run_cli({"stats", e1, "--markov", "1", "--time", "5"});
  CHECK(r.code == 1);
  CHECK(!r.err.empty());
}

TEST_CASE("converge separates the weak and adapted limits of the leaky bets") {
  CliResult r = run_cli({"converge", "--family", "leaky-bet", "--k-min", "1", "--k-max", "6",
                         "--metrics", "w,aw", "--p", "1", "--tol", "0.2", "--limit",
                         "e1=plain-bet", "--limit", "e2=informed-bet", "--csv",
                         "tmp_cli_leaky.csv", "--json", "tmp_cli_leaky.json"});
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "w -> e1: converges"));
  CHECK(contains(r.out, "aw -> e1: diverges"));
  CHECK(contains(r.out, "aw -> e2: converges"));
  CHECK(contains(r.out, "w-limits: e1 e2"));
  CHECK(contains(r.out, "aw-limits: e2"));
  CHECK(contains(r.out, "w-limit != aw-limit"));

  // the CSV carries the full-precision values
  std::ifstream csv("tmp_cli_leaky.csv");
  REQUIRE(csv.good());
  std::vector<ConvergenceCell> cells = read_csv_cells(csv);
  REQUIRE(cells.size() == 6 * 2 * 2);
  for (const ConvergenceCell& c : cells) {
    CHECK(c.value >= 0.0);
    if (c.metric == "w" && c.limit_id == "e1")
      CHECK(c.value == doctest::Approx(1.0 / c.k).epsilon(1e-12));
    if (c.metric == "aw" && c.limit_id == "e2")
      CHECK(c.value == doctest::Approx(1.0 / c.k).epsilon(1e-12));
  }
  json report = load_json_file("tmp_cli_leaky.json");
  CHECK(report.at("family") == "leaky-bet");
  CHECK(report.at("cells").size() == cells.size());
}

TEST_CASE("converge accepts a config file with flag overrides and file limits") {
  ExperimentConfig cfg;
  cfg.family = "leaky-bet";
  cfg.params.k_min = 1;
  cfg.params.k_max = 10;
  cfg.metrics = {"w"};
  cfg.p = 1.0;
  cfg.limits = {{"e1", "plain-bet", ""}};
  std::string cfile = write_doc("cfg.json", to_json(cfg));

  CliResult r = run_cli({"converge", "--config", cfile, "--k-max", "3", "--csv", "tmp_cli_c2.csv"});
  REQUIRE(r.code == 0);
  std::ifstream csv("tmp_cli_c2.csv");
  std::vector<ConvergenceCell> cells = read_csv_cells(csv);
  CHECK(cells.size() == 3);  // grid cut down by the override

  // a limit loaded from a file behaves exactly like its builtin twin
  std::string e1 = write_doc("lim_e1.json", to_json(plain_bet()));
  r = run_cli({"converge", "--family", "leaky-bet", "--k-min", "1", "--k-max", "3", "--metrics",
               "w", "--limit", "builtin=plain-bet", "--limit", ("file=@" + e1), "--csv",
               "tmp_cli_c3.csv"});
  REQUIRE(r.code == 0);
  std::ifstream csv3("tmp_cli_c3.csv");
  cells = read_csv_cells(csv3);
  REQUIRE(cells.size() == 6);
  for (std::size_t i = 0; i < cells.size(); i += 2) CHECK(cells[i].value == cells[i + 1].value);

  // malformed limit flag
  r = run_cli({"converge", "--family", "leaky-bet", "--limit", "nonsense"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "--limit"));
}

TEST_CASE("validate reports every document and fails on the first broken one") {
  std::string tree = write_doc("v_tree.json", to_json(plain_bet()));
  std::string measure = write_doc("v_measure.json", to_json(make_measure({{0.0}}, {1.0})));
  std::string coupling =
      write_doc("v_coupling.json", to_json(aw_dist(plain_bet(), plain_bet(), 1.0).coupling));
  ExperimentConfig cfg;
  cfg.limits = {{"e1", "plain-bet", ""}};
  std::string config = write_doc("v_cfg.json", to_json(cfg));

  CliResult r = run_cli({"validate", tree, measure, coupling, config});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "ok (adapted-ot/tree-v1)"));
  CHECK(contains(r.out, "ok (adapted-ot/measure-v1)"));
  CHECK(contains(r.out, "ok (adapted-ot/coupling-v1)"));
  CHECK(contains(r.out, "ok (adapted-ot/experiment-v1)"));

  std::string garbage = write_text("v_garbage.json", "{\n  \"schema\": oops\n}");
  r = run_cli({"validate", tree, garbage});
  CHECK(r.code == 1);
  CHECK(contains(r.out, "ok"));         // good files still reported
  CHECK(contains(r.err, "line 2"));     // parse errors carry the location

  std::string unknown = write_text("v_unknown.json", R"({"schema": "adapted-ot/nope-v1"})");
  r = run_cli({"validate", unknown});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "unrecognized"));

  std::string broken = write_text("v_broken.json", R"({
    "schema": "adapted-ot/tree-v1", "horizon": 2, "dim": 1,
    "nodes": [{"time": 0}, {"time": 1, "parent": 0, "prob": 0.9, "value": [0.0]}]
  })");
  r = run_cli({"validate", broken});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "v_broken.json"));
}

TEST_CASE("exit codes follow the contract") {
  std::string e1 = write_doc("x_e1.json", to_json(plain_bet()));
  std::string e2 = write_doc("x_e2.json", to_json(informed_bet()));

  // usage problems: 64 plus usage text
  CHECK(run_cli({"frobnicate"}).code == 64);
  CHECK(run_cli({}).code == 64);
  CliResult r = run_cli({"dist", "--metric", "bogus", e1, e2});
  CHECK(r.code == 64);
  CHECK(contains(r.err, "Usage"));
  CHECK(run_cli({"dist", e1}).code == 64);  // missing positional

  // validation problems: 1 with a message on stderr
  r = run_cli({"dist", e1, "tmp_cli_does_not_exist.json"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "tmp_cli_does_not_exist.json"));
  std::string mangled = write_text("x_mangled.json", "{\n]");
  r = run_cli({"dist", e1, mangled});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "line 2"));
  r = run_cli({"dist", "--p", "0.5", e1, e2});
  CHECK(r.code == 1);
  CHECK(!r.err.empty());

  // help is success and shows the right screen
  r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "Usage"));
  r = run_cli({"dist", "--help"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "--metric"));
}
