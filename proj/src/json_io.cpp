#include "aot/json_io.hpp"

#include <fstream>
#include <sstream>

namespace aot {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& path,
                       const std::string& what) {
  throw SchemaError(source + ": " + path + ": " + what);
}

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& source, const std::string& path) {
  if (!j.is_object()) fail(source, path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) fail(source, path, "unknown key \"" + it.key() + "\"");
  }
}

const json& require(const json& j, const char* key, const std::string& source,
                    const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) fail(source, path, std::string("missing key \"") + key + "\"");
  return *it;
}

double as_number(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_number()) fail(source, path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_number_integer()) fail(source, path, "expected an integer");
  return j.get<int>();
}

Vec as_vector(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_array()) fail(source, path, "expected an array of numbers");
  Vec out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], source, path + "[" + std::to_string(i) + "]"));
  return out;
}

void check_schema(const json& j, const char* want, const std::string& source) {
  if (!j.is_object()) fail(source, "$", "expected a top-level object");
  std::string got = schema_of(j);
  if (got.empty()) fail(source, "schema", "missing schema tag");
  if (got != want)
    fail(source, "schema", "expected \"" + std::string(want) + "\", found \"" + got + "\"");
}

}  // namespace

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann messages already carry "at line L, column C"
    throw SchemaError(source + ": " + e.what());
  }
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
  if (!out) throw SchemaError(path + ": write failed");
}

std::string schema_of(const nlohmann::json& j) {
  if (!j.is_object()) return "";
  auto it = j.find("schema");
  if (it == j.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

nlohmann::json to_json(const ProcessTree& x) {
  json nodes = json::array();
  for (std::size_t id = 0; id < x.size(); ++id) {
    const TreeNode& n = x.node(static_cast<int>(id));
    if (id == 0) {
      nodes.push_back(json{{"time", 0}});
      continue;
    }
    nodes.push_back(json{{"time", n.time}, {"parent", n.parent}, {"prob", n.prob},
                         {"value", n.value}});
  }
  return json{{"schema", "adapted-ot/tree-v1"},
              {"horizon", x.horizon()},
              {"dim", x.dim()},
              {"nodes", std::move(nodes)}};
}

nlohmann::json to_json(const DiscreteMeasure& mu) {
  json atoms = json::array();
  for (const Vec& a : mu.atoms) atoms.push_back(a);
  return json{{"schema", "adapted-ot/measure-v1"},
              {"dim", mu.dim()},
              {"atoms", std::move(atoms)},
              {"weights", mu.weights}};
}

nlohmann::json to_json(const Coupling& pi) {
  json entries = json::array();
  for (std::size_t i = 0; i < pi.plan.rows(); ++i)
    for (std::size_t j = 0; j < pi.plan.cols(); ++j)
      if (pi.plan(i, j) > 0.0) entries.push_back(json::array({i, j, pi.plan(i, j)}));
  return json{{"schema", "adapted-ot/coupling-v1"},
              {"left", to_json(*pi.left)},
              {"right", to_json(*pi.right)},
              {"entries", std::move(entries)}};
}

nlohmann::json to_json(const NestedLaw& law) {
  json atoms = json::array();
  for (const NestedAtom& atom : law.atoms()) {
    json components = json::array();
    for (const NestedComponent& c : atom) {
      if (std::holds_alternative<Vec>(c))
        components.push_back(json{{"point", std::get<Vec>(c)}});
      else
        components.push_back(json{{"law", to_json(*std::get<NestedLawPtr>(c))}});
    }
    atoms.push_back(std::move(components));
  }
  return json{{"schema", "adapted-ot/nested-law-v1"},
              {"depth", law.depth()},
              {"atoms", std::move(atoms)},
              {"weights", law.weights()}};
}

ProcessTree tree_from_json(const nlohmann::json& j, const std::string& source) {
  check_schema(j, "adapted-ot/tree-v1", source);
  expect_keys(j, {"schema", "horizon", "dim", "nodes"}, source, "$");
  int horizon = as_int(require(j, "horizon", source, "$"), source, "horizon");
  int dim = as_int(require(j, "dim", source, "$"), source, "dim");
  const json& nodes = require(j, "nodes", source, "$");
  if (!nodes.is_array() || nodes.empty()) fail(source, "nodes", "expected a non-empty array");

  const json& root = nodes[0];
  expect_keys(root, {"time"}, source, "nodes[0]");
  if (as_int(require(root, "time", source, "nodes[0]"), source, "nodes[0].time") != 0)
    fail(source, "nodes[0].time", "root must sit at time 0");

  TreeBuilder builder(horizon, dim);
  for (std::size_t id = 1; id < nodes.size(); ++id) {
    std::string path = "nodes[" + std::to_string(id) + "]";
    const json& n = nodes[id];
    expect_keys(n, {"time", "parent", "prob", "value"}, source, path);
    int time = as_int(require(n, "time", source, path), source, path + ".time");
    int parent = as_int(require(n, "parent", source, path), source, path + ".parent");
    double prob = as_number(require(n, "prob", source, path), source, path + ".prob");
    Vec value = as_vector(require(n, "value", source, path), source, path + ".value");
    if (parent < 0 || parent >= static_cast<int>(id))
      fail(source, path + ".parent", "parent must be an earlier node id");
    try {
      int got = builder.add(parent, std::move(value), prob);
      if (got != static_cast<int>(id))
        fail(source, path, "node ids must be contiguous in array order");
    } catch (const std::invalid_argument& e) {
      fail(source, path, e.what());
    }
    (void)time;  // declared times are cross-checked against the parent chain below
  }
  ProcessTree tree;
  try {
    tree = builder.build();
  } catch (const std::invalid_argument& e) {
    fail(source, "nodes", e.what());
  }
  // declared times must match the depth implied by the parent chain
  for (std::size_t id = 1; id < nodes.size(); ++id) {
    int declared = nodes[id].at("time").get<int>();
    if (declared != tree.node(static_cast<int>(id)).time)
      fail(source, "nodes[" + std::to_string(id) + "].time",
           "declared time does not match the parent chain");
  }
  return tree;
}

DiscreteMeasure measure_from_json(const nlohmann::json& j, const std::string& source) {
  check_schema(j, "adapted-ot/measure-v1", source);
  expect_keys(j, {"schema", "dim", "atoms", "weights"}, source, "$");
  int dim = as_int(require(j, "dim", source, "$"), source, "dim");
  const json& atoms_j = require(j, "atoms", source, "$");
  if (!atoms_j.is_array()) fail(source, "atoms", "expected an array");
  std::vector<Vec> atoms;
  for (std::size_t i = 0; i < atoms_j.size(); ++i) {
    std::string path = "atoms[" + std::to_string(i) + "]";
    Vec a = as_vector(atoms_j[i], source, path);
    if (static_cast<int>(a.size()) != dim)
      fail(source, path, "atom dimension does not match \"dim\"");
    atoms.push_back(std::move(a));
  }
  Vec weights = as_vector(require(j, "weights", source, "$"), source, "weights");
  try {
    return make_measure(std::move(atoms), std::move(weights));
  } catch (const std::invalid_argument& e) {
    fail(source, "$", e.what());
  }
}

Coupling coupling_from_json(const nlohmann::json& j, const std::string& source) {
  check_schema(j, "adapted-ot/coupling-v1", source);
  expect_keys(j, {"schema", "left", "right", "entries"}, source, "$");
  TreePtr left = share(tree_from_json(require(j, "left", source, "$"), source + ":left"));
  TreePtr right = share(tree_from_json(require(j, "right", source, "$"), source + ":right"));
  const json& entries = require(j, "entries", source, "$");
  if (!entries.is_array()) fail(source, "entries", "expected an array of [i, j, weight]");

  Mat plan(left->leaves().size(), right->leaves().size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    std::string path = "entries[" + std::to_string(e) + "]";
    const json& t = entries[e];
    if (!t.is_array() || t.size() != 3) fail(source, path, "expected [i, j, weight]");
    int i = as_int(t[0], source, path + "[0]");
    int k = as_int(t[1], source, path + "[1]");
    double w = as_number(t[2], source, path + "[2]");
    if (i < 0 || i >= static_cast<int>(plan.rows())) fail(source, path + "[0]", "row out of range");
    if (k < 0 || k >= static_cast<int>(plan.cols()))
      fail(source, path + "[1]", "column out of range");
    if (!(w > 0.0)) fail(source, path + "[2]", "weight must be positive");
    if (plan(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) != 0.0)
      fail(source, path, "duplicate entry");
    plan(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = w;
  }
  Coupling pi{std::move(left), std::move(right), std::move(plan), false, false};
  pi.bicausal_verified = check_coupling(pi, CouplingMode::Bicausal);
  pi.causal_verified = pi.bicausal_verified || check_coupling(pi, CouplingMode::Causal);
  if (!check_coupling(pi, CouplingMode::Marginal))
    fail(source, "entries", "entries do not match the marginal leaf laws");
  return pi;
}

ProcessTree load_tree(const std::string& path) {
  json j = load_json_file(path);
  std::string schema = schema_of(j);
  if (schema == "adapted-ot/measure-v1") return measure_tree(measure_from_json(j, path));
  return tree_from_json(j, path);
}

DiscreteMeasure load_measure(const std::string& path) {
  json j = load_json_file(path);
  std::string schema = schema_of(j);
  if (schema == "adapted-ot/tree-v1") return path_law(tree_from_json(j, path));
  return measure_from_json(j, path);
}

}  // namespace aot
