// JSON documents for trees, measures, and couplings.  Each document carries a
// versioned "schema" tag (adapted-ot/tree-v1, measure-v1, coupling-v1); the
// JSON Schema files under schemas/ state the same contracts for external
// tooling.  Parsing is strict: unknown keys, wrong types, and violated
// invariants are SchemaError with a path into the document; malformed JSON
// reports line and column.
#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

#include "aot/couplings.hpp"
#include "aot/measures.hpp"
#include "aot/process.hpp"

namespace aot {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parse text; `source` prefixes error messages (file name or "<stdin>").
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

/// Value of the "schema" field, or "" when absent or not a string.
std::string schema_of(const nlohmann::json& j);

nlohmann::json to_json(const ProcessTree& x);
nlohmann::json to_json(const DiscreteMeasure& mu);
/// Sparse form: only strictly positive plan entries are written.  Causality
/// flags are not stored; they are recomputed on load.
nlohmann::json to_json(const Coupling& pi);
nlohmann::json to_json(const NestedLaw& law);

ProcessTree tree_from_json(const nlohmann::json& j, const std::string& source = "document");
DiscreteMeasure measure_from_json(const nlohmann::json& j,
                                  const std::string& source = "document");
Coupling coupling_from_json(const nlohmann::json& j, const std::string& source = "document");

/// Load a file holding either schema: a measure becomes a one-period tree.
ProcessTree load_tree(const std::string& path);
/// Load a file holding either schema: a tree contributes its path law.
DiscreteMeasure load_measure(const std::string& path);

}  // namespace aot
