// Command-line surface.  run() is the in-process entry point the binary and
// the tests share; it never calls exit().
//
// Exit codes: 0 success, 1 input/validation failure (bad JSON, schema or
// argument errors, failed checks), 2 solver failure, 64 usage errors.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aot::cli {

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace aot::cli
