#pragma once

#include <string>
#include <string_view>

#include "riskassess/grid.hpp"
#include "riskassess/sampler.hpp"

namespace riskassess {

/// Syntax error in a case or scenario document, with its 1-based line number
/// (0 when the error concerns the whole document).
class ParseError : public DataError {
 public:
  ParseError(int line, const std::string& what)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Case documents are made of sections. `[system]` holds `key = value` pairs;
// the tabular sections (`[bus]`, `[line]`, `[transformer]`, `[generator]`,
// `[load]`) start with a header row naming every field once, in any order,
// followed by one whitespace-separated record per line. `#` starts a comment.
// Text fields may be double-quoted.

/// Parses and validates a case document. Throws ParseError for syntax
/// problems and DataError for semantic ones.
Network parse_case(std::string_view text);
Network load_case(const std::string& path);

/// Canonical case document; parse_case(serialize_case(n)) == n.
std::string serialize_case(const Network& network);

// Scenario documents: `[scenario]` with `label = <text>`, then a
// `[conversion]` table with fields generator, cost_a, cost_b, cost_c.
PenetrationScenario parse_scenario(std::string_view text);
PenetrationScenario load_scenario(const std::string& path);
std::string serialize_scenario(const PenetrationScenario& scenario);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace riskassess
