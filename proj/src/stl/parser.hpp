#pragma once

#include "stl/formula.hpp"

#include <map>
#include <string>
#include <string_view>

namespace stlcbf::stl {

struct Slice {
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

/// Named index ranges into a stacked group state. The name `x` always refers
/// to the whole state. A zero `dim` lets the parser infer the dimension from
/// vector literals (only `x` is then resolvable).
struct StateLayout {
  Eigen::Index dim = 0;
  std::map<std::string, Slice> slices;
};

/// Parses the ASCII formula syntax (see docs/formula_grammar.md).
/// Throws ParseError on syntax, fragment, or interval violations.
Formula parse_formula(std::string_view text, const StateLayout& layout = {});

}  // namespace stlcbf::stl
