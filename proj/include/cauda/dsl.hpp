#pragma once

#include <string>
#include <string_view>

#include "cauda/formula.hpp"

namespace cauda::logic {

// Constraint text format, one formula per line:
//
//   #! vocab verbs=97 nouns=300      optional, must precede formulas
//   #! mode valid-disjunction        optional, default invalid-negations
//   !(verb:3 & noun:7)   # trailing comment
//
// Operators bind `!` > `&` > `|` > `->`; `->` associates to the right, the
// others to the left.

/// Throws SyntaxError (1-based line/column) or BoundsError when an atom
/// exceeds the vocab header.
ConstraintSet parse_constraints(std::string_view text);

/// Parses a single formula; `line` is only used for error positions.
Formula parse_formula(std::string_view text, std::size_t line = 1);

/// Canonical text: binary operands are parenthesized unless they continue a
/// left-associated chain of the same `&` or `|`.
std::string render_formula(const Formula& f);

/// Header directives (when dims are known or mode is not the default) then
/// one canonical formula per line.
std::string render_constraints(const ConstraintSet& set);

}  // namespace cauda::logic
