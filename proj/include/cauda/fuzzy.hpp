#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cauda/formula.hpp"
#include "cauda/matrix.hpp"

namespace cauda::logic {

enum class TNorm : std::uint8_t { Product, Goedel, Lukasiewicz };

std::string to_string(TNorm t);
/// Accepts "product", "goedel" (or "godel"), "lukasiewicz".
TNorm parse_tnorm(const std::string& name);

/// Relaxation used to score formulas on probabilities.
///
/// Negation is 1 - a for every t-norm. Conjunction/disjunction are
///   Product:     ab           /  a + b - ab
///   Goedel:      min(a, b)    /  max(a, b)
///   Lukasiewicz: max(0,a+b-1) /  min(1, a+b)
/// and a -> b is read as !a | b. Losses clamp degrees at `clamp_eps` before
/// taking the log.
struct Semantics {
  TNorm tnorm = TNorm::Product;
  double clamp_eps = 1e-12;

  /// Throws ConfigError unless 0 < clamp_eps < 1e-3.
  void validate() const;
};

/// Class probabilities read as truth degrees of the verb/noun atoms.
struct TruthAssignment {
  std::vector<double> verb_probs;
  std::vector<double> noun_probs;

  VocabDims dims() const noexcept {
    return {static_cast<std::uint32_t>(verb_probs.size()),
            static_cast<std::uint32_t>(noun_probs.size())};
  }
  /// Entries in [0,1], each vector summing to 1 within `tolerance`.
  void validate(double tolerance = 1e-6) const;
};

namespace detail {
/// One node of a formula flattened in post-order; operands refer to earlier
/// slots.
struct Instr {
  Formula::Kind kind = Formula::Kind::Atom;
  Atom atom{};
  std::uint32_t lhs = 0;
  std::uint32_t rhs = 0;
};
using Program = std::vector<Instr>;
Program compile(const Formula& f);
}  // namespace detail

/// d(loss)/d(probabilities).
struct AssignmentGradient {
  std::vector<double> verb;
  std::vector<double> noun;
};

/// Truth degree of `f` in [0,1]. Throws DimensionMismatch when an atom lies
/// outside the assignment.
double evaluate(const Formula& f, const TruthAssignment& t, const Semantics& s = {});

/// d evaluate / d probabilities. Goedel min/max ties send the whole gradient
/// to the left operand; Lukasiewicz clamps pass gradient only strictly inside.
AssignmentGradient evaluate_gradient(const Formula& f, const TruthAssignment& t,
                                     const Semantics& s = {});

/// -log(max(sum over valid (i,j) of verb_probs[i] * noun_probs[j], eps)).
double semantic_loss(const cooccur::ValidityMask& mask, const TruthAssignment& t,
                     const Semantics& s = {});
AssignmentGradient semantic_loss_gradient(const cooccur::ValidityMask& mask,
                                          const TruthAssignment& t,
                                          const Semantics& s = {});

/// Logic loss of a constraint set, prepared once and reused per sample.
///
/// ValidDisjunction sets whose single formula is a disjunction of
/// `verb & noun` conjunctions are scored, under Product semantics, with the
/// exact semantic loss of the admissible pairs. Everything else is the mean
/// over formulas of -log(max(evaluate(f), eps)).
class LogicLoss {
 public:
  explicit LogicLoss(ConstraintSet constraints, Semantics semantics = {});

  double value(const TruthAssignment& t) const;
  AssignmentGradient gradient(const TruthAssignment& t) const;
  std::pair<double, AssignmentGradient> value_and_gradient(const TruthAssignment& t) const;

  const ConstraintSet& constraints() const noexcept { return constraints_; }
  const Semantics& semantics() const noexcept { return semantics_; }
  /// True when the exact semantic-loss path is in use.
  bool exact_form() const noexcept { return pairs_.has_value(); }

 private:
  void check_dims(const TruthAssignment& t) const;

  ConstraintSet constraints_;
  Semantics semantics_;
  // Set on the exact path: sorted, de-duplicated admissible pairs.
  std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> pairs_;
  std::vector<detail::Program> programs_;
};

double logic_loss(const ConstraintSet& set, const TruthAssignment& t, const Semantics& s = {});
AssignmentGradient logic_loss_grad(const ConstraintSet& set, const TruthAssignment& t,
                                   const Semantics& s = {});

/// Admissible pairs named by a ValidDisjunction formula, if it has the
/// `(verb:i & noun:j) | ...` shape (either conjunct order accepted).
std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> disjunction_pairs(
    const Formula& f);

}  // namespace cauda::logic
