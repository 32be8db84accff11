#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace cauda::logic {

enum class Branch : std::uint8_t { Verb, Noun };

/// Proposition "class `index` of `branch` is true".
struct Atom {
  Branch branch = Branch::Verb;
  std::uint32_t index = 0;

  auto operator<=>(const Atom&) const = default;
};

/// Vocabulary sizes atoms are checked against.
struct VocabDims {
  std::uint32_t verbs = 0;
  std::uint32_t nouns = 0;

  bool contains(const Atom& a) const noexcept {
    return a.index < (a.branch == Branch::Verb ? verbs : nouns);
  }
  bool operator==(const VocabDims&) const = default;
};

/// Immutable propositional formula over verb/noun atoms. Subtrees are shared,
/// so copies are cheap and safe to hand across threads.
class Formula {
 public:
  enum class Kind : std::uint8_t { Atom, Not, And, Or, Implies };

  static Formula atom(Atom a);
  static Formula verb(std::uint32_t index) { return atom({Branch::Verb, index}); }
  static Formula noun(std::uint32_t index) { return atom({Branch::Noun, index}); }
  static Formula negation(Formula f);
  static Formula conjunction(Formula lhs, Formula rhs);
  static Formula disjunction(Formula lhs, Formula rhs);
  static Formula implication(Formula lhs, Formula rhs);

  Kind kind() const noexcept;
  bool is_binary() const noexcept {
    auto k = kind();
    return k == Kind::And || k == Kind::Or || k == Kind::Implies;
  }

  /// Only valid for Kind::Atom.
  const Atom& as_atom() const;
  /// Operand of Not.
  const Formula& operand() const;
  const Formula& lhs() const;
  const Formula& rhs() const;

  /// Node count.
  std::size_t size() const;
  /// Longest root-to-leaf path; an atom has depth 1.
  std::size_t depth() const;
  /// Every atom, left to right.
  std::vector<Atom> atoms() const;
  bool within(const VocabDims& dims) const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula binary(Kind kind, Formula lhs, Formula rhs);

  std::shared_ptr<const Node> node_;
};

/// How a constraint set should be read by the logic loss.
enum class ConstraintMode : std::uint8_t {
  /// One `!(verb:i & noun:j)` per forbidden pair, or any list of formulas
  /// scored independently and averaged.
  InvalidNegations,
  /// A single disjunction of admissible `(verb:i & noun:j)` pairs.
  ValidDisjunction,
};

/// Non-empty ordered list of formulas. Construction validates atoms against
/// `dims` when given.
class ConstraintSet {
 public:
  ConstraintSet(std::vector<Formula> formulas, ConstraintMode mode,
                std::optional<VocabDims> dims = std::nullopt);

  const std::vector<Formula>& formulas() const noexcept { return formulas_; }
  ConstraintMode mode() const noexcept { return mode_; }
  const std::optional<VocabDims>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return formulas_.size(); }

  bool operator==(const ConstraintSet&) const = default;

 private:
  std::vector<Formula> formulas_;
  ConstraintMode mode_;
  std::optional<VocabDims> dims_;
};

}  // namespace cauda::logic
