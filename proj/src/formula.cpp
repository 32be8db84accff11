#include "cauda/formula.hpp"

#include <algorithm>
#include <utility>

#include "cauda/error.hpp"

namespace cauda::logic {

struct Formula::Node {
  Kind kind = Kind::Atom;
  Atom atom{};
  Formula lhs{nullptr};
  Formula rhs{nullptr};

  // Long left-deep disjunctions (one per valid pair) would otherwise unwind
  // recursively, one frame per link.
  ~Node() {
    std::vector<std::shared_ptr<const Node>> pending;
    auto take = [&](Formula& f) {
      if (f.node_) pending.push_back(std::move(f.node_));
    };
    take(lhs);
    take(rhs);
    while (!pending.empty()) {
      auto p = std::move(pending.back());
      pending.pop_back();
      if (p.use_count() == 1) {
        auto& owned = const_cast<Node&>(*p);
        take(owned.lhs);
        take(owned.rhs);
      }
    }
  }
};

Formula Formula::atom(Atom a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->atom = a;
  return Formula(std::move(n));
}

Formula Formula::negation(Formula f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->lhs = std::move(f);
  return Formula(std::move(n));
}

Formula Formula::binary(Kind kind, Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return Formula(std::move(n));
}

Formula Formula::conjunction(Formula lhs, Formula rhs) {
  return binary(Kind::And, std::move(lhs), std::move(rhs));
}
Formula Formula::disjunction(Formula lhs, Formula rhs) {
  return binary(Kind::Or, std::move(lhs), std::move(rhs));
}
Formula Formula::implication(Formula lhs, Formula rhs) {
  return binary(Kind::Implies, std::move(lhs), std::move(rhs));
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

const Atom& Formula::as_atom() const {
  if (node_->kind != Kind::Atom) throw InvalidConstraintSet("formula is not an atom");
  return node_->atom;
}

const Formula& Formula::operand() const {
  if (node_->kind != Kind::Not) throw InvalidConstraintSet("formula is not a negation");
  return node_->lhs;
}

const Formula& Formula::lhs() const {
  if (!is_binary()) throw InvalidConstraintSet("formula is not a binary connective");
  return node_->lhs;
}

const Formula& Formula::rhs() const {
  if (!is_binary()) throw InvalidConstraintSet("formula is not a binary connective");
  return node_->rhs;
}

std::size_t Formula::size() const {
  std::size_t count = 0;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    ++count;
    if (n->lhs.node_) stack.push_back(n->lhs.node_.get());
    if (n->rhs.node_) stack.push_back(n->rhs.node_.get());
  }
  return count;
}

std::size_t Formula::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<const Node*, std::size_t>> stack{{node_.get(), 1}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (n->lhs.node_) stack.emplace_back(n->lhs.node_.get(), d + 1);
    if (n->rhs.node_) stack.emplace_back(n->rhs.node_.get(), d + 1);
  }
  return best;
}

std::vector<Atom> Formula::atoms() const {
  std::vector<Atom> out;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->kind == Kind::Atom) out.push_back(n->atom);
    // rhs first so lhs is visited first
    if (n->rhs.node_) stack.push_back(n->rhs.node_.get());
    if (n->lhs.node_) stack.push_back(n->lhs.node_.get());
  }
  return out;
}

bool Formula::within(const VocabDims& dims) const {
  for (const auto& a : atoms())
    if (!dims.contains(a)) return false;
  return true;
}

bool operator==(const Formula& a, const Formula& b) {
  using Node = Formula::Node;
  std::vector<std::pair<const Node*, const Node*>> stack{{a.node_.get(), b.node_.get()}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    if (x == y) continue;
    if (!x || !y || x->kind != y->kind) return false;
    if (x->kind == Formula::Kind::Atom) {
      if (x->atom != y->atom) return false;
      continue;
    }
    stack.emplace_back(x->lhs.node_.get(), y->lhs.node_.get());
    stack.emplace_back(x->rhs.node_.get(), y->rhs.node_.get());
  }
  return true;
}

ConstraintSet::ConstraintSet(std::vector<Formula> formulas, ConstraintMode mode,
                             std::optional<VocabDims> dims)
    : formulas_(std::move(formulas)), mode_(mode), dims_(dims) {
  if (formulas_.empty())
    throw InvalidConstraintSet("constraint set must contain at least one formula");
  if (dims_) {
    for (std::size_t k = 0; k < formulas_.size(); ++k) {
      for (const auto& a : formulas_[k].atoms()) {
        if (!dims_->contains(a))
          throw BoundsError("formula " + std::to_string(k) + " references " +
                                (a.branch == Branch::Verb ? "verb:" : "noun:") +
                                std::to_string(a.index) +
                                " outside the vocabulary",
                            k);
      }
    }
  }
}

}  // namespace cauda::logic
