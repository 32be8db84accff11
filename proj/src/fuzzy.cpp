#include "cauda/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cauda/error.hpp"

namespace cauda::logic {

std::string to_string(TNorm t) {
  switch (t) {
    case TNorm::Product: return "product";
    case TNorm::Goedel: return "goedel";
    case TNorm::Lukasiewicz: return "lukasiewicz";
  }
  return "?";
}

TNorm parse_tnorm(const std::string& name) {
  if (name == "product") return TNorm::Product;
  if (name == "goedel" || name == "godel") return TNorm::Goedel;
  if (name == "lukasiewicz") return TNorm::Lukasiewicz;
  throw ConfigError("unknown t-norm '" + name + "'");
}

void Semantics::validate() const {
  if (!(clamp_eps > 0.0 && clamp_eps < 1e-3))
    throw ConfigError("clamp_eps must lie in (0, 1e-3)");
}

void TruthAssignment::validate(double tolerance) const {
  auto check = [&](const std::vector<double>& p, const char* name) {
    if (p.empty()) throw DimensionMismatch(std::string(name) + " is empty");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0))
        throw DimensionMismatch(std::string(name) + " has an entry outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance)
      throw DimensionMismatch(std::string(name) + " does not sum to 1");
  };
  check(verb_probs, "verb_probs");
  check(noun_probs, "noun_probs");
}

namespace detail {

Program compile(const Formula& root) {
  Program prog;
  std::vector<std::pair<const Formula*, bool>> stack{{&root, false}};
  std::vector<std::uint32_t> slots;
  auto pop_slot = [&] {
    auto s = slots.back();
    slots.pop_back();
    return s;
  };
  while (!stack.empty()) {
    auto [f, expanded] = stack.back();
    stack.pop_back();
    Instr ins;
    ins.kind = f->kind();
    if (ins.kind == Formula::Kind::Atom) {
      ins.atom = f->as_atom();
    } else if (!expanded) {
      stack.emplace_back(f, true);
      if (ins.kind == Formula::Kind::Not) {
        stack.emplace_back(&f->operand(), false);
      } else {
        stack.emplace_back(&f->rhs(), false);
        stack.emplace_back(&f->lhs(), false);
      }
      continue;
    } else if (ins.kind == Formula::Kind::Not) {
      ins.lhs = pop_slot();
    } else {
      ins.rhs = pop_slot();
      ins.lhs = pop_slot();
    }
    prog.push_back(ins);
    slots.push_back(static_cast<std::uint32_t>(prog.size() - 1));
  }
  return prog;
}

}  // namespace detail

namespace {

using detail::Instr;
using detail::Program;

// Every node carries its degree `t` and the degree of its negation `f`.
// Negation swaps the two, so double negation and De Morgan duals are exact
// in floating point; conjunction is (T(t), S(f)) and disjunction (S(t), T(f)).
struct Degree {
  double t;
  double f;
};

struct Partials {
  double dx;
  double dy;
};

double tnorm(TNorm k, double x, double y) {
  switch (k) {
    case TNorm::Product: return x * y;
    case TNorm::Goedel: return x <= y ? x : y;
    case TNorm::Lukasiewicz: return std::max(0.0, x + y - 1.0);
  }
  return 0.0;
}

double conorm(TNorm k, double x, double y) {
  switch (k) {
    case TNorm::Product: return x + y - x * y;
    case TNorm::Goedel: return x >= y ? x : y;
    case TNorm::Lukasiewicz: return std::min(1.0, x + y);
  }
  return 0.0;
}

Partials tnorm_partials(TNorm k, double x, double y) {
  switch (k) {
    case TNorm::Product: return {y, x};
    case TNorm::Goedel: return x <= y ? Partials{1.0, 0.0} : Partials{0.0, 1.0};
    case TNorm::Lukasiewicz: return x + y - 1.0 > 0.0 ? Partials{1.0, 1.0} : Partials{0.0, 0.0};
  }
  return {0.0, 0.0};
}

Partials conorm_partials(TNorm k, double x, double y) {
  switch (k) {
    case TNorm::Product: return {1.0 - y, 1.0 - x};
    case TNorm::Goedel: return x >= y ? Partials{1.0, 0.0} : Partials{0.0, 1.0};
    case TNorm::Lukasiewicz: return x + y < 1.0 ? Partials{1.0, 1.0} : Partials{0.0, 0.0};
  }
  return {0.0, 0.0};
}

double atom_prob(const Atom& a, const TruthAssignment& t) {
  const auto& probs = a.branch == Branch::Verb ? t.verb_probs : t.noun_probs;
  if (a.index >= probs.size())
    throw DimensionMismatch(std::string(a.branch == Branch::Verb ? "verb:" : "noun:") +
                            std::to_string(a.index) + " is outside the truth assignment (size " +
                            std::to_string(probs.size()) + ")");
  return probs[a.index];
}

// Left operand of an implication is the negation of the stored lhs.
Degree operand(const std::vector<Degree>& d, const Instr& ins, bool left) {
  Degree x = d[left ? ins.lhs : ins.rhs];
  if (left && ins.kind == Formula::Kind::Implies) std::swap(x.t, x.f);
  return x;
}

std::vector<Degree> forward(const Program& prog, const TruthAssignment& t, TNorm k) {
  std::vector<Degree> d(prog.size());
  for (std::size_t n = 0; n < prog.size(); ++n) {
    const Instr& ins = prog[n];
    switch (ins.kind) {
      case Formula::Kind::Atom: {
        double p = atom_prob(ins.atom, t);
        d[n] = {p, 1.0 - p};
        break;
      }
      case Formula::Kind::Not:
        d[n] = {d[ins.lhs].f, d[ins.lhs].t};
        break;
      case Formula::Kind::And: {
        Degree a = operand(d, ins, true), b = operand(d, ins, false);
        d[n] = {tnorm(k, a.t, b.t), conorm(k, a.f, b.f)};
        break;
      }
      case Formula::Kind::Or:
      case Formula::Kind::Implies: {
        Degree a = operand(d, ins, true), b = operand(d, ins, false);
        d[n] = {conorm(k, a.t, b.t), tnorm(k, a.f, b.f)};
        break;
      }
    }
  }
  return d;
}

// Adds seed * d(root degree)/d(probs) into `out`.
void backward(const Program& prog, const std::vector<Degree>& d, TNorm k, double seed,
              AssignmentGradient& out) {
  std::vector<Degree> g(prog.size(), Degree{0.0, 0.0});
  g.back().t = seed;
  for (std::size_t n = prog.size(); n-- > 0;) {
    const Instr& ins = prog[n];
    const Degree gn = g[n];
    if (gn.t == 0.0 && gn.f == 0.0) continue;
    switch (ins.kind) {
      case Formula::Kind::Atom: {
        auto& target = ins.atom.branch == Branch::Verb ? out.verb : out.noun;
        target[ins.atom.index] += gn.t - gn.f;
        break;
      }
      case Formula::Kind::Not:
        g[ins.lhs].t += gn.f;
        g[ins.lhs].f += gn.t;
        break;
      case Formula::Kind::And:
      case Formula::Kind::Or:
      case Formula::Kind::Implies: {
        Degree a = operand(d, ins, true), b = operand(d, ins, false);
        bool conj = ins.kind == Formula::Kind::And;
        Partials pt = conj ? tnorm_partials(k, a.t, b.t) : conorm_partials(k, a.t, b.t);
        Partials pf = conj ? conorm_partials(k, a.f, b.f) : tnorm_partials(k, a.f, b.f);
        Degree ga{gn.t * pt.dx, gn.f * pf.dx};
        Degree gb{gn.t * pt.dy, gn.f * pf.dy};
        if (ins.kind == Formula::Kind::Implies) std::swap(ga.t, ga.f);
        g[ins.lhs].t += ga.t;
        g[ins.lhs].f += ga.f;
        g[ins.rhs].t += gb.t;
        g[ins.rhs].f += gb.f;
        break;
      }
    }
  }
}

AssignmentGradient zero_gradient(const TruthAssignment& t) {
  return {std::vector<double>(t.verb_probs.size(), 0.0),
          std::vector<double>(t.noun_probs.size(), 0.0)};
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_mask_dims(const cooccur::ValidityMask& mask, const TruthAssignment& t) {
  if (mask.verbs() != t.verb_probs.size() || mask.nouns() != t.noun_probs.size())
    throw DimensionMismatch("mask is " + std::to_string(mask.verbs()) + "x" +
                            std::to_string(mask.nouns()) + " but the assignment is " +
                            std::to_string(t.verb_probs.size()) + "x" +
                            std::to_string(t.noun_probs.size()));
}

double satisfied_mass(const cooccur::ValidityMask& mask, const TruthAssignment& t) {
  double mass = 0.0;
  for (std::size_t i = 0; i < mask.verbs(); ++i)
    for (std::size_t j = 0; j < mask.nouns(); ++j)
      if (mask.valid(i, j)) mass += t.verb_probs[i] * t.noun_probs[j];
  return mass;
}

}  // namespace

double evaluate(const Formula& f, const TruthAssignment& t, const Semantics& s) {
  auto prog = detail::compile(f);
  return clamp01(forward(prog, t, s.tnorm).back().t);
}

AssignmentGradient evaluate_gradient(const Formula& f, const TruthAssignment& t,
                                     const Semantics& s) {
  auto prog = detail::compile(f);
  auto d = forward(prog, t, s.tnorm);
  auto grad = zero_gradient(t);
  backward(prog, d, s.tnorm, 1.0, grad);
  return grad;
}

double semantic_loss(const cooccur::ValidityMask& mask, const TruthAssignment& t,
                     const Semantics& s) {
  check_mask_dims(mask, t);
  return -std::log(std::max(satisfied_mass(mask, t), s.clamp_eps));
}

AssignmentGradient semantic_loss_gradient(const cooccur::ValidityMask& mask,
                                          const TruthAssignment& t, const Semantics& s) {
  check_mask_dims(mask, t);
  auto grad = zero_gradient(t);
  double mass = satisfied_mass(mask, t);
  if (!(mass > s.clamp_eps)) return grad;
  for (std::size_t i = 0; i < mask.verbs(); ++i) {
    for (std::size_t j = 0; j < mask.nouns(); ++j) {
      if (!mask.valid(i, j)) continue;
      grad.verb[i] -= t.noun_probs[j] / mass;
      grad.noun[j] -= t.verb_probs[i] / mass;
    }
  }
  return grad;
}

std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> disjunction_pairs(
    const Formula& root) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<const Formula*> stack{&root};
  while (!stack.empty()) {
    const Formula* f = stack.back();
    stack.pop_back();
    if (f->kind() == Formula::Kind::Or) {
      stack.push_back(&f->rhs());
      stack.push_back(&f->lhs());
      continue;
    }
    if (f->kind() != Formula::Kind::And) return std::nullopt;
    const Formula& l = f->lhs();
    const Formula& r = f->rhs();
    if (l.kind() != Formula::Kind::Atom || r.kind() != Formula::Kind::Atom) return std::nullopt;
    Atom a = l.as_atom(), b = r.as_atom();
    if (a.branch == Branch::Noun) std::swap(a, b);
    if (a.branch != Branch::Verb || b.branch != Branch::Noun) return std::nullopt;
    pairs.emplace_back(a.index, b.index);
  }
  return pairs;
}

LogicLoss::LogicLoss(ConstraintSet constraints, Semantics semantics)
    : constraints_(std::move(constraints)), semantics_(semantics) {
  semantics_.validate();
  if (constraints_.mode() == ConstraintMode::ValidDisjunction &&
      semantics_.tnorm == TNorm::Product && constraints_.size() == 1) {
    if (auto pairs = disjunction_pairs(constraints_.formulas().front())) {
      std::sort(pairs->begin(), pairs->end());
      pairs->erase(std::unique(pairs->begin(), pairs->end()), pairs->end());
      pairs_ = std::move(pairs);
      return;
    }
  }
  programs_.reserve(constraints_.size());
  for (const auto& f : constraints_.formulas()) programs_.push_back(detail::compile(f));
}

void LogicLoss::check_dims(const TruthAssignment& t) const {
  if (constraints_.dims() && !(*constraints_.dims() == t.dims()))
    throw DimensionMismatch("constraints declare " + std::to_string(constraints_.dims()->verbs) +
                            " verbs and " + std::to_string(constraints_.dims()->nouns) +
                            " nouns but the assignment has " + std::to_string(t.verb_probs.size()) +
                            " and " + std::to_string(t.noun_probs.size()));
  if (pairs_) {
    for (auto [i, j] : *pairs_)
      if (i >= t.verb_probs.size() || j >= t.noun_probs.size())
        throw DimensionMismatch("admissible pair (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is outside the truth assignment");
  }
}

std::pair<double, AssignmentGradient> LogicLoss::value_and_gradient(
    const TruthAssignment& t) const {
  check_dims(t);
  auto grad = zero_gradient(t);
  const double eps = semantics_.clamp_eps;

  if (pairs_) {
    double mass = 0.0;
    for (auto [i, j] : *pairs_) mass += t.verb_probs[i] * t.noun_probs[j];
    if (mass > eps) {
      for (auto [i, j] : *pairs_) {
        grad.verb[i] -= t.noun_probs[j] / mass;
        grad.noun[j] -= t.verb_probs[i] / mass;
      }
    }
    return {-std::log(std::max(mass, eps)), std::move(grad)};
  }

  const double n = static_cast<double>(programs_.size());
  double total = 0.0;
  for (const auto& prog : programs_) {
    auto d = forward(prog, t, semantics_.tnorm);
    double degree = clamp01(d.back().t);
    total += -std::log(std::max(degree, eps));
    if (degree > eps) backward(prog, d, semantics_.tnorm, -1.0 / (n * degree), grad);
  }
  return {total / n, std::move(grad)};
}

double LogicLoss::value(const TruthAssignment& t) const {
  check_dims(t);
  const double eps = semantics_.clamp_eps;
  if (pairs_) {
    double mass = 0.0;
    for (auto [i, j] : *pairs_) mass += t.verb_probs[i] * t.noun_probs[j];
    return -std::log(std::max(mass, eps));
  }
  double total = 0.0;
  for (const auto& prog : programs_)
    total += -std::log(std::max(clamp01(forward(prog, t, semantics_.tnorm).back().t), eps));
  return total / static_cast<double>(programs_.size());
}

AssignmentGradient LogicLoss::gradient(const TruthAssignment& t) const {
  return value_and_gradient(t).second;
}

double logic_loss(const ConstraintSet& set, const TruthAssignment& t, const Semantics& s) {
  return LogicLoss(set, s).value(t);
}

AssignmentGradient logic_loss_grad(const ConstraintSet& set, const TruthAssignment& t,
                                   const Semantics& s) {
  return LogicLoss(set, s).gradient(t);
}

}  // namespace cauda::logic
