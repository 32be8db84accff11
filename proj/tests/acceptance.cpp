// Acceptance gate: one PASS/FAIL line per top-level criterion, nonzero exit
// on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cauda/autodiff.hpp"
#include "cauda/cli.hpp"
#include "cauda/cooccur.hpp"
#include "cauda/dsl.hpp"
#include "cauda/ensemble.hpp"
#include "cauda/fuzzy.hpp"
#include "cauda/model.hpp"
#include "cauda/oracle.hpp"
#include "cauda/trainer.hpp"
#include "oracles.hpp"

using namespace cauda;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("cauda_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------

Verdict gradient_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t cases = 0, bad = 0;
  double worst = 0.0;
  auto record = [&](const std::vector<double>& a, const std::vector<double>& n) {
    const double e = oracle_ref::relative_error(a, n);
    worst = std::max(worst, e);
    ++cases;
    if (e > 1e-4) ++bad;
  };
  auto flat = [](const logic::AssignmentGradient& g) {
    auto v = g.verb;
    v.insert(v.end(), g.noun.begin(), g.noun.end());
    return v;
  };

  // Formula truth degrees under Product, where every formula is smooth.
  while (cases < 120) {
    const std::uint32_t V = 1 + rng() % 6, N = 1 + rng() % 6;
    auto f = oracle_ref::random_formula(rng, V, N, 5);
    logic::TruthAssignment t{oracle_ref::random_unit(rng, V), oracle_ref::random_unit(rng, N)};
    std::vector<double> x = t.verb_probs;
    x.insert(x.end(), t.noun_probs.begin(), t.noun_probs.end());
    auto fn = [&](const std::vector<double>& y) {
      logic::TruthAssignment u{{y.begin(), y.begin() + V}, {y.begin() + V, y.end()}};
      return logic::evaluate(f, u);
    };
    record(flat(logic::evaluate_gradient(f, t)), oracle_ref::numeric_gradient(fn, x));
  }

  // Semantic and logic losses on probability simplices.
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t V = 1 + rng() % 6, N = 1 + rng() % 6;
    auto mask = oracle_ref::random_mask(rng, V, N);
    logic::TruthAssignment t{oracle_ref::random_simplex(rng, V), oracle_ref::random_simplex(rng, N)};
    std::vector<double> x = t.verb_probs;
    x.insert(x.end(), t.noun_probs.begin(), t.noun_probs.end());
    auto split = [&](const std::vector<double>& y) {
      return logic::TruthAssignment{{y.begin(), y.begin() + V}, {y.begin() + V, y.end()}};
    };
    record(flat(logic::semantic_loss_gradient(mask, t)),
           oracle_ref::numeric_gradient([&](const auto& y) { return logic::semantic_loss(mask, split(y)); }, x));
    if (mask.count_valid() < V * N) {
      logic::LogicLoss neg(cooccur::to_constraints(mask, logic::ConstraintMode::InvalidNegations));
      record(flat(neg.gradient(t)),
             oracle_ref::numeric_gradient([&](const auto& y) { return neg.value(split(y)); }, x));
    }
  }

  // Full model, V=4, N=5: every parameter of the combined objective.
  {
    model::ModelConfig c;
    c.input_dim = 3;
    c.hidden = 6;
    c.gcn_layers = 2;
    c.verbs = 4;
    c.nouns = 5;
    c.lambda_logic = 0.8;
    c.lambda_domain = 1.1;
    // Reversal deliberately breaks the encoder's gradient-of-the-loss identity;
    // it is covered exactly by the GRL criterion.
    c.use_grl = false;
    model::AdaptModel m(c, 7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto frames = [&](std::size_t T) {
      ad::Tensor t(T, 3);
      for (auto& v : t.values()) v = gauss(rng);
      return t;
    };
    std::vector<model::FrameFeatures> batch{{"s", frames(4), model::Domain::Source, model::ActionLabel{2, 3}},
                                            {"t", frames(3), model::Domain::Target, {}}};
    std::vector<std::uint8_t> cells(20, 0);
    for (std::size_t k = 0; k < 20; k += 3) cells[k] = 1;
    logic::LogicLoss ll(
        cooccur::to_constraints(cooccur::ValidityMask(4, 5, cells), logic::ConstraintMode::ValidDisjunction));
    auto loss = [&](bool backward) {
      ad::Graph g;
      std::vector<model::Heads> heads;
      std::vector<const model::FrameFeatures*> ptrs;
      for (const auto& s : batch) {
        heads.push_back(m.forward(g, s));
        ptrs.push_back(&s);
      }
      auto l = model::total_loss(g, heads, ptrs, &ll, c).total;
      if (backward) g.backward(l);
      return l.item();
    };
    m.parameters().zero_grads();
    loss(true);
    for (auto& [name, p] : m.parameters()) {
      const auto analytic = p.grad.storage();
      auto numeric = oracle_ref::numeric_gradient(
          [&, &p = p](const std::vector<double>& y) {
            auto saved = p.value;
            p.value = ad::Tensor(saved.rows(), saved.cols(), y);
            const double v = loss(false);
            p.value = saved;
            return v;
          },
          p.value.storage());
      record(analytic, numeric);
    }
  }

  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = bad == 0 && cases >= 100 && secs < 30.0;
  v.detail = std::to_string(cases) + " cases, " + std::to_string(bad) + " over 1e-4, worst " + fmt("%.2e", worst) +
             ", " + fmt("%.1f s", secs);
  return v;
}

Verdict loss_oracle() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t V = 1 + rng() % 10, N = 1 + rng() % 10;
    auto mask = oracle_ref::random_mask(rng, V, N, std::uniform_real_distribution<double>(0.05, 0.9)(rng));
    logic::TruthAssignment t{oracle_ref::random_simplex(rng, V, 0.0), oracle_ref::random_simplex(rng, N, 0.0)};
    const double ref = oracle_ref::semantic_loss(mask, t);
    worst = std::max(worst, std::abs(logic::semantic_loss(mask, t) - ref));
    logic::LogicLoss ll(cooccur::to_constraints(mask, logic::ConstraintMode::ValidDisjunction));
    worst = std::max(worst, std::abs(ll.value(t) - ref));
  }
  return {worst <= 1e-9, "1000 trials, max |delta| " + fmt("%.2e", worst)};
}

Verdict boolean_soundness() {
  std::mt19937_64 rng(303);
  std::size_t checks = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t V = 1 + rng() % 5, N = 1 + rng() % 5;
    auto f = oracle_ref::random_formula(rng, V, N, 6);
    for (std::uint32_t i = 0; i < V; ++i)
      for (std::uint32_t j = 0; j < N; ++j) {
        logic::TruthAssignment t{std::vector<double>(V, 0.0), std::vector<double>(N, 0.0)};
        std::vector<bool> bv(V), bn(N);
        t.verb_probs[i] = t.noun_probs[j] = 1.0;
        bv[i] = bn[j] = true;
        const double expect = oracle_ref::classic(f, bv, bn) ? 1.0 : 0.0;
        for (auto n : {logic::TNorm::Product, logic::TNorm::Goedel, logic::TNorm::Lukasiewicz}) {
          ++checks;
          if (logic::evaluate(f, t, {n}) != expect) ++mismatches;
        }
      }
  }
  return {mismatches == 0, std::to_string(checks) + " evaluations over 1000 formulas, " +
                               std::to_string(mismatches) + " mismatches"};
}

// Shared by the direction and refinement criteria.
struct RunOutcome {
  train::Metrics plain;
  train::Metrics refined_source;
  train::Metrics refined_truth;
};

struct DirectionRuns {
  std::vector<RunOutcome> base, lr;
  double seconds = 0.0;
};

const DirectionRuns& direction_runs() {
  static DirectionRuns runs = [] {
    DirectionRuns out;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto e = train::parse_experiment("{}");
      e.synthetic.seed = e.train.seed = seed;
      auto data = train::gen_synthetic(e.synthetic);
      auto source_mask = cooccur::binarize(cooccur::build_from_annotations(
          train::annotations_of(data.source), e.synthetic.verbs, e.synthetic.nouns));
      auto cs = cooccur::to_constraints(source_mask, logic::ConstraintMode::ValidDisjunction);
      for (bool with_logic : {false, true}) {
        auto cfg = e.train;
        if (!with_logic) cfg.model.lambda_logic = 0.0;
        auto r = train::train(cfg, data.source, data.target, with_logic ? &cs : nullptr, {nullptr, &data.truth});
        model::AdaptModel m(cfg.model, r.checkpoint);
        RunOutcome o{r.final_metrics, train::evaluate(m, data.target, {&source_mask, &data.truth}),
                     train::evaluate(m, data.target, {&data.truth, &data.truth})};
        (with_logic ? out.lr : out.base).push_back(o);
      }
    }
    out.seconds = seconds_since(t0);
    return out;
  }();
  return runs;
}

Verdict direction_check() {
  const auto& runs = direction_runs();
  auto mean = [](const std::vector<RunOutcome>& v, double train::Metrics::*field) {
    double s = 0.0;
    for (const auto& o : v) s += o.plain.*field;
    return s / static_cast<double>(v.size());
  };
  const double a_base = mean(runs.base, &train::Metrics::action_top1);
  const double a_lr = mean(runs.lr, &train::Metrics::action_top1);
  const double i_base = mean(runs.base, &train::Metrics::invalid_rate);
  const double i_lr = mean(runs.lr, &train::Metrics::invalid_rate);
  Verdict v;
  v.pass = a_lr > a_base && i_lr < i_base && runs.seconds < 180.0;
  v.detail = "5 seeds: action top-1 Base " + fmt("%.4f", a_base) + " -> Base+LR " + fmt("%.4f", a_lr) +
             ", invalid Base " + fmt("%.4f", i_base) + " -> Base+LR " + fmt("%.4f", i_lr) + ", " +
             fmt("%.1f s", runs.seconds);
  return v;
}

Verdict refinement_guarantee() {
  const auto& runs = direction_runs();
  std::size_t evaluated = 0, nonzero = 0;
  for (const auto* group : {&runs.base, &runs.lr})
    for (const auto& o : *group)
      for (const auto* m : {&o.refined_source, &o.refined_truth}) {
        ++evaluated;
        if (m->invalid_rate != 0.0) ++nonzero;
      }
  return {nonzero == 0 && evaluated == 20,
          std::to_string(evaluated) + " refined evaluations, " + std::to_string(nonzero) + " with invalid_rate > 0"};
}

Verdict grl_contract() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t checks = 0, failures = 0;
  for (double lambda : {0.5, 1.0, 2.0, 0.3, 1.7}) {
    for (int trial = 0; trial < 10; ++trial) {
      ad::Tensor xv(3, 4), wv(4, 2), cv(2, 1);
      for (auto* t : {&xv, &wv, &cv})
        for (auto& v : t->values()) v = gauss(rng);
      ad::Parameter x("x", xv), w("w", wv);
      ad::Graph g;
      auto h = ad::matmul(g.parameter(x), g.parameter(w));
      auto r = ad::grl(h, lambda);
      auto c = g.constant(cv);
      g.backward(ad::sum(ad::matmul(r, c)));
      // Forward: bit-identical. Backward at the probe: exactly -lambda * c^T per row.
      ++checks;
      if (!bits_equal(h.data().storage(), r.data().storage())) ++failures;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          ++checks;
          if (h.grad()(i, j) != -lambda * cv(j, 0)) ++failures;
          if (r.grad()(i, j) != cv(j, 0)) ++failures;
        }
      // Power-of-two scalings commute with every later product exactly.
      if (lambda == 0.5 || lambda == 1.0 || lambda == 2.0) {
        ad::Parameter x2("x", xv), w2("w", wv);
        ad::Graph g2;
        auto h2 = ad::matmul(g2.parameter(x2), g2.parameter(w2));
        g2.backward(ad::sum(ad::matmul(h2, g2.constant(cv))));
        for (std::size_t k = 0; k < x.grad.size(); ++k) {
          ++checks;
          if (x.grad[k] != -lambda * x2.grad[k]) ++failures;
        }
      }
    }
  }
  return {failures == 0, std::to_string(checks) + " exact comparisons, " + std::to_string(failures) + " failed"};
}

Verdict determinism() {
  TempDir tmp("det");
  std::ofstream(tmp.path / "exp.json") << "{}";
  auto run = [&](const std::string& out) {
    const std::string cfg = (tmp.path / "exp.json").string(), dir = (tmp.path / out).string();
    const char* argv[] = {"cauda", "train", "--config", cfg.c_str(), "--constraints", "auto",
                          "--seed", "3", "--out", dir.c_str()};
    std::ostringstream o, e;
    return cli::run(10, argv, o, e);
  };
  const int a = run("a"), b = run("b");
  const std::string ma = slurp(tmp.path / "a" / "metrics.csv"), mb = slurp(tmp.path / "b" / "metrics.csv");
  const bool same = a == 0 && b == 0 && !ma.empty() && ma == mb;
  return {same, "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", metrics.csv " +
                    std::to_string(ma.size()) + " bytes, " + (ma == mb ? "byte-identical" : "DIFFERENT")};
}

Verdict llm_pipeline() {
  TempDir tmp("llm");
  auto vocab = cooccur::Vocabulary::numbered(5, 5);
  oracle::OracleConfig cfg;
  cfg.cache_path = tmp.path / "cache.jsonl";
  cfg.max_concurrent = 3;
  cfg.backoff = std::chrono::milliseconds(0);
  auto cold = oracle::mock_from_rules(R"({"rule": "verb<=noun", "latency_us": 2000})");
  auto first = oracle::query_matrix(vocab, cfg, *cold);
  bool exact = true;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) exact = exact && first.mask.valid(i, j) == (i <= j);
  auto warm = oracle::mock_from_rules(R"({"rule": "none"})");
  auto second = oracle::query_matrix(vocab, cfg, *warm);
  const bool cached = warm->calls() == 0 && second.network_calls == 0 && second.mask == first.mask;
  const bool bounded = cold->max_in_flight() <= cfg.max_concurrent;
  return {exact && cached && bounded,
          std::string("mask ") + (exact ? "exact" : "WRONG") + ", warm calls " + std::to_string(warm->calls()) +
              ", peak in-flight " + std::to_string(cold->max_in_flight()) + "/" +
              std::to_string(cfg.max_concurrent)};
}

ensemble::PredictionRecord branch_record(std::string uid, std::vector<double> v, std::vector<double> n) {
  return {std::move(uid), std::move(v), std::move(n), {}};
}

bool same_scores(const ensemble::PredictionFile& a, const ensemble::PredictionFile& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t k = 0; k < a.records.size(); ++k)
    if (a.records[k].uid != b.records[k].uid || !bits_equal(a.records[k].action_scores, b.records[k].action_scores))
      return false;
  return true;
}

Verdict ensemble_fixture() {
  // Labels s1 (0,0), s2 (1,1), s3 (0,1). A errs only on s3, B only on s1, each
  // hesitantly, so the mean recovers every sample.
  ensemble::PredictionFile a{"A", 2, 2,
                             {branch_record("s1", {0.9, 0.1}, {0.9, 0.1}), branch_record("s2", {0.1, 0.9}, {0.1, 0.9}),
                              branch_record("s3", {0.6, 0.4}, {0.6, 0.4})}};
  ensemble::PredictionFile b{"B", 2, 2,
                             {branch_record("s1", {0.4, 0.6}, {0.4, 0.6}), branch_record("s2", {0.1, 0.9}, {0.1, 0.9}),
                              branch_record("s3", {0.9, 0.1}, {0.1, 0.9})}};
  const std::vector<cooccur::Annotation> labels{{"s1", 0, 0}, {"s2", 1, 1}, {"s3", 0, 1}};
  const double top_a = ensemble::evaluate_predictions(a, labels).action_top1;
  const double top_b = ensemble::evaluate_predictions(b, labels).action_top1;
  const auto mean = ensemble::aggregate({a, b}, {{1.0, 1.0}, std::nullopt, ensemble::Aggregation::Arithmetic});
  const double top_e = ensemble::evaluate_predictions(mean, labels).action_top1;
  const bool fixture = top_e == 1.0 && std::abs(top_a - 2.0 / 3.0) < 1e-15 && std::abs(top_b - 2.0 / 3.0) < 1e-15;

  std::mt19937_64 rng(505);
  std::size_t trials = 0, broken = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t V = 1 + rng() % 6, N = 1 + rng() % 6, models = 1 + rng() % 4;
    std::vector<ensemble::PredictionFile> files;
    std::vector<double> w;
    for (std::size_t m = 0; m < models; ++m) {
      ensemble::PredictionFile f{"m" + std::to_string(m), V, N, {}};
      for (int k = 0; k < 10; ++k) {
        const std::string uid = "u" + std::to_string((k * 7 + m) % 10);
        if (rng() % 2) f.records.push_back({uid, {}, {}, oracle_ref::random_simplex(rng, V * N)});
        else f.records.push_back(branch_record(uid, oracle_ref::random_simplex(rng, V), oracle_ref::random_simplex(rng, N)));
      }
      files.push_back(f);
      w.push_back(std::uniform_real_distribution<double>(0.05, 5.0)(rng));
    }
    const ensemble::EnsembleConfig base_cfg{w, std::nullopt, ensemble::Aggregation::Arithmetic};
    const auto base = ensemble::aggregate(files, base_cfg);
    for (double s : {0.25, 8.0, 0x1p-20}) {
      auto scaled = base_cfg;
      for (auto& x : scaled.weights) x *= s;
      ++trials;
      if (!same_scores(base, ensemble::aggregate(files, scaled))) ++broken;
    }
    std::vector<std::size_t> order(models);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<ensemble::PredictionFile> pf;
    ensemble::EnsembleConfig pc{{}, std::nullopt, ensemble::Aggregation::Arithmetic};
    for (auto k : order) {
      pf.push_back(files[k]);
      pc.weights.push_back(w[k]);
    }
    ++trials;
    if (!same_scores(base, ensemble::aggregate(pf, pc))) ++broken;
  }
  return {fixture && broken == 0,
          "fixture top-1 A " + fmt("%.4f", top_a) + ", B " + fmt("%.4f", top_b) + ", ensemble " + fmt("%.4f", top_e) +
              "; " + std::to_string(trials) + " scale/order variants, " + std::to_string(broken) + " differ"};
}

Verdict serialization() {
  std::mt19937_64 rng(606);
  std::size_t trials = 0;
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    ++trials;
    if (!ok && std::find(failed.begin(), failed.end(), what) == failed.end()) failed.push_back(what);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t V = 1 + rng() % 40, N = 1 + rng() % 60;
    cooccur::CooccurrenceMatrix m(V, N);
    for (std::size_t i = 0; i < V; ++i)
      for (std::size_t j = 0; j < N; ++j)
        m.at(i, j) = rng() % 4 == 0 ? rng() : rng() % 1000;
    check(cooccur::matrix_from_csv(cooccur::to_csv(m)) == m, "matrix CSV");

    auto mask = oracle_ref::random_mask(rng, V, N);
    check(cooccur::mask_from_csv(cooccur::to_csv(mask)) == mask, "mask CSV");

    std::vector<logic::Formula> fs;
    const std::size_t count = 1 + rng() % 8;
    for (std::size_t k = 0; k < count; ++k)
      fs.push_back(oracle_ref::random_formula(rng, static_cast<std::uint32_t>(V), static_cast<std::uint32_t>(N), 6));
    logic::ConstraintSet set(fs, rng() % 2 ? logic::ConstraintMode::ValidDisjunction
                                           : logic::ConstraintMode::InvalidNegations);
    check(logic::parse_constraints(logic::render_constraints(set)).formulas() == set.formulas(), "DSL");
    check(logic::parse_constraints(logic::render_constraints(set)).mode() == set.mode(), "DSL");

    ad::ParameterSet ps;
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int p = 0; p < 3; ++p) {
      ad::Tensor t(1 + rng() % 5, 1 + rng() % 5);
      for (auto& v : t.values()) {
        do {
          const std::uint64_t b = bits(rng);
          std::memcpy(&v, &b, sizeof v);
        } while (!std::isfinite(v));
      }
      if (p == 0) {
        t[0] = -0.0;
        if (t.size() > 1) t[1] = std::numeric_limits<double>::denorm_min();
      }
      ps.add("p" + std::to_string(p), t);
    }
    auto back = ad::checkpoint_from_json(ad::checkpoint_to_json(ps));
    bool same = true;
    for (const auto& [name, p] : ps) same = same && bits_equal(p.value.storage(), back.at(name).value.storage());
    check(same, "checkpoint JSON");

    ensemble::PredictionFile pf{"model " + std::to_string(trial), V % 7 + 1, N % 7 + 1, {}};
    for (int k = 0; k < 6; ++k) {
      const std::string uid = "clip/" + std::to_string(rng());
      if (rng() % 2) pf.records.push_back({uid, {}, {}, oracle_ref::random_simplex(rng, pf.verbs * pf.nouns)});
      else
        pf.records.push_back(
            branch_record(uid, oracle_ref::random_simplex(rng, pf.verbs), oracle_ref::random_simplex(rng, pf.nouns)));
    }
    auto pb = ensemble::parse_predictions(ensemble::to_jsonl(pf));
    bool pf_same = pb.model == pf.model && pb.verbs == pf.verbs && pb.nouns == pf.nouns &&
                   pb.records.size() == pf.records.size();
    for (std::size_t k = 0; pf_same && k < pf.records.size(); ++k)
      pf_same = pb.records[k].uid == pf.records[k].uid && bits_equal(pb.records[k].verb_probs, pf.records[k].verb_probs) &&
                bits_equal(pb.records[k].noun_probs, pf.records[k].noun_probs) &&
                bits_equal(pb.records[k].action_scores, pf.records[k].action_scores);
    check(pf_same, "PredictionFile");
  }
  std::string detail = std::to_string(trials) + " round-trips";
  if (!failed.empty()) {
    detail += ", failing:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"loss-oracle equivalence", loss_oracle},
      {"boolean soundness", boolean_soundness},
      {"direction check (Base vs Base+LR)", direction_check},
      {"refinement guarantee", refinement_guarantee},
      {"GRL contract", grl_contract},
      {"determinism", determinism},
      {"LLM pipeline", llm_pipeline},
      {"ensemble", ensemble_fixture},
      {"serialization", serialization},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
