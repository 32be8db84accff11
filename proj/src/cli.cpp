#include "cauda/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cauda/autodiff.hpp"
#include "cauda/cooccur.hpp"
#include "cauda/dsl.hpp"
#include "cauda/ensemble.hpp"
#include "cauda/error.hpp"
#include "cauda/oracle.hpp"
#include "cauda/trainer.hpp"
#include "io_util.hpp"

namespace cauda::cli {

namespace fs = std::filesystem;

namespace {

// Raised for problems the user fixes by changing the invocation.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::size_t> parse_id_list(const std::string& text) {
  std::vector<std::size_t> ids;
  for (auto part : detail::split(text, ',')) {
    part = detail::trim(part);
    unsigned long long lo = 0, hi = 0;
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      if (!detail::parse_u64(part, lo)) throw UsageError("bad id '" + std::string(part) + "'");
      hi = lo;
    } else if (!detail::parse_u64(detail::trim(part.substr(0, dash)), lo) ||
               !detail::parse_u64(detail::trim(part.substr(dash + 1)), hi) || hi < lo) {
      throw UsageError("bad id range '" + std::string(part) + "'");
    }
    for (auto k = lo; k <= hi; ++k) ids.push_back(static_cast<std::size_t>(k));
  }
  if (ids.empty()) throw UsageError("empty id list");
  return ids;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_filename(p.stem().string() + suffix);
  return out;
}

// --- build-matrix ----------------------------------------------------------

struct BuildMatrix {
  std::string annotations, vocab, out, mask_out;
  std::uint64_t min_count = 1;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("build-matrix", "Count verb-noun co-occurrences in annotations");
    c->add_option("--annotations", annotations, "CSV with header uid,verb_id,noun_id")->required();
    c->add_option("--vocab", vocab, "Vocabulary JSON {\"verbs\": [...], \"nouns\": [...]}")->required();
    c->add_option("--out", out, "Output matrix CSV")->required();
    c->add_option("--min-count", min_count, "Minimum count for a pair to be valid")->capture_default_str();
    c->add_option("--mask-out", mask_out, "Output mask CSV (default: <out>.mask.csv)");
  }

  int run(std::ostream& o) const {
    auto v = cooccur::load_vocabulary(vocab);
    auto m = cooccur::build_from_annotations(cooccur::load_annotations(annotations), v.num_verbs(),
                                             v.num_nouns());
    auto mask = cooccur::binarize(m, min_count);
    const fs::path mask_path = mask_out.empty() ? sibling(out, ".mask.csv") : fs::path(mask_out);
    cooccur::save_csv(m, out);
    cooccur::save_mask(mask, mask_path);
    o << "matrix " << m.verbs() << "x" << m.nouns() << ", " << m.total() << " annotations, "
      << mask.count_valid() << " valid pairs -> " << out << ", " << mask_path.string() << "\n";
    return kOk;
  }
};

// --- gen-constraints -------------------------------------------------------

logic::ConstraintMode parse_mode(const std::string& s) {
  if (s == "valid") return logic::ConstraintMode::ValidDisjunction;
  if (s == "invalid") return logic::ConstraintMode::InvalidNegations;
  throw UsageError("mode must be 'valid' or 'invalid'");
}

struct GenConstraints {
  std::string mask, mode = "invalid", out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen-constraints", "Turn a validity mask into constraint formulas");
    c->add_option("--mask", mask, "Mask CSV")->required();
    c->add_option("--mode", mode, "invalid: one negation per invalid pair; valid: one disjunction")
        ->check(CLI::IsMember({"invalid", "valid"}))
        ->capture_default_str();
    c->add_option("--out", out, "Output DSL file")->required();
  }

  int run(std::ostream& o) const {
    auto set = cooccur::to_constraints(cooccur::load_mask(mask), parse_mode(mode));
    detail::write_file(out, logic::render_constraints(set));
    o << set.size() << " formula(s) -> " << out << "\n";
    return kOk;
  }
};

// --- train -----------------------------------------------------------------

struct Train {
  std::string config, constraints = "none", refine = "none", out;
  std::optional<std::uint64_t> seed;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train", "Train on synthetic two-domain data and evaluate on the target");
    c->add_option("--config", config, "Experiment JSON")->required();
    c->add_option("--constraints", constraints,
                  "DSL file, 'none', or 'auto' (derived from source annotations)")
        ->capture_default_str();
    c->add_option("--refine", refine,
                  "Mask applied to action scores at evaluation: 'none', 'auto' (source mask) or a mask CSV")
        ->capture_default_str();
    c->add_option("--seed", seed, "Overrides both the data and the training seed");
    c->add_option("--out", out, "Output directory")->required();
  }

  int run(std::ostream& o) const {
    train::Experiment e;
    {
      const std::string text = detail::read_file(config);
      try {
        e = train::parse_experiment(text);
      } catch (const ParseError& ex) {
        throw UsageError(ex.what());
      } catch (const ConfigError& ex) {
        throw UsageError(ex.what());
      }
    }
    if (seed) e.synthetic.seed = e.train.seed = *seed;

    auto data = train::gen_synthetic(e.synthetic);
    const std::size_t V = e.synthetic.verbs, N = e.synthetic.nouns;
    std::optional<cooccur::ValidityMask> source_mask;
    auto get_source_mask = [&]() -> const cooccur::ValidityMask& {
      if (!source_mask)
        source_mask = cooccur::binarize(
            cooccur::build_from_annotations(train::annotations_of(data.source), V, N));
      return *source_mask;
    };

    std::optional<logic::ConstraintSet> cs;
    if (constraints == "auto") {
      cs = cooccur::to_constraints(get_source_mask(), e.constraint_mode);
    } else if (constraints != "none") {
      cs = logic::parse_constraints(detail::read_file(constraints));
      const logic::VocabDims dims{static_cast<std::uint32_t>(V), static_cast<std::uint32_t>(N)};
      for (std::size_t k = 0; k < cs->size(); ++k)
        if (!cs->formulas()[k].within(dims))
          throw BoundsError("formula " + std::to_string(k + 1) + " mentions a class outside the " +
                                std::to_string(V) + "x" + std::to_string(N) + " vocabulary",
                            k);
    }

    std::optional<cooccur::ValidityMask> refine_mask;
    if (refine == "auto") refine_mask = get_source_mask();
    else if (refine != "none") refine_mask = cooccur::load_mask(refine, std::pair{V, N});

    train::EvalMasks masks{refine_mask ? &*refine_mask : nullptr, &data.truth};
    auto result = train::train(e.train, data.source, data.target, cs ? &*cs : nullptr, masks);

    const fs::path dir = out;
    fs::create_directories(dir);
    ad::save_checkpoint(result.checkpoint, dir / "checkpoint.json");
    std::vector<train::ReportRow> rows{{e.name, result.final_metrics}};
    train::write_report(rows, dir / "metrics.csv", dir / "report.md", e.name);
    detail::write_file(dir / "history.csv", train::history_csv(result.history));
    detail::write_file(dir / "experiment.json", train::experiment_to_json(e));
    cooccur::save_mask(data.truth, dir / "truth_mask.csv");
    cooccur::save_annotations(train::annotations_of(data.target), dir / "target_labels.csv");

    model::AdaptModel trained(e.train.model, result.checkpoint);
    ensemble::PredictionFile preds{e.name, V, N, {}};
    for (const auto& s : data.target) {
      auto p = trained.predict(s);
      preds.records.push_back({s.uid, std::move(p.verb_probs), std::move(p.noun_probs), {}});
    }
    ensemble::save_predictions(preds, dir / "target_predictions.jsonl");

    const auto& m = result.final_metrics;
    o << e.name << ": action top-1 " << m.action_top1 << ", verb top-1 " << m.verb_top1
      << ", noun top-1 " << m.noun_top1 << ", invalid rate " << m.invalid_rate << " -> " << dir.string()
      << "\n";
    return kOk;
  }
};

// --- llm-matrix ------------------------------------------------------------

struct LlmMatrix {
  std::string vocab, config, out, mock, union_with;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("llm-matrix", "Ask a chat-completions endpoint which pairs make sense");
    c->add_option("--vocab", vocab, "Vocabulary JSON")->required();
    c->add_option("--config", config, "Oracle JSON (endpoint, model, api_key_env, cache_path, ...)");
    c->add_option("--out", out, "Output mask CSV")->required();
    c->add_option("--mock", mock, "Answer from a rule file instead of the network");
    c->add_option("--union", union_with, "Mask CSV to OR into the result");
  }

  int run(std::ostream& o, std::ostream& e) const {
    oracle::OracleConfig cfg;
    if (!config.empty()) {
      const std::string text = detail::read_file(config);
      try {
        cfg = oracle::parse_oracle_config(text);
      } catch (const ParseError& ex) {
        throw UsageError(ex.what());
      } catch (const ConfigError& ex) {
        throw UsageError(ex.what());
      }
    }
    auto v = cooccur::load_vocabulary(vocab);
    std::unique_ptr<oracle::ChatClient> client;
    if (!mock.empty()) client = oracle::mock_from_rules(detail::read_file(mock));
    else client = std::make_unique<oracle::HttpChatClient>(cfg);

    auto result = oracle::query_matrix(v, cfg, *client);
    auto mask = result.mask;
    if (!union_with.empty())
      mask = mask.united_with(cooccur::load_mask(union_with, std::pair{v.num_verbs(), v.num_nouns()}));
    cooccur::save_mask(mask, out);
    for (auto [i, j] : result.unknown)
      e << "unknown verdict for (" << v.verbs[i] << ", " << v.nouns[j] << "), treated as "
        << (cfg.unknown_as_valid ? "valid" : "invalid") << "\n";
    o << mask.count_valid() << " valid pair(s), " << result.unknown.size() << " unknown, "
      << result.network_calls << " request(s) -> " << out << "\n";
    return kOk;
  }
};

// --- ensemble --------------------------------------------------------------

struct Ensemble {
  std::vector<std::string> inputs;
  std::vector<double> weights;
  std::string mask, out, name = "ensemble";
  bool geometric = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ensemble", "Average action probabilities of several prediction files");
    c->add_option("--inputs", inputs, "Prediction files (JSON lines)")->required();
    c->add_option("--weights", weights, "One weight per input (default: equal)");
    c->add_option("--mask", mask, "Mask CSV applied to every input before averaging");
    c->add_flag("--geometric", geometric, "Weighted geometric mean instead of arithmetic");
    c->add_option("--name", name, "Model name written to the output header")->capture_default_str();
    c->add_option("--out", out, "Output prediction file")->required();
  }

  int run(std::ostream& o) const {
    ensemble::EnsembleConfig cfg;
    cfg.weights = weights.empty() ? std::vector<double>(inputs.size(), 1.0) : weights;
    if (cfg.weights.size() != inputs.size())
      throw UsageError(std::to_string(inputs.size()) + " inputs but " + std::to_string(cfg.weights.size()) +
                       " weights");
    cfg.mode = geometric ? ensemble::Aggregation::Geometric : ensemble::Aggregation::Arithmetic;
    std::vector<ensemble::PredictionFile> files;
    for (const auto& p : inputs) files.push_back(ensemble::load_predictions(p));
    if (!mask.empty()) cfg.mask = cooccur::load_mask(mask, std::pair{files[0].verbs, files[0].nouns});
    auto result = ensemble::aggregate(files, cfg, name);
    ensemble::save_predictions(result, out);
    o << result.records.size() << " sample(s) from " << files.size() << " model(s) -> " << out << "\n";
    return kOk;
  }
};

// --- eval ------------------------------------------------------------------

struct Eval {
  std::string pred, labels, mask, judge, method, csv_out, md_out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Score a prediction file against labels");
    c->add_option("--pred", pred, "Prediction file")->required();
    c->add_option("--labels", labels, "Annotation CSV uid,verb_id,noun_id")->required();
    c->add_option("--mask", mask, "Mask CSV used to refine action scores");
    c->add_option("--judge", judge, "Mask CSV defining invalid pairs (default: --mask)");
    c->add_option("--method", method, "Row label (default: the file's model name)");
    c->add_option("--csv", csv_out, "Also write the metrics CSV here");
    c->add_option("--markdown", md_out, "Also write a markdown table here");
  }

  int run(std::ostream& o) const {
    auto f = ensemble::load_predictions(pred);
    auto ys = cooccur::load_annotations(labels);
    const std::pair dims{f.verbs, f.nouns};
    std::optional<cooccur::ValidityMask> refine, judge_mask;
    if (!mask.empty()) refine = cooccur::load_mask(mask, dims);
    if (!judge.empty()) judge_mask = cooccur::load_mask(judge, dims);
    auto m = ensemble::evaluate_predictions(f, ys, refine ? &*refine : nullptr,
                                            judge_mask ? &*judge_mask : nullptr);
    std::vector<train::ReportRow> rows{{method.empty() ? f.model : method, m}};
    if (!csv_out.empty()) detail::write_file(csv_out, train::report_csv(rows));
    if (!md_out.empty()) detail::write_file(md_out, train::report_markdown(rows, "Evaluation"));
    o << train::report_csv(rows);
    return kOk;
  }
};

// --- heatmap ---------------------------------------------------------------

struct Heatmap {
  std::string matrix, verbs, nouns, out;
  std::size_t block = 16;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("heatmap", "Render a sub-matrix of co-occurrence counts as a PGM image");
    c->add_option("--matrix", matrix, "Matrix CSV")->required();
    c->add_option("--verbs", verbs, "Verb ids, e.g. 0-9,12")->required();
    c->add_option("--nouns", nouns, "Noun ids, e.g. 0-19")->required();
    c->add_option("--block", block, "Pixels per cell")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--out", out, "Output PGM")->required();
  }

  int run(std::ostream& o) const {
    auto vs = parse_id_list(verbs), ns = parse_id_list(nouns);
    auto m = cooccur::load_csv(matrix);
    detail::write_file(out, cooccur::render_heatmap(m, vs, ns, block));
    o << vs.size() << "x" << ns.size() << " heatmap -> " << out << "\n";
    return kOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constraint-guided action recognition toolkit", "cauda"};
  app.require_subcommand(1);
  BuildMatrix build_matrix;
  GenConstraints gen_constraints;
  Train train_cmd;
  LlmMatrix llm_matrix;
  Ensemble ensemble_cmd;
  Eval eval_cmd;
  Heatmap heatmap;
  build_matrix.add(app);
  gen_constraints.add(app);
  train_cmd.add(app);
  llm_matrix.add(app);
  ensemble_cmd.add(app);
  eval_cmd.add(app);
  heatmap.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "build-matrix") return build_matrix.run(out);
    if (name == "gen-constraints") return gen_constraints.run(out);
    if (name == "train") return train_cmd.run(out);
    if (name == "llm-matrix") return llm_matrix.run(out, err);
    if (name == "ensemble") return ensemble_cmd.run(out);
    if (name == "eval") return eval_cmd.run(out);
    if (name == "heatmap") return heatmap.run(out);
    err << "unknown subcommand " << name << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NetworkError& e) {
    err << "network error: " << e.what() << "\n";
    return kNetwork;
  } catch (const AuthError& e) {
    err << "authentication error: " << e.what() << "\n";
    return kNetwork;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace cauda::cli
