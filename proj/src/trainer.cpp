#include "cauda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"

#include "cauda/error.hpp"
#include "io_util.hpp"

namespace cauda::train {

namespace {

std::size_t unseen_samples(const SyntheticConfig& c) {
  return static_cast<std::size_t>(std::llround(c.unseen_fraction * static_cast<double>(c.n_target)));
}

std::size_t held_out_pairs(const SyntheticConfig& c) {
  if (unseen_samples(c) == 0) return 0;
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(c.unseen_fraction * static_cast<double>(c.valid_pairs))));
}

std::string sample_uid(char prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, k);
  return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (verbs == 0 || nouns == 0) throw ConfigError("synthetic vocabulary needs V, N >= 1");
  if (valid_pairs == 0 || valid_pairs > verbs * nouns)
    throw ConfigError("valid_pairs must lie in [1, V*N]");
  if (feature_dim == 0) throw ConfigError("feature_dim must be >= 1");
  if (min_frames == 0 || min_frames > max_frames)
    throw ConfigError("frame range must satisfy 1 <= min_frames <= max_frames");
  if (n_source == 0) throw ConfigError("n_source must be >= 1");
  if (!(shift >= 0.0)) throw ConfigError("shift must be >= 0");
  if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be > 0");
  if (!(proto_scale > 0.0)) throw ConfigError("proto_scale must be > 0");
  if (!(unseen_fraction >= 0.0 && unseen_fraction <= 1.0))
    throw ConfigError("unseen_fraction must lie in [0, 1]");
  if (held_out_pairs(*this) >= valid_pairs)
    throw ConfigError("valid_pairs=" + std::to_string(valid_pairs) + " leaves no seen pair after holding out " +
                      std::to_string(held_out_pairs(*this)) + " for unseen target samples");
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::size_t> cells(cfg.verbs * cfg.nouns);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<std::size_t> valid(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(cfg.valid_pairs));
  const std::size_t held = held_out_pairs(cfg);
  std::vector<std::size_t> unseen(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> seen(valid.begin() + static_cast<std::ptrdiff_t>(held), valid.end());
  std::sort(unseen.begin(), unseen.end());
  std::sort(seen.begin(), seen.end());

  const std::size_t d = cfg.feature_dim;
  auto draw = [&](double scale) {
    std::vector<double> v(d);
    for (auto& x : v) x = scale * gauss(rng);
    return v;
  };
  std::vector<std::vector<double>> verb_proto, noun_proto;
  for (std::size_t i = 0; i < cfg.verbs; ++i) verb_proto.push_back(draw(cfg.proto_scale));
  for (std::size_t j = 0; j < cfg.nouns; ++j) noun_proto.push_back(draw(cfg.proto_scale));
  std::vector<double> direction = draw(1.0);
  double norm = std::sqrt(std::inner_product(direction.begin(), direction.end(), direction.begin(), 0.0));
  for (auto& x : direction) x /= norm;

  std::uniform_int_distribution<std::size_t> frames_dist(cfg.min_frames, cfg.max_frames);
  auto make_sample = [&](std::size_t cell, model::Domain domain, std::string uid) {
    const std::size_t verb = cell / cfg.nouns, noun = cell % cfg.nouns;
    const std::size_t T = frames_dist(rng);
    ad::Tensor frames(T, d);
    const double offset = domain == model::Domain::Target ? cfg.shift : 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < d; ++k)
        frames(t, k) = verb_proto[verb][k] + noun_proto[noun][k] + offset * direction[k] +
                       cfg.noise_sigma * gauss(rng);
    return model::FrameFeatures{std::move(uid), std::move(frames), domain,
                                model::ActionLabel{static_cast<std::uint32_t>(verb),
                                                   static_cast<std::uint32_t>(noun)}};
  };
  auto pick = [&](const std::vector<std::size_t>& pool) {
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    return pool[dist(rng)];
  };

  SyntheticData out{{}, {}, cooccur::ValidityMask::all_valid(1, 1), unseen};
  for (std::size_t k = 0; k < cfg.n_source; ++k)
    out.source.push_back(make_sample(pick(seen), model::Domain::Source, sample_uid('s', k)));
  const std::size_t n_unseen = unseen_samples(cfg);
  std::vector<std::size_t> target_cells;
  for (std::size_t k = 0; k < cfg.n_target; ++k)
    target_cells.push_back(k < n_unseen ? pick(unseen) : pick(seen));
  std::shuffle(target_cells.begin(), target_cells.end(), rng);
  for (std::size_t k = 0; k < cfg.n_target; ++k)
    out.target.push_back(make_sample(target_cells[k], model::Domain::Target, sample_uid('t', k)));

  std::vector<std::uint8_t> truth(cfg.verbs * cfg.nouns, 0);
  for (auto c : valid) truth[c] = 1;
  out.truth = cooccur::ValidityMask(cfg.verbs, cfg.nouns, std::move(truth));
  return out;
}

std::vector<cooccur::Annotation> annotations_of(const Dataset& data) {
  std::vector<cooccur::Annotation> out;
  for (const auto& s : data)
    if (s.label) out.push_back({s.uid, s.label->verb, s.label->noun});
  return out;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be > 0");
  if (!(lr_factor > 0.0)) throw ConfigError("lr_factor must be > 0");
  if (batch == 0) throw ConfigError("batch must be >= 1");
  if (!std::is_sorted(lr_drops.begin(), lr_drops.end()))
    throw ConfigError("lr_drops must be sorted ascending");
  for (auto e : lr_drops)
    if (e < 1) throw ConfigError("lr drop epochs are 1-based");
  if (!(model.lambda_grl >= 0.0) || !(model.lambda_logic >= 0.0) || !(model.lambda_domain >= 0.0))
    throw ConfigError("loss weights must be non-negative");
  semantics.validate();
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double lr = lr0;
  for (auto e : lr_drops)
    if (epoch >= e) lr /= lr_factor;
  return lr;
}

Metrics evaluate(const model::AdaptModel& model, const Dataset& data, EvalMasks masks) {
  std::vector<SamplePrediction> preds;
  std::vector<model::ActionLabel> labels;
  preds.reserve(data.size());
  for (const auto& s : data) {
    if (!s.label) throw MissingLabels("evaluation sample '" + s.uid + "' has no label");
    auto out = model.predict(s);
    logic::TruthAssignment t{out.verb_probs, out.noun_probs};
    auto action = masks.refine ? cooccur::refine_action_scores(*masks.refine, t) : cooccur::outer_product(t);
    preds.push_back({std::move(out.verb_probs), std::move(out.noun_probs), std::move(action)});
    labels.push_back(*s.label);
  }
  return score_predictions(preds, labels, masks.judge ? masks.judge : masks.refine);
}

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const logic::ConstraintSet* constraints, EvalMasks eval_masks) {
  cfg.validate();
  if (source.empty()) throw ConfigError("training needs at least one source sample");
  model::AdaptModel model(cfg.model, cfg.seed);
  std::optional<logic::LogicLoss> logic_loss;
  if (constraints) logic_loss.emplace(*constraints, cfg.semantics);

  TrainResult result;
  result.initial = evaluate(model, target, eval_masks);

  std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> src_order(source.size()), tgt_order(target.size());
  std::iota(src_order.begin(), src_order.end(), std::size_t{0});
  std::iota(tgt_order.begin(), tgt_order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cfg.lr_at(epoch);
    std::shuffle(src_order.begin(), src_order.end(), rng);
    std::shuffle(tgt_order.begin(), tgt_order.end(), rng);
    std::size_t steps = 0, tgt_cursor = 0;
    for (std::size_t begin = 0; begin < source.size(); begin += cfg.batch) {
      const std::size_t end = std::min(source.size(), begin + cfg.batch);
      std::vector<const model::FrameFeatures*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&source[src_order[k]]);
      if (!target.empty()) {
        for (std::size_t k = begin; k < end; ++k, ++tgt_cursor)
          batch.push_back(&target[tgt_order[tgt_cursor % target.size()]]);
      }

      ad::Graph g;
      std::vector<model::Heads> heads;
      heads.reserve(batch.size());
      for (const auto* s : batch) heads.push_back(model.forward(g, *s));
      auto loss = model::total_loss(g, heads, batch, logic_loss ? &*logic_loss : nullptr, cfg.model);
      g.backward(loss.total);
      for (auto& [_, p] : model.parameters()) {
        if (!p.trainable) continue;
        for (std::size_t k = 0; k < p.value.size(); ++k) p.value[k] -= rec.lr * p.grad[k];
      }
      model.parameters().zero_grads();

      rec.total += loss.total.item();
      rec.verb += loss.verb;
      rec.noun += loss.noun;
      rec.domain += loss.domain;
      rec.logic += loss.logic;
      ++steps;
    }
    const double n = static_cast<double>(steps);
    rec.total /= n;
    rec.verb /= n;
    rec.noun /= n;
    rec.domain /= n;
    rec.logic /= n;
    rec.target = evaluate(model, target, eval_masks);
    result.history.push_back(rec);
  }
  result.final_metrics = result.history.empty() ? result.initial : result.history.back().target;
  result.checkpoint = model.parameters();
  return result;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

logic::ConstraintMode parse_mode(const std::string& s) {
  if (s == "valid" || s == "valid-disjunction") return logic::ConstraintMode::ValidDisjunction;
  if (s == "invalid" || s == "invalid-negations") return logic::ConstraintMode::InvalidNegations;
  throw ConfigError("constraint_mode must be 'valid' or 'invalid'");
}

}  // namespace

Experiment parse_experiment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("experiment is not valid JSON: ") + e.what());
  }
  Experiment e;
  reject_unknown(j, {"name", "synthetic", "train"}, "experiment");
  read(j, "name", e.name);
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    reject_unknown(s,
                   {"verbs", "nouns", "valid_pairs", "feature_dim", "min_frames", "max_frames", "n_source",
                    "n_target", "shift", "noise_sigma", "proto_scale", "unseen_fraction", "seed"},
                   "synthetic");
    auto& c = e.synthetic;
    read(s, "verbs", c.verbs);
    read(s, "nouns", c.nouns);
    read(s, "valid_pairs", c.valid_pairs);
    read(s, "feature_dim", c.feature_dim);
    read(s, "min_frames", c.min_frames);
    read(s, "max_frames", c.max_frames);
    read(s, "n_source", c.n_source);
    read(s, "n_target", c.n_target);
    read(s, "shift", c.shift);
    read(s, "noise_sigma", c.noise_sigma);
    read(s, "proto_scale", c.proto_scale);
    read(s, "unseen_fraction", c.unseen_fraction);
    read(s, "seed", c.seed);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t,
                   {"epochs", "lr0", "lr_drops", "lr_factor", "batch", "seed", "constraint_mode", "semantics",
                    "model"},
                   "train");
    auto& c = e.train;
    read(t, "epochs", c.epochs);
    read(t, "lr0", c.lr0);
    read(t, "lr_drops", c.lr_drops);
    read(t, "lr_factor", c.lr_factor);
    read(t, "batch", c.batch);
    read(t, "seed", c.seed);
    if (t.contains("constraint_mode")) {
      std::string mode;
      read(t, "constraint_mode", mode);
      e.constraint_mode = parse_mode(mode);
    }
    if (t.contains("semantics")) {
      const auto& s = t["semantics"];
      reject_unknown(s, {"tnorm", "clamp_eps"}, "semantics");
      std::string tnorm = logic::to_string(c.semantics.tnorm);
      read(s, "tnorm", tnorm);
      c.semantics.tnorm = logic::parse_tnorm(tnorm);
      read(s, "clamp_eps", c.semantics.clamp_eps);
    }
    if (t.contains("model")) {
      const auto& m = t["model"];
      reject_unknown(m,
                     {"hidden", "gcn_layers", "lambda_grl", "lambda_logic", "lambda_domain", "logic_on_target",
                      "use_grl"},
                     "model");
      read(m, "hidden", c.model.hidden);
      read(m, "gcn_layers", c.model.gcn_layers);
      read(m, "lambda_grl", c.model.lambda_grl);
      read(m, "lambda_logic", c.model.lambda_logic);
      read(m, "lambda_domain", c.model.lambda_domain);
      read(m, "logic_on_target", c.model.logic_on_target);
      read(m, "use_grl", c.model.use_grl);
    }
  }
  e.train.model.input_dim = e.synthetic.feature_dim;
  e.train.model.verbs = e.synthetic.verbs;
  e.train.model.nouns = e.synthetic.nouns;
  e.synthetic.validate();
  e.train.validate();
  e.train.model.validate();
  return e;
}

std::string experiment_to_json(const Experiment& e) {
  const auto& s = e.synthetic;
  const auto& t = e.train;
  json j{{"name", e.name},
         {"synthetic",
          {{"verbs", s.verbs},
           {"nouns", s.nouns},
           {"valid_pairs", s.valid_pairs},
           {"feature_dim", s.feature_dim},
           {"min_frames", s.min_frames},
           {"max_frames", s.max_frames},
           {"n_source", s.n_source},
           {"n_target", s.n_target},
           {"shift", s.shift},
           {"noise_sigma", s.noise_sigma},
           {"proto_scale", s.proto_scale},
           {"unseen_fraction", s.unseen_fraction},
           {"seed", s.seed}}},
         {"train",
          {{"epochs", t.epochs},
           {"lr0", t.lr0},
           {"lr_drops", t.lr_drops},
           {"lr_factor", t.lr_factor},
           {"batch", t.batch},
           {"seed", t.seed},
           {"constraint_mode",
            e.constraint_mode == logic::ConstraintMode::ValidDisjunction ? "valid" : "invalid"},
           {"semantics", {{"tnorm", logic::to_string(t.semantics.tnorm)}, {"clamp_eps", t.semantics.clamp_eps}}},
           {"model",
            {{"hidden", t.model.hidden},
             {"gcn_layers", t.model.gcn_layers},
             {"lambda_grl", t.model.lambda_grl},
             {"lambda_logic", t.model.lambda_logic},
             {"lambda_domain", t.model.lambda_domain},
             {"logic_on_target", t.model.logic_on_target},
             {"use_grl", t.model.use_grl}}}}}};
  return j.dump(2) + "\n";
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  using detail::format_double;
  std::string out =
      "epoch,lr,total,verb,noun,domain,logic,verb_top1,noun_top1,action_top1,verb_top5,noun_top5,action_top5,"
      "invalid_rate\n";
  for (const auto& r : history) {
    const auto& m = r.target;
    out += std::to_string(r.epoch) + "," + format_double(r.lr) + "," + format_double(r.total) + "," +
           format_double(r.verb) + "," + format_double(r.noun) + "," + format_double(r.domain) + "," +
           format_double(r.logic) + "," + format_double(m.verb_top1) + "," + format_double(m.noun_top1) + "," +
           format_double(m.action_top1) + "," + format_double(m.verb_top5) + "," + format_double(m.noun_top5) +
           "," + format_double(m.action_top5) + "," + format_double(m.invalid_rate) + "\n";
  }
  return out;
}

}  // namespace cauda::train
