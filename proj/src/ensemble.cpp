#include "cauda/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cauda/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace cauda::ensemble {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kSumTolerance = 1e-4;

void check_distribution(const std::vector<double>& p, const std::string& what, std::size_t line) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw ParseError(line, what + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw ParseError(line, what + " sums to " + detail::format_double(sum) + ", not 1");
}

void check_record(const PredictionRecord& r, std::size_t verbs, std::size_t nouns, std::size_t line) {
  if (r.uid.empty()) throw ParseError(line, "record has an empty uid");
  const std::string who = "record '" + r.uid + "'";
  if (r.has_branches()) {
    if (r.verb_probs.size() != verbs || r.noun_probs.size() != nouns)
      throw VocabMismatch(who + " has " + std::to_string(r.verb_probs.size()) + " verb and " +
                          std::to_string(r.noun_probs.size()) + " noun probabilities, expected " +
                          std::to_string(verbs) + " and " + std::to_string(nouns));
    check_distribution(r.verb_probs, who + " verb_probs", line);
    check_distribution(r.noun_probs, who + " noun_probs", line);
  } else {
    if (!r.verb_probs.empty() || !r.noun_probs.empty())
      throw ParseError(line, who + " mixes branch probabilities and action scores");
    if (r.action_scores.size() != verbs * nouns)
      throw VocabMismatch(who + " has " + std::to_string(r.action_scores.size()) +
                          " action scores, expected " + std::to_string(verbs * nouns));
    check_distribution(r.action_scores, who + " action_scores", line);
  }
}

std::vector<double> read_vector(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) throw ParseError(0, std::string(key) + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError(0, std::string(key) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

// Sum in ascending order so the result is independent of input order.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

void PredictionFile::validate() const {
  if (verbs == 0 || nouns == 0) throw ParseError(1, "vocabulary sizes must be positive");
  std::set<std::string_view> seen;
  for (std::size_t k = 0; k < records.size(); ++k) {
    check_record(records[k], verbs, nouns, k + 2);
    if (!seen.insert(records[k].uid).second)
      throw ParseError(k + 2, "duplicate uid '" + records[k].uid + "'");
  }
}

std::string to_jsonl(const PredictionFile& f) {
  std::string out;
  ordered_json header;
  header["verbs"] = f.verbs;
  header["nouns"] = f.nouns;
  header["model"] = f.model;
  out += header.dump() + "\n";
  for (const auto& r : f.records) {
    ordered_json j;
    j["uid"] = r.uid;
    if (r.has_branches()) {
      j["verb_probs"] = r.verb_probs;
      j["noun_probs"] = r.noun_probs;
    } else {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < f.verbs; ++i)
        rows.push_back(std::vector<double>(r.action_scores.begin() + static_cast<std::ptrdiff_t>(i * f.nouns),
                                           r.action_scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * f.nouns)));
      j["action_scores"] = std::move(rows);
    }
    out += j.dump() + "\n";
  }
  return out;
}

PredictionFile parse_predictions(const std::string& text) {
  PredictionFile f;
  bool have_header = false;
  const auto lines = detail::split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::size_t line = k + 1;
    if (detail::trim(lines[k]).empty()) continue;
    json j;
    try {
      j = json::parse(lines[k]);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "expected a JSON object");
    try {
      if (!have_header) {
        for (auto& [key, _] : j.items())
          if (key != "verbs" && key != "nouns" && key != "model")
            throw ParseError(line, "unknown header key '" + key + "'");
        f.verbs = j.at("verbs").get<std::size_t>();
        f.nouns = j.at("nouns").get<std::size_t>();
        f.model = j.at("model").get<std::string>();
        if (f.verbs == 0 || f.nouns == 0) throw ParseError(line, "vocabulary sizes must be positive");
        have_header = true;
        continue;
      }
      PredictionRecord r;
      for (auto& [key, _] : j.items())
        if (key != "uid" && key != "verb_probs" && key != "noun_probs" && key != "action_scores")
          throw ParseError(line, "unknown record key '" + key + "'");
      r.uid = j.at("uid").get<std::string>();
      if (j.contains("action_scores")) {
        if (j.contains("verb_probs") || j.contains("noun_probs"))
          throw ParseError(line, "record mixes branch probabilities and action scores");
        const json& rows = j.at("action_scores");
        if (!rows.is_array() || rows.size() != f.verbs)
          throw VocabMismatch("line " + std::to_string(line) + ": action_scores must have " +
                              std::to_string(f.verbs) + " rows");
        for (const auto& row : rows) {
          if (!row.is_array() || row.size() != f.nouns)
            throw VocabMismatch("line " + std::to_string(line) + ": action_scores rows must have " +
                                std::to_string(f.nouns) + " entries");
          for (const auto& x : row) {
            if (!x.is_number()) throw ParseError(line, "action_scores must hold numbers");
            r.action_scores.push_back(x.get<double>());
          }
        }
      } else {
        r.verb_probs = read_vector(j, "verb_probs");
        r.noun_probs = read_vector(j, "noun_probs");
      }
      check_record(r, f.verbs, f.nouns, line);
      f.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(line, e.what());
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(line, e.what());
    }
  }
  if (!have_header) throw ParseError(0, "prediction file has no header line");
  f.validate();
  return f;
}

PredictionFile load_predictions(const std::filesystem::path& path) {
  return parse_predictions(detail::read_file(path));
}

void save_predictions(const PredictionFile& f, const std::filesystem::path& path) {
  f.validate();
  detail::write_file(path, to_jsonl(f));
}

cooccur::ActionScores compose_action_scores(const PredictionRecord& r, std::size_t verbs,
                                            std::size_t nouns, const cooccur::ValidityMask* mask) {
  check_record(r, verbs, nouns, 0);
  cooccur::ActionScores s;
  if (r.has_branches()) {
    s = cooccur::outer_product({r.verb_probs, r.noun_probs});
  } else {
    s.verbs = verbs;
    s.nouns = nouns;
    s.scores = r.action_scores;
  }
  if (mask) s = cooccur::refine_scores(*mask, std::move(s));
  return s;
}

PredictionFile aggregate(const std::vector<PredictionFile>& files, const EnsembleConfig& cfg,
                         const std::string& model_name) {
  if (files.empty()) throw ConfigError("aggregate needs at least one prediction file");
  if (cfg.weights.size() != files.size())
    throw ConfigError(std::to_string(files.size()) + " prediction files but " +
                      std::to_string(cfg.weights.size()) + " weights");
  for (double w : cfg.weights)
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("weights must be finite and non-negative");
  std::vector<double> wsorted = cfg.weights;
  const double wsum = sorted_sum(wsorted);
  if (!(wsum > 0.0)) throw ConfigError("weights must have a positive sum");

  const std::size_t V = files.front().verbs, N = files.front().nouns;
  for (const auto& f : files)
    if (f.verbs != V || f.nouns != N)
      throw VocabMismatch("prediction files disagree on vocabulary: " + std::to_string(V) + "x" +
                          std::to_string(N) + " vs " + std::to_string(f.verbs) + "x" +
                          std::to_string(f.nouns));
  if (cfg.mask && (cfg.mask->verbs() != V || cfg.mask->nouns() != N))
    throw VocabMismatch("mask is " + std::to_string(cfg.mask->verbs()) + "x" +
                        std::to_string(cfg.mask->nouns()) + ", predictions are " +
                        std::to_string(V) + "x" + std::to_string(N));

  std::vector<std::map<std::string, const PredictionRecord*>> index(files.size());
  std::set<std::string> all;
  for (std::size_t k = 0; k < files.size(); ++k)
    for (const auto& r : files[k].records) {
      index[k][r.uid] = &r;
      all.insert(r.uid);
    }
  std::vector<std::string> missing;
  for (const auto& uid : all)
    for (const auto& ix : index)
      if (!ix.contains(uid)) {
        missing.push_back(uid);
        break;
      }
  if (!missing.empty()) throw UidMismatch(std::move(missing));

  std::vector<double> w(files.size());
  for (std::size_t k = 0; k < files.size(); ++k) w[k] = cfg.weights[k] / wsum;
  const cooccur::ValidityMask* mask = cfg.mask ? &*cfg.mask : nullptr;

  PredictionFile out;
  out.model = model_name;
  out.verbs = V;
  out.nouns = N;
  out.records.reserve(all.size());
  std::vector<cooccur::ActionScores> parts(files.size());
  std::vector<double> terms;
  for (const auto& uid : all) {
    for (std::size_t k = 0; k < files.size(); ++k)
      parts[k] = compose_action_scores(*index[k].at(uid), V, N, mask);
    PredictionRecord r;
    r.uid = uid;
    r.action_scores.resize(V * N);
    if (cfg.mode == Aggregation::Arithmetic) {
      for (std::size_t c = 0; c < V * N; ++c) {
        terms.clear();
        for (std::size_t k = 0; k < files.size(); ++k) terms.push_back(w[k] * parts[k].scores[c]);
        r.action_scores[c] = sorted_sum(terms);
      }
    } else {
      std::vector<double> logs(V * N);
      double best = -HUGE_VAL;
      for (std::size_t c = 0; c < V * N; ++c) {
        terms.clear();
        bool zero = false;
        for (std::size_t k = 0; k < files.size(); ++k) {
          if (w[k] == 0.0) continue;
          const double s = parts[k].scores[c];
          if (s <= 0.0) {
            zero = true;
            break;
          }
          terms.push_back(w[k] * std::log(s));
        }
        logs[c] = zero ? -HUGE_VAL : sorted_sum(terms);
        best = std::max(best, logs[c]);
      }
      if (!std::isfinite(best))
        throw ConfigError("geometric aggregation of '" + uid + "' is zero for every action");
      for (std::size_t c = 0; c < V * N; ++c) r.action_scores[c] = std::exp(logs[c] - best);
      std::vector<double> sorted = r.action_scores;
      const double total = sorted_sum(sorted);
      for (auto& s : r.action_scores) s /= total;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

train::Metrics evaluate_predictions(const PredictionFile& f,
                                    const std::vector<cooccur::Annotation>& labels,
                                    const cooccur::ValidityMask* refine,
                                    const cooccur::ValidityMask* judge) {
  std::map<std::string, model::ActionLabel> by_uid;
  for (const auto& a : labels)
    if (!by_uid.emplace(a.uid, model::ActionLabel{a.verb, a.noun}).second)
      throw ParseError(0, "duplicate label for uid '" + a.uid + "'");

  std::vector<train::SamplePrediction> preds;
  std::vector<model::ActionLabel> ys;
  preds.reserve(f.records.size());
  for (const auto& r : f.records) {
    auto it = by_uid.find(r.uid);
    if (it == by_uid.end()) throw MissingLabels("no label for prediction '" + r.uid + "'");
    if (it->second.verb >= f.verbs || it->second.noun >= f.nouns)
      throw BoundsError("label of '" + r.uid + "' lies outside the prediction vocabulary",
                        static_cast<std::size_t>(&r - f.records.data()));
    train::SamplePrediction p;
    if (r.has_branches()) {
      p.verb_scores = r.verb_probs;
      p.noun_scores = r.noun_probs;
    } else {
      p.verb_scores.assign(f.verbs, 0.0);
      p.noun_scores.assign(f.nouns, 0.0);
      for (std::size_t i = 0; i < f.verbs; ++i)
        for (std::size_t j = 0; j < f.nouns; ++j) {
          p.verb_scores[i] += r.action_scores[i * f.nouns + j];
          p.noun_scores[j] += r.action_scores[i * f.nouns + j];
        }
    }
    p.action = compose_action_scores(r, f.verbs, f.nouns, refine);
    preds.push_back(std::move(p));
    ys.push_back(it->second);
  }
  return train::score_predictions(preds, ys, judge ? judge : refine);
}

}  // namespace cauda::ensemble
