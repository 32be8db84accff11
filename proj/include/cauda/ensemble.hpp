#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cauda/cooccur.hpp"
#include "cauda/metrics.hpp"

namespace cauda::ensemble {

/// One sample: either branch probabilities or a full V x N score table
/// (row-major), never both.
struct PredictionRecord {
  std::string uid;
  std::vector<double> verb_probs;
  std::vector<double> noun_probs;
  std::vector<double> action_scores;

  bool has_branches() const noexcept { return action_scores.empty(); }
  bool operator==(const PredictionRecord&) const = default;
};

struct PredictionFile {
  std::string model;
  std::size_t verbs = 0;
  std::size_t nouns = 0;
  std::vector<PredictionRecord> records;

  /// Vocabulary sizes, finiteness, non-negativity, sums within 1e-4 of 1 and
  /// unique uids. Throws VocabMismatch for wrong lengths, ParseError
  /// otherwise.
  void validate() const;
  bool operator==(const PredictionFile&) const = default;
};

/// JSON lines: header {"verbs": V, "nouns": N, "model": name}, then one
/// record per line.
std::string to_jsonl(const PredictionFile& f);
PredictionFile parse_predictions(const std::string& text);
PredictionFile load_predictions(const std::filesystem::path& path);
void save_predictions(const PredictionFile& f, const std::filesystem::path& path);

/// Outer product of the branches, or the stored table; `mask` refinement is
/// applied last.
cooccur::ActionScores compose_action_scores(const PredictionRecord& r, std::size_t verbs,
                                            std::size_t nouns,
                                            const cooccur::ValidityMask* mask = nullptr);

enum class Aggregation { Arithmetic, Geometric };

struct EnsembleConfig {
  /// One non-negative weight per input file; the sum must be positive.
  std::vector<double> weights;
  std::optional<cooccur::ValidityMask> mask;
  Aggregation mode = Aggregation::Arithmetic;
};

/// Per uid, the weighted mean (normalized weights) of the composed tables.
/// Geometric mode takes the weighted mean of logs and renormalizes. Output
/// records carry action_scores, sorted by uid. The result does not depend
/// on the order of `files`; scaling all weights by a power of two leaves it
/// bit-identical. Throws UidMismatch, VocabMismatch and ConfigError.
PredictionFile aggregate(const std::vector<PredictionFile>& files, const EnsembleConfig& cfg,
                         const std::string& model_name = "ensemble");

/// Scores a prediction file against annotation labels. Branch scores come
/// from the stored branches, or from the table's marginals. Every
/// prediction needs a label (MissingLabels).
train::Metrics evaluate_predictions(const PredictionFile& f,
                                    const std::vector<cooccur::Annotation>& labels,
                                    const cooccur::ValidityMask* refine = nullptr,
                                    const cooccur::ValidityMask* judge = nullptr);

}  // namespace cauda::ensemble
