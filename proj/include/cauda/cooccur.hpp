#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cauda/formula.hpp"
#include "cauda/fuzzy.hpp"
#include "cauda/matrix.hpp"

namespace cauda::cooccur {

struct Annotation {
  std::string uid;
  std::uint32_t verb = 0;
  std::uint32_t noun = 0;
};

/// counts[i][j] = number of annotations labelled (i, j). Throws BoundsError
/// carrying the index of the first out-of-range record.
CooccurrenceMatrix build_from_annotations(const std::vector<Annotation>& records,
                                          std::size_t verbs, std::size_t nouns);

/// valid[i][j] = counts[i][j] >= min_count. Throws EmptyMask when nothing
/// passes and ConfigError for min_count == 0.
ValidityMask binarize(const CooccurrenceMatrix& m, std::uint64_t min_count = 1);

/// InvalidNegations: one `!(verb:i & noun:j)` per invalid cell, row-major.
/// ValidDisjunction: one left-deep disjunction of `(verb:i & noun:j)` over
/// valid cells, row-major. An all-valid mask has no InvalidNegations form and
/// throws InvalidConstraintSet.
logic::ConstraintSet to_constraints(const ValidityMask& mask, logic::ConstraintMode mode);

/// V x N action scores, row-major.
struct ActionScores {
  std::size_t verbs = 0;
  std::size_t nouns = 0;
  std::vector<double> scores;
  /// Set when every valid cell had zero mass and the unmasked outer product
  /// was returned instead.
  bool fallback = false;

  double at(std::size_t verb, std::size_t noun) const { return scores[verb * nouns + noun]; }
};

/// verb_probs (x) noun_probs.
ActionScores outer_product(const logic::TruthAssignment& t);

/// Outer product with invalid cells zeroed, renormalized to sum 1.
ActionScores refine_action_scores(const ValidityMask& mask, const logic::TruthAssignment& t);

/// Same masking applied to an arbitrary non-negative score table.
ActionScores refine_scores(const ValidityMask& mask, ActionScores scores);

// File formats. Matrix CSV: `verbs=<V>,nouns=<N>` then V rows of N integers.
// Mask CSV: same layout with 0/1 cells.

void save_csv(const CooccurrenceMatrix& m, const std::filesystem::path& path);
std::string to_csv(const CooccurrenceMatrix& m);
/// `expected` (verbs, nouns) raises VocabMismatch when the header disagrees.
CooccurrenceMatrix load_csv(const std::filesystem::path& path,
                            std::optional<std::pair<std::size_t, std::size_t>> expected = {});
CooccurrenceMatrix matrix_from_csv(const std::string& text,
                                   std::optional<std::pair<std::size_t, std::size_t>> expected = {});

void save_mask(const ValidityMask& m, const std::filesystem::path& path);
std::string to_csv(const ValidityMask& m);
ValidityMask load_mask(const std::filesystem::path& path,
                       std::optional<std::pair<std::size_t, std::size_t>> expected = {});
ValidityMask mask_from_csv(const std::string& text,
                           std::optional<std::pair<std::size_t, std::size_t>> expected = {});

/// `uid,verb_id,noun_id` with a header row.
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
std::vector<Annotation> annotations_from_csv(const std::string& text);
void save_annotations(const std::vector<Annotation>& records, const std::filesystem::path& path);

/// `{"verbs": [...], "nouns": [...]}`.
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& v, const std::filesystem::path& path);

/// Binary PGM (P5) of the selected rows (verbs) and columns (nouns). Each
/// cell becomes a `block` x `block` square with intensity
/// round(255 * log(1+c) / log(1+max c)) over the selection; all-zero
/// selections render black.
std::string render_heatmap(const CooccurrenceMatrix& m, const std::vector<std::size_t>& verbs,
                           const std::vector<std::size_t>& nouns, std::size_t block = 16);

}  // namespace cauda::cooccur
