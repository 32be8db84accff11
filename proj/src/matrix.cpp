#include "cauda/matrix.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "cauda/error.hpp"

namespace cauda::cooccur {

void Vocabulary::validate() const {
  if (verbs.empty() || nouns.empty())
    throw ConfigError("vocabulary needs at least one verb and one noun");
  auto check_unique = [](const std::vector<std::string>& names,
                         const char* kind) {
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (!seen.insert(n).second)
        throw ConfigError(std::string("duplicate ") + kind + " name '" + n +
                          "'");
    }
  };
  check_unique(verbs, "verb");
  check_unique(nouns, "noun");
}

Vocabulary Vocabulary::numbered(std::size_t verbs, std::size_t nouns) {
  Vocabulary v;
  for (std::size_t i = 0; i < verbs; ++i) v.verbs.push_back("verb" + std::to_string(i));
  for (std::size_t j = 0; j < nouns; ++j) v.nouns.push_back("noun" + std::to_string(j));
  return v;
}

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t verbs, std::size_t nouns)
    : CooccurrenceMatrix(verbs, nouns,
                         std::vector<std::uint64_t>(verbs * nouns, 0)) {}

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t verbs, std::size_t nouns,
                                       std::vector<std::uint64_t> counts)
    : verbs_(verbs), nouns_(nouns), counts_(std::move(counts)) {
  if (verbs_ == 0 || nouns_ == 0)
    throw ShapeMismatch("co-occurrence matrix needs V >= 1 and N >= 1");
  if (counts_.size() != verbs_ * nouns_)
    throw ShapeMismatch("co-occurrence matrix holds " +
                        std::to_string(counts_.size()) + " cells, expected " +
                        std::to_string(verbs_ * nouns_));
}

std::uint64_t CooccurrenceMatrix::at(std::size_t verb, std::size_t noun) const {
  if (verb >= verbs_ || noun >= nouns_)
    throw BoundsError("matrix cell out of range", verb * nouns_ + noun);
  return counts_[verb * nouns_ + noun];
}

std::uint64_t& CooccurrenceMatrix::at(std::size_t verb, std::size_t noun) {
  if (verb >= verbs_ || noun >= nouns_)
    throw BoundsError("matrix cell out of range", verb * nouns_ + noun);
  return counts_[verb * nouns_ + noun];
}

std::uint64_t CooccurrenceMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ValidityMask::ValidityMask(std::size_t verbs, std::size_t nouns,
                           std::vector<std::uint8_t> cells)
    : verbs_(verbs), nouns_(nouns), cells_(std::move(cells)) {
  if (verbs_ == 0 || nouns_ == 0)
    throw ShapeMismatch("validity mask needs V >= 1 and N >= 1");
  if (cells_.size() != verbs_ * nouns_)
    throw ShapeMismatch("validity mask holds " + std::to_string(cells_.size()) +
                        " cells, expected " + std::to_string(verbs_ * nouns_));
  for (auto& c : cells_) c = c ? 1 : 0;
  if (std::none_of(cells_.begin(), cells_.end(), [](auto c) { return c != 0; }))
    throw EmptyMask("validity mask has no valid verb-noun pair");
}

ValidityMask ValidityMask::all_valid(std::size_t verbs, std::size_t nouns) {
  return ValidityMask(verbs, nouns, std::vector<std::uint8_t>(verbs * nouns, 1));
}

bool ValidityMask::valid(std::size_t verb, std::size_t noun) const {
  if (verb >= verbs_ || noun >= nouns_)
    throw BoundsError("mask cell out of range", verb * nouns_ + noun);
  return cells_[verb * nouns_ + noun] != 0;
}

std::size_t ValidityMask::count_valid() const noexcept {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

ValidityMask ValidityMask::united_with(const ValidityMask& other) const {
  if (other.verbs_ != verbs_ || other.nouns_ != nouns_)
    throw DimensionMismatch("cannot unite masks of different shapes");
  auto cells = cells_;
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] |= other.cells_[k];
  return ValidityMask(verbs_, nouns_, std::move(cells));
}

}  // namespace cauda::cooccur
