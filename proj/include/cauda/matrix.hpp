#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cauda::cooccur {

/// Verb and noun class names. Position in each list is the class id.
struct Vocabulary {
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;

  std::size_t num_verbs() const noexcept { return verbs.size(); }
  std::size_t num_nouns() const noexcept { return nouns.size(); }

  /// Throws ConfigError on empty lists or duplicate names.
  void validate() const;

  /// Vocabulary with placeholder names "verb<i>" / "noun<j>".
  static Vocabulary numbered(std::size_t verbs, std::size_t nouns);

  bool operator==(const Vocabulary&) const = default;
};

/// V x N annotation counts, row-major (verb rows, noun columns).
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix(std::size_t verbs, std::size_t nouns);
  CooccurrenceMatrix(std::size_t verbs, std::size_t nouns,
                     std::vector<std::uint64_t> counts);

  std::size_t verbs() const noexcept { return verbs_; }
  std::size_t nouns() const noexcept { return nouns_; }
  std::uint64_t at(std::size_t verb, std::size_t noun) const;
  std::uint64_t& at(std::size_t verb, std::size_t noun);
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept;

  bool operator==(const CooccurrenceMatrix&) const = default;

 private:
  std::size_t verbs_;
  std::size_t nouns_;
  std::vector<std::uint64_t> counts_;
};

/// Boolean V x N table of admissible verb-noun pairs. Always has at least
/// one valid cell; construction throws EmptyMask otherwise.
class ValidityMask {
 public:
  ValidityMask(std::size_t verbs, std::size_t nouns,
               std::vector<std::uint8_t> cells);

  static ValidityMask all_valid(std::size_t verbs, std::size_t nouns);

  std::size_t verbs() const noexcept { return verbs_; }
  std::size_t nouns() const noexcept { return nouns_; }
  bool valid(std::size_t verb, std::size_t noun) const;
  std::size_t count_valid() const noexcept;
  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  /// Cell-wise OR; dimensions must agree.
  ValidityMask united_with(const ValidityMask& other) const;

  bool operator==(const ValidityMask&) const = default;

 private:
  std::size_t verbs_;
  std::size_t nouns_;
  std::vector<std::uint8_t> cells_;
};

}  // namespace cauda::cooccur
