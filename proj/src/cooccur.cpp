#include "cauda/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "cauda/error.hpp"
#include "io_util.hpp"

namespace cauda::cooccur {

using detail::split;
using detail::split_lines;
using detail::trim;

CooccurrenceMatrix build_from_annotations(const std::vector<Annotation>& records,
                                          std::size_t verbs, std::size_t nouns) {
  CooccurrenceMatrix m(verbs, nouns);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (r.verb >= verbs || r.noun >= nouns)
      throw BoundsError("record " + std::to_string(k) + " (" + std::to_string(r.verb) + "," +
                            std::to_string(r.noun) + ") is outside the " + std::to_string(verbs) +
                            "x" + std::to_string(nouns) + " vocabulary",
                        k);
    ++m.at(r.verb, r.noun);
  }
  return m;
}

ValidityMask binarize(const CooccurrenceMatrix& m, std::uint64_t min_count) {
  if (min_count == 0) throw ConfigError("min_count must be at least 1");
  std::vector<std::uint8_t> cells(m.counts().size());
  std::transform(m.counts().begin(), m.counts().end(), cells.begin(),
                 [&](std::uint64_t c) { return c >= min_count ? 1 : 0; });
  if (std::none_of(cells.begin(), cells.end(), [](auto c) { return c != 0; }))
    throw EmptyMask("no verb-noun pair reaches min_count=" + std::to_string(min_count));
  return ValidityMask(m.verbs(), m.nouns(), std::move(cells));
}

logic::ConstraintSet to_constraints(const ValidityMask& mask, logic::ConstraintMode mode) {
  using logic::Formula;
  logic::VocabDims dims{static_cast<std::uint32_t>(mask.verbs()),
                        static_cast<std::uint32_t>(mask.nouns())};
  auto pair = [](std::size_t i, std::size_t j) {
    return Formula::conjunction(Formula::verb(static_cast<std::uint32_t>(i)),
                                Formula::noun(static_cast<std::uint32_t>(j)));
  };
  std::vector<Formula> formulas;
  if (mode == logic::ConstraintMode::InvalidNegations) {
    for (std::size_t i = 0; i < mask.verbs(); ++i)
      for (std::size_t j = 0; j < mask.nouns(); ++j)
        if (!mask.valid(i, j)) formulas.push_back(Formula::negation(pair(i, j)));
    if (formulas.empty())
      throw InvalidConstraintSet(
          "every pair is valid, so there is nothing to negate; use the valid-disjunction mode");
  } else {
    std::optional<Formula> chain;
    for (std::size_t i = 0; i < mask.verbs(); ++i) {
      for (std::size_t j = 0; j < mask.nouns(); ++j) {
        if (!mask.valid(i, j)) continue;
        chain = chain ? Formula::disjunction(std::move(*chain), pair(i, j)) : pair(i, j);
      }
    }
    formulas.push_back(std::move(*chain));
  }
  return logic::ConstraintSet(std::move(formulas), mode, dims);
}

ActionScores outer_product(const logic::TruthAssignment& t) {
  ActionScores out;
  out.verbs = t.verb_probs.size();
  out.nouns = t.noun_probs.size();
  out.scores.resize(out.verbs * out.nouns);
  for (std::size_t i = 0; i < out.verbs; ++i)
    for (std::size_t j = 0; j < out.nouns; ++j)
      out.scores[i * out.nouns + j] = t.verb_probs[i] * t.noun_probs[j];
  return out;
}

ActionScores refine_scores(const ValidityMask& mask, ActionScores scores) {
  if (mask.verbs() != scores.verbs || mask.nouns() != scores.nouns)
    throw DimensionMismatch("mask is " + std::to_string(mask.verbs()) + "x" +
                            std::to_string(mask.nouns()) + " but scores are " +
                            std::to_string(scores.verbs) + "x" + std::to_string(scores.nouns));
  ActionScores refined = scores;
  double mass = 0.0;
  for (std::size_t k = 0; k < refined.scores.size(); ++k) {
    if (!mask.cells()[k]) refined.scores[k] = 0.0;
    mass += refined.scores[k];
  }
  if (!(mass > 0.0)) {
    scores.fallback = true;
    return scores;
  }
  for (auto& s : refined.scores) s /= mass;
  refined.fallback = false;
  return refined;
}

ActionScores refine_action_scores(const ValidityMask& mask, const logic::TruthAssignment& t) {
  return refine_scores(mask, outer_product(t));
}

namespace {

using Dims = std::pair<std::size_t, std::size_t>;

std::string header(std::size_t verbs, std::size_t nouns) {
  return "verbs=" + std::to_string(verbs) + ",nouns=" + std::to_string(nouns) + "\n";
}

Dims parse_header(std::string_view line) {
  auto parts = split(line, ',');
  unsigned long long v = 0, n = 0;
  if (parts.size() != 2 || trim(parts[0]).substr(0, 6) != "verbs=" ||
      trim(parts[1]).substr(0, 6) != "nouns=" || !detail::parse_u64(trim(parts[0]).substr(6), v) ||
      !detail::parse_u64(trim(parts[1]).substr(6), n) || v == 0 || n == 0)
    throw ParseError(1, "expected header 'verbs=<V>,nouns=<N>'");
  return {static_cast<std::size_t>(v), static_cast<std::size_t>(n)};
}

// Reads the V x N integer grid shared by the matrix and mask formats.
template <typename Cell>
std::pair<Dims, std::vector<Cell>> read_grid(const std::string& text, std::optional<Dims> expected,
                                             bool binary) {
  auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(1, "empty file");
  Dims dims = parse_header(lines[0]);
  if (expected && *expected != dims)
    throw VocabMismatch("file declares " + std::to_string(dims.first) + "x" +
                        std::to_string(dims.second) + " but the vocabulary is " +
                        std::to_string(expected->first) + "x" + std::to_string(expected->second));
  std::vector<Cell> cells;
  cells.reserve(dims.first * dims.second);
  for (std::size_t r = 0; r < dims.first; ++r) {
    std::size_t line_no = r + 2;
    if (r + 1 >= lines.size())
      throw ParseError(line_no, "file ends after " + std::to_string(r) + " of " +
                                    std::to_string(dims.first) + " rows");
    auto fields = split(lines[r + 1], ',');
    if (fields.size() != dims.second)
      throw ParseError(line_no, "expected " + std::to_string(dims.second) + " values, found " +
                                    std::to_string(fields.size()));
    for (auto f : fields) {
      unsigned long long v = 0;
      if (!detail::parse_u64(trim(f), v) || (binary && v > 1))
        throw ParseError(line_no, "invalid cell '" + std::string(f) + "'");
      cells.push_back(static_cast<Cell>(v));
    }
  }
  for (std::size_t k = dims.first + 1; k < lines.size(); ++k)
    if (!trim(lines[k]).empty()) throw ParseError(k + 1, "unexpected data after the last row");
  return {dims, std::move(cells)};
}

template <typename Cell>
std::string write_grid(std::size_t verbs, std::size_t nouns, const std::vector<Cell>& cells) {
  std::string out = header(verbs, nouns);
  for (std::size_t i = 0; i < verbs; ++i) {
    for (std::size_t j = 0; j < nouns; ++j) {
      if (j) out += ',';
      out += std::to_string(static_cast<unsigned long long>(cells[i * nouns + j]));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string to_csv(const CooccurrenceMatrix& m) {
  return write_grid(m.verbs(), m.nouns(), m.counts());
}

void save_csv(const CooccurrenceMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, to_csv(m));
}

CooccurrenceMatrix matrix_from_csv(const std::string& text, std::optional<Dims> expected) {
  auto [dims, cells] = read_grid<std::uint64_t>(text, expected, false);
  return CooccurrenceMatrix(dims.first, dims.second, std::move(cells));
}

CooccurrenceMatrix load_csv(const std::filesystem::path& path, std::optional<Dims> expected) {
  return matrix_from_csv(detail::read_file(path), expected);
}

std::string to_csv(const ValidityMask& m) { return write_grid(m.verbs(), m.nouns(), m.cells()); }

void save_mask(const ValidityMask& m, const std::filesystem::path& path) {
  detail::write_file(path, to_csv(m));
}

ValidityMask mask_from_csv(const std::string& text, std::optional<Dims> expected) {
  auto [dims, cells] = read_grid<std::uint8_t>(text, expected, true);
  return ValidityMask(dims.first, dims.second, std::move(cells));
}

ValidityMask load_mask(const std::filesystem::path& path, std::optional<Dims> expected) {
  return mask_from_csv(detail::read_file(path), expected);
}

std::vector<Annotation> annotations_from_csv(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(1, "missing header 'uid,verb_id,noun_id'");
  auto head = split(lines[0], ',');
  if (head.size() != 3 || trim(head[0]) != "uid" || trim(head[1]) != "verb_id" ||
      trim(head[2]) != "noun_id")
    throw ParseError(1, "expected header 'uid,verb_id,noun_id'");
  std::vector<Annotation> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    auto f = split(lines[k], ',');
    unsigned long long v = 0, n = 0;
    if (f.size() != 3 || trim(f[0]).empty() || !detail::parse_u64(trim(f[1]), v) ||
        !detail::parse_u64(trim(f[2]), n) || v > UINT32_MAX || n > UINT32_MAX)
      throw ParseError(k + 1, "malformed annotation row '" + std::string(lines[k]) + "'");
    out.push_back({std::string(trim(f[0])), static_cast<std::uint32_t>(v),
                   static_cast<std::uint32_t>(n)});
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  return annotations_from_csv(detail::read_file(path));
}

void save_annotations(const std::vector<Annotation>& records, const std::filesystem::path& path) {
  std::string out = "uid,verb_id,noun_id\n";
  for (const auto& r : records)
    out += r.uid + "," + std::to_string(r.verb) + "," + std::to_string(r.noun) + "\n";
  detail::write_file(path, out);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "vocabulary is not valid JSON: " + std::string(e.what()));
  }
  Vocabulary v;
  try {
    v.verbs = j.at("verbs").get<std::vector<std::string>>();
    v.nouns = j.at("nouns").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, "vocabulary needs string arrays 'verbs' and 'nouns': " +
                            std::string(e.what()));
  }
  v.validate();
  return v;
}

void save_vocabulary(const Vocabulary& v, const std::filesystem::path& path) {
  nlohmann::json j{{"verbs", v.verbs}, {"nouns", v.nouns}};
  detail::write_file(path, j.dump(2) + "\n");
}

std::string render_heatmap(const CooccurrenceMatrix& m, const std::vector<std::size_t>& verbs,
                           const std::vector<std::size_t>& nouns, std::size_t block) {
  if (block == 0) throw ConfigError("heatmap block size must be positive");
  if (verbs.empty() || nouns.empty()) throw ConfigError("heatmap selection is empty");
  for (std::size_t k = 0; k < verbs.size(); ++k)
    if (verbs[k] >= m.verbs())
      throw BoundsError("verb id " + std::to_string(verbs[k]) + " is out of range", k);
  for (std::size_t k = 0; k < nouns.size(); ++k)
    if (nouns[k] >= m.nouns())
      throw BoundsError("noun id " + std::to_string(nouns[k]) + " is out of range", k);

  std::uint64_t peak = 0;
  for (auto i : verbs)
    for (auto j : nouns) peak = std::max(peak, m.at(i, j));
  const double scale = peak ? std::log1p(static_cast<double>(peak)) : 1.0;

  const std::size_t width = nouns.size() * block;
  const std::size_t height = verbs.size() * block;
  std::string img = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::string row(width, '\0');
  for (auto i : verbs) {
    for (std::size_t c = 0; c < nouns.size(); ++c) {
      double level = std::round(255.0 * std::log1p(static_cast<double>(m.at(i, nouns[c]))) / scale);
      std::fill_n(row.begin() + static_cast<std::ptrdiff_t>(c * block), block,
                  static_cast<char>(static_cast<unsigned char>(level)));
    }
    for (std::size_t r = 0; r < block; ++r) img += row;
  }
  return img;
}

}  // namespace cauda::cooccur
