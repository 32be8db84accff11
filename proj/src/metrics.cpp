#include "cauda/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "cauda/error.hpp"
#include "io_util.hpp"

namespace cauda::train {

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

namespace {

bool in_top(std::span<const double> scores, std::size_t k, std::size_t target) {
  auto top = top_k(scores, k);
  return std::find(top.begin(), top.end(), target) != top.end();
}

}  // namespace

Metrics score_predictions(const std::vector<SamplePrediction>& preds,
                          const std::vector<model::ActionLabel>& labels,
                          const cooccur::ValidityMask* judge) {
  if (preds.size() != labels.size())
    throw DimensionMismatch(std::to_string(preds.size()) + " predictions but " +
                            std::to_string(labels.size()) + " labels");
  Metrics m;
  m.samples = preds.size();
  if (preds.empty()) return m;
  std::size_t v1 = 0, v5 = 0, n1 = 0, n5 = 0, a1 = 0, a5 = 0, invalid = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto& p = preds[s];
    const auto& y = labels[s];
    if (y.verb >= p.verb_scores.size() || y.noun >= p.noun_scores.size() ||
        p.action.verbs != p.verb_scores.size() || p.action.nouns != p.noun_scores.size())
      throw DimensionMismatch("sample " + std::to_string(s) + " does not match its label vocabulary");
    v1 += in_top(p.verb_scores, 1, y.verb);
    v5 += in_top(p.verb_scores, 5, y.verb);
    n1 += in_top(p.noun_scores, 1, y.noun);
    n5 += in_top(p.noun_scores, 5, y.noun);
    const std::size_t cell = static_cast<std::size_t>(y.verb) * p.action.nouns + y.noun;
    auto top = top_k(p.action.scores, 5);
    a1 += top.front() == cell;
    a5 += std::find(top.begin(), top.end(), cell) != top.end();
    if (judge) {
      std::size_t best = top.front();
      invalid += !judge->valid(best / p.action.nouns, best % p.action.nouns);
    }
  }
  const double n = static_cast<double>(preds.size());
  m.verb_top1 = static_cast<double>(v1) / n;
  m.verb_top5 = static_cast<double>(v5) / n;
  m.noun_top1 = static_cast<double>(n1) / n;
  m.noun_top5 = static_cast<double>(n5) / n;
  m.action_top1 = static_cast<double>(a1) / n;
  m.action_top5 = static_cast<double>(a5) / n;
  m.invalid_rate = static_cast<double>(invalid) / n;
  return m;
}

namespace {

constexpr const char* kCsvHeader =
    "method,verb_top1,noun_top1,action_top1,verb_top5,noun_top5,action_top5,invalid_rate,samples";

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  using detail::format_double;
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    if (r.method.find_first_of(",\n\r") != std::string::npos)
      throw ConfigError("method name '" + r.method + "' may not contain commas or newlines");
    const auto& m = r.metrics;
    out += r.method + "," + format_double(m.verb_top1) + "," + format_double(m.noun_top1) + "," +
           format_double(m.action_top1) + "," + format_double(m.verb_top5) + "," +
           format_double(m.noun_top5) + "," + format_double(m.action_top5) + "," +
           format_double(m.invalid_rate) + "," + std::to_string(m.samples) + "\n";
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != kCsvHeader) throw ParseError(1, "unexpected report header");
  std::vector<ReportRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    auto f = detail::split(lines[k], ',');
    if (f.size() != 9) throw ParseError(k + 1, "expected 9 fields");
    ReportRow r;
    r.method = std::string(f[0]);
    double* slots[] = {&r.metrics.verb_top1, &r.metrics.noun_top1, &r.metrics.action_top1,
                       &r.metrics.verb_top5, &r.metrics.noun_top5, &r.metrics.action_top5,
                       &r.metrics.invalid_rate};
    for (std::size_t c = 0; c < 7; ++c)
      if (!detail::parse_double(f[c + 1], *slots[c])) throw ParseError(k + 1, "bad number");
    unsigned long long n = 0;
    if (!detail::parse_u64(f[8], n)) throw ParseError(k + 1, "bad sample count");
    r.metrics.samples = static_cast<std::size_t>(n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string report_markdown(const std::vector<ReportRow>& rows, const std::string& title) {
  std::string out = "# " + title + "\n\n";
  out += "| Method | Verb top-1 | Noun top-1 | Action top-1 | Verb top-5 | Noun top-5 | "
         "Action top-5 | Invalid rate |\n";
  out += "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += "| " + r.method + " | " + pct(m.verb_top1) + " | " + pct(m.noun_top1) + " | " +
           pct(m.action_top1) + " | " + pct(m.verb_top5) + " | " + pct(m.noun_top5) + " | " +
           pct(m.action_top5) + " | " + pct(m.invalid_rate) + " |\n";
  }
  return out;
}

void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& csv_path,
                  const std::filesystem::path& markdown_path, const std::string& title) {
  detail::write_file(csv_path, report_csv(rows));
  detail::write_file(markdown_path, report_markdown(rows, title));
}

}  // namespace cauda::train
