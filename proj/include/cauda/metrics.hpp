#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cauda/cooccur.hpp"
#include "cauda/model.hpp"

namespace cauda::train {

/// Top-1/top-5 accuracies in [0,1] and the fraction of top-1 action
/// predictions that land on pairs the judging mask calls invalid.
struct Metrics {
  double verb_top1 = 0.0;
  double noun_top1 = 0.0;
  double action_top1 = 0.0;
  double verb_top5 = 0.0;
  double noun_top5 = 0.0;
  double action_top5 = 0.0;
  double invalid_rate = 0.0;
  std::size_t samples = 0;

  bool operator==(const Metrics&) const = default;
};

/// Scores for one sample: branch scores plus the V x N action table.
struct SamplePrediction {
  std::vector<double> verb_scores;
  std::vector<double> noun_scores;
  cooccur::ActionScores action;
};

/// Indices of the k largest scores, highest first; equal scores rank the
/// lower index first. k is capped at the number of scores.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

/// Accuracy of `preds` against `labels`; an action is correct only when the
/// predicted (verb, noun) pair equals the label. `judge` (optional) defines
/// invalid pairs for invalid_rate.
Metrics score_predictions(const std::vector<SamplePrediction>& preds,
                          const std::vector<model::ActionLabel>& labels,
                          const cooccur::ValidityMask* judge);

/// One row of a results table.
struct ReportRow {
  std::string method;
  Metrics metrics;
  bool operator==(const ReportRow&) const = default;
};

/// CSV: method,verb_top1,noun_top1,action_top1,verb_top5,noun_top5,
/// action_top5,invalid_rate,samples with round-trip-exact numbers.
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);
/// Markdown table in percent, two decimals.
std::string report_markdown(const std::vector<ReportRow>& rows, const std::string& title);

void write_report(const std::vector<ReportRow>& rows, const std::filesystem::path& csv_path,
                  const std::filesystem::path& markdown_path, const std::string& title = "Results");

}  // namespace cauda::train
