#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cauda/cooccur.hpp"
#include "cauda/metrics.hpp"
#include "cauda/model.hpp"

namespace cauda::train {

/// Synthetic two-domain action data. Each admissible pair (i, j) has the
/// prototype verb_proto[i] + noun_proto[j] (entries ~ N(0, proto_scale^2));
/// frames add N(0, noise_sigma^2) noise, and target frames are translated by
/// `shift` along one fixed random unit direction.
struct SyntheticConfig {
  std::size_t verbs = 12;
  std::size_t nouns = 20;
  std::size_t valid_pairs = 40;
  std::size_t feature_dim = 16;
  std::size_t min_frames = 4;
  std::size_t max_frames = 8;
  std::size_t n_source = 480;
  std::size_t n_target = 240;
  double shift = 1.0;
  double noise_sigma = 2.0;
  double proto_scale = 2.0;
  /// Fraction of target samples drawn from admissible pairs that never occur
  /// in the source domain.
  double unseen_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

using Dataset = std::vector<model::FrameFeatures>;

struct SyntheticData {
  Dataset source;
  Dataset target;
  /// Every admissible pair, including the held-out ones.
  cooccur::ValidityMask truth;
  /// Admissible pairs excluded from source sampling, row-major cell indices.
  std::vector<std::size_t> held_out;
};

SyntheticData gen_synthetic(const SyntheticConfig& cfg);

/// Labels of a dataset as annotation records (uid, verb, noun); unlabeled
/// samples are skipped.
std::vector<cooccur::Annotation> annotations_of(const Dataset& data);

struct TrainConfig {
  std::size_t epochs = 30;
  double lr0 = 3e-3;
  /// 1-based epochs from which the rate is divided by `lr_factor` again.
  std::vector<std::size_t> lr_drops{10, 20};
  double lr_factor = 10.0;
  std::size_t batch = 32;
  model::ModelConfig model;
  logic::Semantics semantics;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  /// Learning rate used throughout 1-based `epoch`.
  double lr_at(std::size_t epoch) const;
};

/// Mean per-step loss terms for one epoch, plus the target evaluation that
/// followed it.
struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  double verb = 0.0;
  double noun = 0.0;
  double domain = 0.0;
  double logic = 0.0;
  Metrics target;
};

struct EvalMasks {
  /// Applied to action scores before ranking.
  const cooccur::ValidityMask* refine = nullptr;
  /// Defines invalid pairs for invalid_rate; defaults to `refine`.
  const cooccur::ValidityMask* judge = nullptr;
};

struct TrainResult {
  ad::ParameterSet checkpoint;
  Metrics initial;
  Metrics final_metrics;
  std::vector<EpochRecord> history;
};

/// Branch scores from the heads; action scores are the outer product, or its
/// refinement when `masks.refine` is set.
Metrics evaluate(const model::AdaptModel& model, const Dataset& data, EvalMasks masks = {});

/// Plain SGD over source batches, each paired with an equally sized slice of
/// target samples (cycled). Target labels are never read during training.
/// `constraints` may be null (no logic term). Zero epochs returns the
/// untrained model's metrics.
TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const logic::ConstraintSet* constraints, EvalMasks eval_masks = {});

/// Experiment file: {"name": ..., "synthetic": {...}, "train": {..., "model": {...}}}.
struct Experiment {
  std::string name = "experiment";
  SyntheticConfig synthetic;
  TrainConfig train;
  /// "valid" or "invalid", for constraints derived from source labels.
  logic::ConstraintMode constraint_mode = logic::ConstraintMode::ValidDisjunction;
};

/// Throws ConfigError on schema problems and ParseError on malformed JSON.
Experiment parse_experiment(const std::string& json_text);
std::string experiment_to_json(const Experiment& e);

/// Per-epoch CSV: epoch,lr,total,verb,noun,domain,logic,<target metrics>.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace cauda::train
