#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cauda/autodiff.hpp"
#include "cauda/fuzzy.hpp"

namespace cauda::model {

enum class Domain : std::uint8_t { Source = 0, Target = 1 };

struct ActionLabel {
  std::uint32_t verb = 0;
  std::uint32_t noun = 0;
  bool operator==(const ActionLabel&) const = default;
};

/// T x d frame features of one video. Source samples carry labels; target
/// labels, when present, are only read by evaluation.
struct FrameFeatures {
  std::string uid;
  ad::Tensor frames;
  Domain domain = Domain::Source;
  std::optional<ActionLabel> label;
};

struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t hidden = 32;
  std::size_t gcn_layers = 1;
  std::size_t verbs = 0;
  std::size_t nouns = 0;
  double lambda_grl = 1.0;
  double lambda_logic = 1.0;
  double lambda_domain = 1.0;
  /// Apply the logic loss to target predictions as well as source ones.
  bool logic_on_target = true;
  /// Put the gradient-reversal layer in front of the domain head. Turning it
  /// off makes the domain head an ordinary classifier (used by tests).
  bool use_grl = true;

  /// Throws ConfigError.
  void validate() const;
};

/// Plain probabilities from one forward pass.
struct ModelOutput {
  std::vector<double> verb_probs;
  std::vector<double> noun_probs;
  std::vector<double> domain_probs;
};

/// Graph nodes produced by one forward pass.
struct Heads {
  ad::Value video;
  ad::Value verb_probs;
  ad::Value noun_probs;
  ad::Value domain_probs;
};

/// Per-term means reported alongside the combined loss.
struct LossBreakdown {
  ad::Value total;
  double verb = 0.0;
  double noun = 0.0;
  double domain = 0.0;
  double logic = 0.0;
};

/// Frame embedding, fully-connected GCN, mean pooling, verb/noun heads and a
/// domain head behind gradient reversal.
///
/// Parameters: embed.w [d x h], embed.b [1 x h], gcn.<l>.w [h x h],
/// verb.w [h x V], verb.b, noun.w [h x N], noun.b, domain.w [h x 2],
/// domain.b.
class AdaptModel {
 public:
  /// Xavier-uniform weights, zero biases, drawn from `seed`.
  AdaptModel(ModelConfig config, std::uint64_t seed);
  /// Adopts existing parameters; throws ConfigError on missing or misshapen
  /// entries.
  AdaptModel(ModelConfig config, ad::ParameterSet params);

  const ModelConfig& config() const noexcept { return config_; }
  ad::ParameterSet& parameters() noexcept { return params_; }
  const ad::ParameterSet& parameters() const noexcept { return params_; }

  /// Embed each frame, apply ReLU(A H W) per layer with A = 1/T everywhere,
  /// then average rows into a 1 x h video feature.
  ad::Value encode(ad::Graph& g, const FrameFeatures& f);
  Heads forward(ad::Graph& g, const FrameFeatures& f);

  /// Inference on a private graph; parameters are read, never written.
  ModelOutput predict(const FrameFeatures& f) const;

 private:
  using Binder = std::function<ad::Value(const std::string&)>;
  ad::Value encode_with(ad::Graph& g, const FrameFeatures& f, const Binder& bind) const;
  Heads forward_with(ad::Graph& g, const FrameFeatures& f, const Binder& bind) const;

  ModelConfig config_;
  ad::ParameterSet params_;
};

/// Graph node computing the logic loss of one sample's verb/noun rows.
ad::Value logic_loss_node(const ad::Value& verb_probs, const ad::Value& noun_probs,
                          const logic::LogicLoss& loss);

/// mean L_verb + mean L_noun over source samples
/// + lambda_domain * mean L_domain over all samples (label = domain id)
/// + lambda_logic * mean L_logic over source samples (and target samples when
///   logic_on_target). `constraints` may be null, which drops the logic term.
/// Throws MissingLabels for an unlabeled source sample.
LossBreakdown total_loss(ad::Graph& g, const std::vector<Heads>& outputs,
                         const std::vector<const FrameFeatures*>& samples,
                         const logic::LogicLoss* constraints, const ModelConfig& config);

}  // namespace cauda::model
