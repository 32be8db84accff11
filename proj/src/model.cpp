#include "cauda/model.hpp"

#include <cmath>
#include <random>

#include "cauda/error.hpp"

namespace cauda::model {

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden == 0 || gcn_layers == 0 || verbs == 0 || nouns == 0)
    throw ConfigError("model dimensions, layer count and class counts must all be >= 1");
  if (!(lambda_grl >= 0.0) || !(lambda_logic >= 0.0) || !(lambda_domain >= 0.0))
    throw ConfigError("loss weights must be non-negative");
}

namespace {

struct Shape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool bias;
};

std::vector<Shape> layout(const ModelConfig& c) {
  std::vector<Shape> s{{"embed.w", c.input_dim, c.hidden, false}, {"embed.b", 1, c.hidden, true}};
  for (std::size_t l = 0; l < c.gcn_layers; ++l)
    s.push_back({"gcn." + std::to_string(l) + ".w", c.hidden, c.hidden, false});
  s.push_back({"verb.w", c.hidden, c.verbs, false});
  s.push_back({"verb.b", 1, c.verbs, true});
  s.push_back({"noun.w", c.hidden, c.nouns, false});
  s.push_back({"noun.b", 1, c.nouns, true});
  s.push_back({"domain.w", c.hidden, 2, false});
  s.push_back({"domain.b", 1, 2, true});
  return s;
}

std::vector<double> row_of(const ad::Value& v) {
  const auto& d = v.data().storage();
  return {d.begin(), d.end()};
}

}  // namespace

AdaptModel::AdaptModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  for (const auto& s : layout(config_)) {
    ad::Tensor t(s.rows, s.cols);
    if (!s.bias) {
      const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (auto& v : t.values()) v = dist(rng);
    }
    params_.add(s.name, std::move(t));
  }
}

AdaptModel::AdaptModel(ModelConfig config, ad::ParameterSet params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  auto expected = layout(config_);
  if (params_.size() != expected.size())
    throw ConfigError("checkpoint holds " + std::to_string(params_.size()) +
                      " parameters, the model needs " + std::to_string(expected.size()));
  for (const auto& s : expected) {
    if (!params_.contains(s.name)) throw ConfigError("checkpoint lacks parameter '" + s.name + "'");
    const auto& v = params_.at(s.name).value;
    if (v.rows() != s.rows || v.cols() != s.cols)
      throw ConfigError("parameter '" + s.name + "' is " + std::to_string(v.rows()) + "x" +
                        std::to_string(v.cols()) + ", expected " + std::to_string(s.rows) + "x" +
                        std::to_string(s.cols));
  }
}

ad::Value AdaptModel::encode_with(ad::Graph& g, const FrameFeatures& f, const Binder& bind) const {
  const auto& frames = f.frames;
  if (frames.rows() == 0 || frames.cols() != config_.input_dim)
    throw ShapeMismatch("sample '" + f.uid + "' has " + std::to_string(frames.rows()) + "x" +
                        std::to_string(frames.cols()) + " features, the model expects T x " +
                        std::to_string(config_.input_dim) + " with T >= 1");
  const std::size_t T = frames.rows();
  ad::Value h = ad::linear(g.constant(frames), bind("embed.w"), bind("embed.b"));
  ad::Value adjacency = g.constant(ad::Tensor(T, T, 1.0 / static_cast<double>(T)));
  for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
    h = ad::relu(ad::matmul(ad::matmul(adjacency, h), bind("gcn." + std::to_string(l) + ".w")));
  }
  return ad::mean_pool(h);
}

Heads AdaptModel::forward_with(ad::Graph& g, const FrameFeatures& f, const Binder& bind) const {
  ad::Value video = encode_with(g, f, bind);
  ad::Value verb = ad::softmax(ad::linear(video, bind("verb.w"), bind("verb.b")));
  ad::Value noun = ad::softmax(ad::linear(video, bind("noun.w"), bind("noun.b")));
  ad::Value domain_in = config_.use_grl ? ad::grl(video, config_.lambda_grl) : video;
  ad::Value domain = ad::softmax(ad::linear(domain_in, bind("domain.w"), bind("domain.b")));
  return {video, verb, noun, domain};
}

ad::Value AdaptModel::encode(ad::Graph& g, const FrameFeatures& f) {
  return encode_with(g, f, [&](const std::string& n) { return g.parameter(params_.at(n)); });
}

Heads AdaptModel::forward(ad::Graph& g, const FrameFeatures& f) {
  return forward_with(g, f, [&](const std::string& n) { return g.parameter(params_.at(n)); });
}

ModelOutput AdaptModel::predict(const FrameFeatures& f) const {
  ad::Graph g;
  Heads h = forward_with(g, f, [&](const std::string& n) { return g.constant(params_.at(n).value); });
  return {row_of(h.verb_probs), row_of(h.noun_probs), row_of(h.domain_probs)};
}

ad::Value logic_loss_node(const ad::Value& verb_probs, const ad::Value& noun_probs,
                          const logic::LogicLoss& loss) {
  ad::Graph& g = verb_probs.graph();
  g.check_owned(noun_probs);
  if (verb_probs.rows() != 1 || noun_probs.rows() != 1)
    throw ShapeMismatch("logic loss expects single-row probability vectors");
  logic::TruthAssignment t{row_of(verb_probs), row_of(noun_probs)};
  auto [value, grad] = loss.value_and_gradient(t);
  std::size_t iv = verb_probs.id(), in = noun_probs.id();
  return g.record(ad::Tensor(1, 1, value), {iv, in},
                  [iv, in, grad = std::move(grad)](ad::Graph& g, std::size_t self) {
                    double go = g.grad_of(self)(0, 0);
                    auto& gv = g.grad_of(iv);
                    for (std::size_t k = 0; k < grad.verb.size(); ++k) gv[k] += go * grad.verb[k];
                    auto& gn = g.grad_of(in);
                    for (std::size_t k = 0; k < grad.noun.size(); ++k) gn[k] += go * grad.noun[k];
                  });
}

LossBreakdown total_loss(ad::Graph& g, const std::vector<Heads>& outputs,
                         const std::vector<const FrameFeatures*>& samples,
                         const logic::LogicLoss* constraints, const ModelConfig& config) {
  if (outputs.size() != samples.size() || samples.empty())
    throw ShapeMismatch("total_loss needs one output per sample and at least one sample");
  for (const auto& h : outputs) {
    g.check_owned(h.verb_probs);
    g.check_owned(h.noun_probs);
    g.check_owned(h.domain_probs);
  }

  std::vector<std::size_t> source, logic_idx;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const FrameFeatures& s = *samples[k];
    if (s.domain == Domain::Source) {
      if (!s.label) throw MissingLabels("source sample '" + s.uid + "' has no label");
      source.push_back(k);
    }
    if (s.domain == Domain::Source || config.logic_on_target) logic_idx.push_back(k);
  }

  double verb = 0.0, noun = 0.0, domain = 0.0, logic = 0.0;
  std::vector<std::pair<double, ad::Value>> terms;
  if (!source.empty()) {
    const double w = 1.0 / static_cast<double>(source.size());
    for (auto k : source) {
      ad::Value lv = ad::cross_entropy(outputs[k].verb_probs, samples[k]->label->verb);
      ad::Value ln = ad::cross_entropy(outputs[k].noun_probs, samples[k]->label->noun);
      verb += lv.item() * w;
      noun += ln.item() * w;
      terms.emplace_back(w, lv);
      terms.emplace_back(w, ln);
    }
  }
  {
    const double w = 1.0 / static_cast<double>(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      ad::Value ld = ad::cross_entropy(outputs[k].domain_probs,
                                       static_cast<std::size_t>(samples[k]->domain));
      domain += ld.item() * w;
      terms.emplace_back(config.lambda_domain * w, ld);
    }
  }
  if (constraints && !logic_idx.empty()) {
    const double w = 1.0 / static_cast<double>(logic_idx.size());
    for (auto k : logic_idx) {
      ad::Value ll = logic_loss_node(outputs[k].verb_probs, outputs[k].noun_probs, *constraints);
      logic += ll.item() * w;
      terms.emplace_back(config.lambda_logic * w, ll);
    }
  }
  return {ad::scalar_combine(terms), verb, noun, domain, logic};
}

}  // namespace cauda::model
