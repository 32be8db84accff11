#include "cauda/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "cauda/error.hpp"
#include "io_util.hpp"

namespace cauda::ad {

namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Parameter& ParameterSet::add(const std::string& name, Tensor value, bool trainable) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  auto [it, _] = params_.emplace(name, Parameter(name, std::move(value), trainable));
  return it->second;
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return it->second;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return it->second;
}

void ParameterSet::zero_grads() {
  for (auto& [_, p] : params_) p.zero_grad();
}

bool ParameterSet::same_values(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (const auto& [name, p] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end() || !(it->second.value == p.value)) return false;
  }
  return true;
}

const Tensor& Value::data() const { return graph_->data_of(id_); }
const Tensor& Value::grad() const { return graph_->grad_of(id_); }

Value Graph::constant(Tensor data) { return record(std::move(data), {}, nullptr); }

Value Graph::parameter(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return Value(this, it->second);
  Value v = record(p.value, {}, nullptr);
  nodes_[v.id()].param = &p;
  bound_.emplace(&p, v.id());
  return v;
}

Value Graph::record(Tensor data, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.grad = Tensor(data.rows(), data.cols());
  n.data = std::move(data);
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Value(this, nodes_.size() - 1);
}

void Graph::check_owned(const Value& v) const {
  if (&v.graph() != this) throw ShapeMismatch("value belongs to a different graph");
}

void Graph::backward(const Value& loss) {
  check_owned(loss);
  const Tensor& out = data_of(loss.id());
  if (out.rows() != 1 || out.cols() != 1)
    throw NonScalarLoss("backward needs a 1x1 loss, got " + shape_str(out));

  std::vector<char> reachable(nodes_.size(), 0);
  reachable[loss.id()] = 1;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (auto in : nodes_[id].inputs) reachable[in] = 1;
  }
  for (std::size_t id = 0; id <= loss.id(); ++id)
    if (reachable[id]) nodes_[id].grad.fill(0.0);
  nodes_[loss.id()].grad(0, 0) = 1.0;

  last_visits_ = 0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    ++last_visits_;
    Node& n = nodes_[id];
    if (n.backward) n.backward(*this, id);
    if (n.param) n.param->grad.add(n.grad);
  }
}

namespace {

Graph& common_graph(std::initializer_list<const Value*> values) {
  Graph& g = values.begin()[0]->graph();
  for (auto* v : values) g.check_owned(*v);
  return g;
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  Graph& g = common_graph({&a, &b});
  const Tensor& x = a.data();
  const Tensor& y = b.data();
  if (x.cols() != y.rows())
    throw ShapeMismatch("matmul " + shape_str(x) + " by " + shape_str(y));
  Tensor out(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) {
      double xik = x(i, k);
      for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) += xik * y(k, j);
    }
  std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    const Tensor& x = g.data_of(ia);
    const Tensor& y = g.data_of(ib);
    Tensor& gx = g.grad_of(ia);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t k = 0; k < x.cols(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) acc += go(i, j) * y(k, j);
        gx(i, k) += acc;
      }
    Tensor& gy = g.grad_of(ib);
    for (std::size_t k = 0; k < y.rows(); ++k)
      for (std::size_t j = 0; j < y.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) acc += x(i, k) * go(i, j);
        gy(k, j) += acc;
      }
  });
}

Value linear(const Value& x, const Value& w, const Value& bias) {
  Graph& g = common_graph({&x, &w, &bias});
  const Tensor& b = bias.data();
  if (b.rows() != 1 || b.cols() != w.data().cols())
    throw ShapeMismatch("bias " + shape_str(b) + " does not match weight " + shape_str(w.data()));
  Value prod = matmul(x, w);
  Tensor out = prod.data();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b(0, j);
  std::size_t ip = prod.id(), ib = bias.id();
  return g.record(std::move(out), {ip, ib}, [ip, ib](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    g.grad_of(ip).add(go);
    Tensor& gb = g.grad_of(ib);
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) gb(0, j) += go(i, j);
  });
}

Value relu(const Value& x) {
  Graph& g = x.graph();
  Tensor out = x.data();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  std::size_t ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    const Tensor& in = g.data_of(ix);
    Tensor& gx = g.grad_of(ix);
    for (std::size_t k = 0; k < in.size(); ++k)
      if (in[k] > 0.0) gx[k] += go[k];
  });
}

Value mean_pool(const Value& x) {
  Graph& g = x.graph();
  const Tensor& in = x.data();
  if (in.rows() == 0) throw ShapeMismatch("mean_pool over zero rows");
  Tensor out(1, in.cols());
  for (std::size_t i = 0; i < in.rows(); ++i)
    for (std::size_t j = 0; j < in.cols(); ++j) out(0, j) += in(i, j);
  const double n = static_cast<double>(in.rows());
  for (auto& v : out.values()) v /= n;
  std::size_t ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    Tensor& gx = g.grad_of(ix);
    const double n = static_cast<double>(gx.rows());
    for (std::size_t i = 0; i < gx.rows(); ++i)
      for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) += go(0, j) / n;
  });
}

Value softmax(const Value& x) {
  Graph& g = x.graph();
  const Tensor& in = x.data();
  if (in.cols() == 0) throw ShapeMismatch("softmax over zero columns");
  Tensor out(in.rows(), in.cols());
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double peak = in(i, 0);
    for (std::size_t j = 1; j < in.cols(); ++j) peak = std::max(peak, in(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < in.cols(); ++j) total += out(i, j) = std::exp(in(i, j) - peak);
    for (std::size_t j = 0; j < in.cols(); ++j) out(i, j) /= total;
  }
  std::size_t ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    const Tensor& p = g.data_of(self);
    Tensor& gx = g.grad_of(ix);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) dot += go(i, j) * p(i, j);
      for (std::size_t j = 0; j < p.cols(); ++j) gx(i, j) += p(i, j) * (go(i, j) - dot);
    }
  });
}

Value cross_entropy(const Value& probs, std::size_t label) {
  constexpr double kClamp = 1e-12;
  Graph& g = probs.graph();
  const Tensor& p = probs.data();
  if (p.rows() != 1) throw ShapeMismatch("cross_entropy expects a single row, got " + shape_str(p));
  if (label >= p.cols())
    throw ShapeMismatch("label " + std::to_string(label) + " outside " + std::to_string(p.cols()) +
                        " classes");
  double q = p(0, label);
  Tensor out(1, 1, -std::log(std::max(q, kClamp)));
  std::size_t ip = probs.id();
  return g.record(std::move(out), {ip}, [ip, label](Graph& g, std::size_t self) {
    double q = g.data_of(ip)(0, label);
    if (q > kClamp) g.grad_of(ip)(0, label) -= g.grad_of(self)(0, 0) / q;
  });
}

Value sum(const Value& x) {
  Graph& g = x.graph();
  double total = 0.0;
  for (double v : x.data().values()) total += v;
  std::size_t ix = x.id();
  return g.record(Tensor(1, 1, total), {ix}, [ix](Graph& g, std::size_t self) {
    double go = g.grad_of(self)(0, 0);
    for (auto& v : g.grad_of(ix).values()) v += go;
  });
}

Value scalar_combine(const std::vector<std::pair<double, Value>>& terms) {
  if (terms.empty()) throw ShapeMismatch("scalar_combine needs at least one term");
  Graph& g = terms.front().second.graph();
  double total = 0.0;
  std::vector<std::size_t> ids;
  std::vector<double> weights;
  for (const auto& [w, v] : terms) {
    g.check_owned(v);
    if (v.rows() != 1 || v.cols() != 1)
      throw ShapeMismatch("scalar_combine term is " + shape_str(v.data()));
    total += w * v.item();
    ids.push_back(v.id());
    weights.push_back(w);
  }
  auto inputs = ids;
  return g.record(Tensor(1, 1, total), std::move(inputs),
                  [ids, weights](Graph& g, std::size_t self) {
                    double go = g.grad_of(self)(0, 0);
                    for (std::size_t k = 0; k < ids.size(); ++k)
                      g.grad_of(ids[k])(0, 0) += weights[k] * go;
                  });
}

Value grl(const Value& x, double lambda) {
  Graph& g = x.graph();
  std::size_t ix = x.id();
  return g.record(x.data(), {ix}, [ix, lambda](Graph& g, std::size_t self) {
    const Tensor& go = g.grad_of(self);
    Tensor& gx = g.grad_of(ix);
    for (std::size_t k = 0; k < go.size(); ++k) gx[k] += -lambda * go[k];
  });
}

std::string checkpoint_to_json(const ParameterSet& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, p] : params) {
    j[name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"data", p.value.storage()}};
  }
  return j.dump() + "\n";
}

ParameterSet checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "checkpoint must be a JSON object");
  ParameterSet out;
  for (const auto& [name, entry] : j.items()) {
    try {
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      auto data = entry.at("data").get<std::vector<double>>();
      if (shape.size() != 2) throw ParseError(0, "parameter '" + name + "' shape must have 2 entries");
      out.add(name, Tensor(shape[0], shape[1], std::move(data)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, "parameter '" + name + "': " + e.what());
    } catch (const ShapeMismatch& e) {
      throw ParseError(0, "parameter '" + name + "': " + e.what());
    }
  }
  return out;
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  detail::write_file(path, checkpoint_to_json(params));
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(detail::read_file(path));
}

}  // namespace cauda::ad
