#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cauda/tensor.hpp"

namespace cauda::ad {

/// Named trainable tensor with its accumulated gradient. Gradients add up
/// across backward passes until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()), trainable(train) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Parameters keyed by unique name, iterated in name order.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value, bool trainable = true);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const noexcept { return params_.size(); }

  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Values only; gradients and trainable flags are not compared.
  bool same_values(const ParameterSet& other) const;

 private:
  std::map<std::string, Parameter> params_;
};

class Graph;

/// Handle to a node recorded on a Graph. Cheap to copy; valid while the graph
/// lives.
class Value {
 public:
  const Tensor& data() const;
  const Tensor& grad() const;
  std::size_t id() const noexcept { return id_; }
  Graph& graph() const noexcept { return *graph_; }
  std::size_t rows() const { return data().rows(); }
  std::size_t cols() const { return data().cols(); }
  /// Entry (0,0); convenient for 1 x 1 results.
  double item() const { return data()(0, 0); }

 private:
  friend class Graph;
  Value(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_;
  std::size_t id_;
};

/// Tape of operations for one forward/backward pass. Node ids increase in
/// creation order, which is a topological order of the DAG.
class Graph {
 public:
  /// Adds this node's contribution to the gradients of its inputs, reading
  /// this node's gradient from `g.grad_of(self)`.
  using BackwardFn = std::function<void(Graph& g, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value constant(Tensor data);
  /// One node per parameter per graph; repeated binds return the same node.
  Value parameter(Parameter& p);

  Value record(Tensor data, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse sweep from a 1 x 1 `loss`. Node gradients are recomputed from
  /// scratch on every call; parameter gradients accumulate.
  void backward(const Value& loss);

  const Tensor& data_of(std::size_t id) const { return nodes_.at(id).data; }
  const Tensor& grad_of(std::size_t id) const { return nodes_.at(id).grad; }
  Tensor& grad_of(std::size_t id) { return nodes_.at(id).grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Nodes whose backward rule ran during the last backward().
  std::size_t last_visit_count() const noexcept { return last_visits_; }

  void check_owned(const Value& v) const;

 private:
  struct Node {
    Tensor data;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> bound_;
  std::size_t last_visits_ = 0;
};

// Operations. All throw ShapeMismatch on incompatible shapes.

Value matmul(const Value& a, const Value& b);
/// x[b x d] . w[d x k] + bias[1 x k] broadcast over rows.
Value linear(const Value& x, const Value& w, const Value& bias);
Value relu(const Value& x);
/// Column means: [T x d] -> [1 x d].
Value mean_pool(const Value& x);
/// Row-wise, max-shifted.
Value softmax(const Value& x);
/// -log(max(probs[0][label], 1e-12)) for a 1 x k row of probabilities.
Value cross_entropy(const Value& probs, std::size_t label);
/// Sum of all entries -> 1 x 1.
Value sum(const Value& x);
/// sum_k weight_k * term_k over 1 x 1 terms.
Value scalar_combine(const std::vector<std::pair<double, Value>>& terms);
/// Identity forward; backward multiplies the incoming gradient by -lambda.
Value grl(const Value& x, double lambda);

/// JSON object name -> {"shape": [rows, cols], "data": [row-major values]}.
std::string checkpoint_to_json(const ParameterSet& params);
ParameterSet checkpoint_from_json(const std::string& text);
void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace cauda::ad
