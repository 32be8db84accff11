#include "cauda/tensor.hpp"

#include <algorithm>
#include <string>

#include "cauda/error.hpp"

namespace cauda::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeMismatch("tensor " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " cannot hold " + std::to_string(data_.size()) + " values");
}

Tensor Tensor::row(std::vector<double> values) {
  auto n = values.size();
  return Tensor(1, n, std::move(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
  if (!same_shape(other)) throw ShapeMismatch("tensor add with mismatched shapes");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
}

}  // namespace cauda::ad
