#include "strata/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strata {

namespace {
void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive: " + shape_string(shape));
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_))
    throw std::invalid_argument("tensor data length does not match shape " + shape_string(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : data_.size() / shape_[0];
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  if (!on) grad_.clear();
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

bool Tensor::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(data_.begin(), data_.end(), finite) &&
         std::all_of(grad_.begin(), grad_.end(), finite);
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace strata
