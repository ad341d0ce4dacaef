#include "intentsieve/tensor.hpp"

#include <cmath>
#include <sstream>

#include "intentsieve/error.hpp"

namespace isv::nn {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  values_.assign(static_cast<std::size_t>(numel_), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != numel_)
    throw ShapeError("value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_str());
}

std::int64_t Tensor::offset(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank())
    throw ShapeError("index rank mismatch for shape " + shape_str());
  std::int64_t off = 0;
  auto it = idx.begin();
  for (std::size_t d = 0; d < shape_.size(); ++d, ++it) {
    off = off * shape_[d] + *it;
  }
  return off;
}

double& Tensor::at(std::initializer_list<int> idx) {
  return values_[static_cast<std::size_t>(offset(idx))];
}

double Tensor::at(std::initializer_list<int> idx) const {
  return values_[static_cast<std::size_t>(offset(idx))];
}

void Tensor::ensure_grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad_.empty()) grad_.assign(grad_.size(), 0.0);
}

void Tensor::fill(double v) { values_.assign(values_.size(), v); }

void Tensor::reshape(std::vector<int> shape) {
  if (shape_numel(shape) != numel_)
    throw ShapeError("reshape from " + shape_str() + " changes element count");
  shape_ = std::move(shape);
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ", ";
    os << shape_[i];
  }
  os << ')';
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace isv::nn
