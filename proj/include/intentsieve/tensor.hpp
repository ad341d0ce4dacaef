#ifndef INTENTSIEVE_TENSOR_HPP
#define INTENTSIEVE_TENSOR_HPP

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace isv::nn {

/// Dense row-major n-dimensional array of doubles with an optional gradient
/// buffer of the same extent. This is the only value type the layer kit
/// operates on.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return numel_; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

  double& at(std::initializer_list<int> idx);
  double at(std::initializer_list<int> idx) const;

  bool has_grad() const { return !grad_.empty(); }
  /// Allocate (or keep) a gradient buffer; new entries start at zero.
  void ensure_grad();
  void zero_grad();
  double* grad_data() { return grad_.data(); }
  const double* grad_data() const { return grad_.data(); }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }

  void fill(double v);
  /// Reinterpret the buffer under a new shape with identical numel.
  void reshape(std::vector<int> shape);

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  /// "(a, b, c)" for error messages.
  std::string shape_str() const;

  bool all_finite() const;

 private:
  std::int64_t offset(std::initializer_list<int> idx) const;

  std::vector<int> shape_;
  std::int64_t numel_ = 0;
  std::vector<double> values_;
  std::vector<double> grad_;
};

/// Named trainable tensor. Names are unique within a model and key the
/// checkpoint manifest.
struct Parameter {
  Tensor tensor;
  std::string name;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string name_, std::vector<int> shape)
      : tensor(std::move(shape)), name(std::move(name_)) {
    tensor.ensure_grad();
  }
};

std::int64_t shape_numel(const std::vector<int>& shape);

}  // namespace isv::nn

#endif  // INTENTSIEVE_TENSOR_HPP
