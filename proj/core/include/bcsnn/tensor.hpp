#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bcsnn {

/// Dense row-major tensor of doubles. The single value type used throughout
/// the engine; shapes are small vectors of extents, e.g. {N, C, H, W}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, double fill_value);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Same storage reinterpreted under a new shape; element count must match.
  Tensor reshaped(std::vector<int> new_shape) const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

/// True when every element is finite (no NaN/Inf).
bool all_finite(const Tensor& t);

}  // namespace bcsnn
