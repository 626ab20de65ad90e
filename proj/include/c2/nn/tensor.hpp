#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace c2::nn {

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  static std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  const std::vector<int>& shape() const noexcept { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const noexcept;

  /// Rounds every element through 32-bit storage.
  Tensor to_f32_precision() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Views a tensor of shape [rows, cols] (or any shape with the given split).
inline MatrixMap as_matrix(Tensor& t, int rows, int cols) { return MatrixMap(t.data(), rows, cols); }
inline ConstMatrixMap as_matrix(const Tensor& t, int rows, int cols) { return ConstMatrixMap(t.data(), rows, cols); }

/// A named learnable tensor.
struct Parameter {
  std::string name;
  Tensor value;
};

/// Gradients aligned index-for-index with a parameter list.
using Gradients = std::vector<Tensor>;

Gradients zeros_like(std::span<const Parameter* const> params);
double global_norm(const Gradients& grads);
void accumulate(Gradients& into, const Gradients& from, double scale = 1.0);

}  // namespace c2::nn
