#pragma once

#include <span>
#include <string>
#include <vector>

#include "c2/core/rng.hpp"
#include "c2/nn/tensor.hpp"

namespace c2::nn {

/// Standard normal draw (Box-Muller over the project generator).
double normal(Rng& rng);

/// Fully connected layer, weight [out, in], bias [out].
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, int in, int out);

  int in() const noexcept { return in_; }
  int out() const noexcept { return out_; }

  /// Uniform in +-scale/sqrt(in); bias zero.
  void init(Rng& rng, double scale = 1.0);

  /// X [rows, in] -> Y [rows, out].
  void forward(const RowMatrix& x, RowMatrix& y) const;

  /// Accumulates parameter gradients; writes dX when `dx` is non-null.
  void backward(const RowMatrix& x, const RowMatrix& dy, Tensor& dw, Tensor& db, RowMatrix* dx) const;

  Parameter weight;
  Parameter bias;

 private:
  int in_ = 0;
  int out_ = 0;
};

/// Stride-1 same-padding convolution. Weight [out_c, in_c * k * k].
class Conv2D {
 public:
  Conv2D() = default;
  Conv2D(const std::string& name, int in_channels, int out_channels, int kernel, int height, int width);

  int in_channels() const noexcept { return in_c_; }
  int out_channels() const noexcept { return out_c_; }
  int kernel() const noexcept { return k_; }
  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }

  void init(Rng& rng);

  /// x: [in_c * h * w] planar. Fills `cols` (im2col) and y [out_c, h * w].
  void forward(std::span<const double> x, RowMatrix& cols, RowMatrix& y) const;

  /// Accumulates parameter gradients; writes dx [in_c * h * w] when non-empty.
  void backward(const RowMatrix& cols, const RowMatrix& dy, Tensor& dw, Tensor& db, std::span<double> dx) const;

  Parameter weight;
  Parameter bias;

 private:
  int in_c_ = 0;
  int out_c_ = 0;
  int k_ = 0;
  int h_ = 0;
  int w_ = 0;
};

/// Long short-term memory cell with gate blocks ordered (input, forget,
/// cell candidate, output). wx [4H, in], wh [4H, H], bias [4H].
class Lstm {
 public:
  struct StepCache {
    Eigen::VectorXd x, h_prev, c_prev, i, f, g, o, c, tanh_c;
  };

  Lstm() = default;
  Lstm(const std::string& name, int in, int hidden);

  int in() const noexcept { return in_; }
  int hidden() const noexcept { return hidden_; }

  /// Fan-in uniform input weights, orthogonal recurrent blocks, forget bias 1.
  void init(Rng& rng);

  /// Advances (h, c) by one input; records intermediates when cache != null.
  void step(const Eigen::VectorXd& x, Eigen::VectorXd& h, Eigen::VectorXd& c, StepCache* cache) const;

  /// Backpropagates one step. dh / dc are the gradients arriving at this
  /// step's outputs; dh_prev / dc_prev receive gradients for its inputs.
  void backward_step(const StepCache& cache, const Eigen::VectorXd& dh, const Eigen::VectorXd& dc, Tensor& dwx,
                     Tensor& dwh, Tensor& db, Eigen::VectorXd& dx, Eigen::VectorXd& dh_prev,
                     Eigen::VectorXd& dc_prev) const;

  Parameter wx;
  Parameter wh;
  Parameter bias;

 private:
  int in_ = 0;
  int hidden_ = 0;
};

void tanh_inplace(RowMatrix& m);
void relu_inplace(RowMatrix& m);
/// dy -> dx given the activation's output y.
void tanh_backward(const RowMatrix& y, RowMatrix& grad);
void relu_backward(const RowMatrix& y, RowMatrix& grad);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double entropy(std::span<const double> probs);

}  // namespace c2::nn
