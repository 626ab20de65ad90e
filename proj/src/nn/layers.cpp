#include "c2/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

namespace c2::nn {

double normal(Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

void fill_uniform(Tensor& t, Rng& rng, double bound) {
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ----------------------------------------------------------------- Dense

Dense::Dense(const std::string& name, int in, int out)
    : weight{name + ".weight", Tensor({out, in})}, bias{name + ".bias", Tensor({out})}, in_(in), out_(out) {}

void Dense::init(Rng& rng, double scale) {
  fill_uniform(weight.value, rng, scale / std::sqrt(static_cast<double>(in_)));
  bias.value.fill(0.0);
}

void Dense::forward(const RowMatrix& x, RowMatrix& y) const {
  if (x.cols() != in_) {
    throw std::invalid_argument(weight.name + ": expected input width " + std::to_string(in_) + ", got " +
                                std::to_string(x.cols()));
  }
  const auto w = as_matrix(weight.value, out_, in_);
  const ConstVectorMap b(bias.value.data(), out_);
  y.noalias() = x * w.transpose();
  y.rowwise() += b.transpose();
}

void Dense::backward(const RowMatrix& x, const RowMatrix& dy, Tensor& dw, Tensor& db, RowMatrix* dx) const {
  auto gw = as_matrix(dw, out_, in_);
  VectorMap gb(db.data(), out_);
  gw.noalias() += dy.transpose() * x;
  gb += dy.colwise().sum().transpose();
  if (dx) {
    const auto w = as_matrix(weight.value, out_, in_);
    dx->noalias() = dy * w;
  }
}

// ----------------------------------------------------------------- Conv2D

Conv2D::Conv2D(const std::string& name, int in_channels, int out_channels, int kernel, int height, int width)
    : weight{name + ".weight", Tensor({out_channels, in_channels * kernel * kernel})},
      bias{name + ".bias", Tensor({out_channels})},
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      h_(height),
      w_(width) {
  if (kernel % 2 == 0) throw std::invalid_argument(name + ": same padding needs an odd kernel");
}

void Conv2D::init(Rng& rng) {
  fill_uniform(weight.value, rng, 1.0 / std::sqrt(static_cast<double>(in_c_ * k_ * k_)));
  bias.value.fill(0.0);
}

void Conv2D::forward(std::span<const double> x, RowMatrix& cols, RowMatrix& y) const {
  const int plane = h_ * w_;
  if (static_cast<int>(x.size()) != in_c_ * plane) {
    throw std::invalid_argument(weight.name + ": expected input of " + std::to_string(in_c_ * plane) +
                                " values, got " + std::to_string(x.size()));
  }
  const int pad = k_ / 2;
  cols.setZero(in_c_ * k_ * k_, plane);
  for (int c = 0; c < in_c_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int row = (c * k_ + ky) * k_ + kx;
        for (int yy = 0; yy < h_; ++yy) {
          const int sy = yy + ky - pad;
          if (sy < 0 || sy >= h_) continue;
          for (int xx = 0; xx < w_; ++xx) {
            const int sx = xx + kx - pad;
            if (sx < 0 || sx >= w_) continue;
            cols(row, yy * w_ + xx) = x[(c * h_ + sy) * w_ + sx];
          }
        }
      }
    }
  }
  const auto w = as_matrix(weight.value, out_c_, in_c_ * k_ * k_);
  const ConstVectorMap b(bias.value.data(), out_c_);
  y.noalias() = w * cols;
  y.colwise() += b;
}

void Conv2D::backward(const RowMatrix& cols, const RowMatrix& dy, Tensor& dw, Tensor& db, std::span<double> dx) const {
  auto gw = as_matrix(dw, out_c_, in_c_ * k_ * k_);
  VectorMap gb(db.data(), out_c_);
  gw.noalias() += dy * cols.transpose();
  gb += dy.rowwise().sum();
  if (dx.empty()) return;
  const auto w = as_matrix(weight.value, out_c_, in_c_ * k_ * k_);
  const RowMatrix dcols = w.transpose() * dy;
  std::fill(dx.begin(), dx.end(), 0.0);
  const int pad = k_ / 2;
  for (int c = 0; c < in_c_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int row = (c * k_ + ky) * k_ + kx;
        for (int yy = 0; yy < h_; ++yy) {
          const int sy = yy + ky - pad;
          if (sy < 0 || sy >= h_) continue;
          for (int xx = 0; xx < w_; ++xx) {
            const int sx = xx + kx - pad;
            if (sx < 0 || sx >= w_) continue;
            dx[(c * h_ + sy) * w_ + sx] += dcols(row, yy * w_ + xx);
          }
        }
      }
    }
  }
}

// ----------------------------------------------------------------- Lstm

Lstm::Lstm(const std::string& name, int in, int hidden)
    : wx{name + ".wx", Tensor({4 * hidden, in})},
      wh{name + ".wh", Tensor({4 * hidden, hidden})},
      bias{name + ".bias", Tensor({4 * hidden})},
      in_(in),
      hidden_(hidden) {}

void Lstm::init(Rng& rng) {
  fill_uniform(wx.value, rng, 1.0 / std::sqrt(static_cast<double>(in_)));
  const int h = hidden_;
  auto whm = as_matrix(wh.value, 4 * h, h);
  for (int gate = 0; gate < 4; ++gate) {
    Eigen::MatrixXd a(h, h);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < h; ++c) a(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign-correct so the distribution is uniform over orthogonal matrices.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < h; ++c) {
      if (r(c, c) < 0.0) q.col(c) *= -1.0;
    }
    whm.block(gate * h, 0, h, h) = q;
  }
  bias.value.fill(0.0);
  for (int k = h; k < 2 * h; ++k) bias.value[k] = 1.0;
}

void Lstm::step(const Eigen::VectorXd& x, Eigen::VectorXd& h, Eigen::VectorXd& c, StepCache* cache) const {
  if (x.size() != in_) {
    throw std::invalid_argument(wx.name + ": expected input width " + std::to_string(in_) + ", got " +
                                std::to_string(x.size()));
  }
  const int H = hidden_;
  const auto wxm = as_matrix(wx.value, 4 * H, in_);
  const auto whm = as_matrix(wh.value, 4 * H, H);
  const ConstVectorMap b(bias.value.data(), 4 * H);
  const Eigen::VectorXd z = wxm * x + whm * h + b;
  Eigen::VectorXd i = z.segment(0, H).unaryExpr(&sigmoid);
  Eigen::VectorXd f = z.segment(H, H).unaryExpr(&sigmoid);
  Eigen::VectorXd g = z.segment(2 * H, H).array().tanh();
  Eigen::VectorXd o = z.segment(3 * H, H).unaryExpr(&sigmoid);
  Eigen::VectorXd c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
  Eigen::VectorXd tanh_c = c_new.array().tanh();
  Eigen::VectorXd h_new = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->x = x;
    cache->h_prev = h;
    cache->c_prev = c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = c_new;
    cache->tanh_c = std::move(tanh_c);
  }
  h = std::move(h_new);
  c = std::move(c_new);
}

void Lstm::backward_step(const StepCache& s, const Eigen::VectorXd& dh, const Eigen::VectorXd& dc, Tensor& dwx,
                         Tensor& dwh, Tensor& db, Eigen::VectorXd& dx, Eigen::VectorXd& dh_prev,
                         Eigen::VectorXd& dc_prev) const {
  const int H = hidden_;
  const Eigen::ArrayXd one = Eigen::ArrayXd::Ones(H);
  const Eigen::VectorXd dc_total =
      dc + (dh.array() * s.o.array() * (one - s.tanh_c.array().square())).matrix();
  Eigen::VectorXd dz(4 * H);
  dz.segment(0, H) = (dc_total.array() * s.g.array() * s.i.array() * (one - s.i.array())).matrix();
  dz.segment(H, H) = (dc_total.array() * s.c_prev.array() * s.f.array() * (one - s.f.array())).matrix();
  dz.segment(2 * H, H) = (dc_total.array() * s.i.array() * (one - s.g.array().square())).matrix();
  dz.segment(3 * H, H) = (dh.array() * s.tanh_c.array() * s.o.array() * (one - s.o.array())).matrix();

  as_matrix(dwx, 4 * H, in_).noalias() += dz * s.x.transpose();
  as_matrix(dwh, 4 * H, H).noalias() += dz * s.h_prev.transpose();
  VectorMap(db.data(), 4 * H) += dz;

  dx.noalias() = as_matrix(wx.value, 4 * H, in_).transpose() * dz;
  dh_prev.noalias() = as_matrix(wh.value, 4 * H, H).transpose() * dz;
  dc_prev = (dc_total.array() * s.f.array()).matrix();
}

// ----------------------------------------------------------------- activations

void tanh_inplace(RowMatrix& m) { m = m.array().tanh(); }
void relu_inplace(RowMatrix& m) { m = m.cwiseMax(0.0); }

void tanh_backward(const RowMatrix& y, RowMatrix& grad) { grad.array() *= 1.0 - y.array().square(); }
void relu_backward(const RowMatrix& y, RowMatrix& grad) { grad.array() *= (y.array() > 0.0).cast<double>(); }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double m = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  for (double& v : out) v -= lse;
  return out;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

}  // namespace c2::nn
