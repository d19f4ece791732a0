#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "wconv/nn.hpp"

namespace wconv {

BatchNorm2d::BatchNorm2d(std::size_t channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(Tensor::ones({channels})),
      beta_({channels}),
      grad_gamma_({channels}),
      grad_beta_({channels}),
      running_mean_({channels}),
      running_var_(Tensor::ones({channels})) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("batchnorm momentum must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("batchnorm eps must be positive");
}

std::string BatchNorm2d::describe() const {
  return fmt::format("batchnorm2d channels={} momentum={} eps={}", channels_, momentum_, eps_);
}

std::vector<ParamRef> BatchNorm2d::parameters() {
  return {{"gamma", &gamma_, &grad_gamma_}, {"beta", &beta_, &grad_beta_}};
}

std::vector<BufferRef> BatchNorm2d::buffers() {
  return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  if (x.rank() != 4 || x.extent(1) != channels_) {
    throw ShapeError(fmt::format("batchnorm2d expects [B, {}, H, W], got {}", channels_, to_string(x.shape())));
  }
  const std::size_t b = x.extent(0), hw = x.extent(2) * x.extent(3);
  const std::size_t count = b * hw;
  Tensor xhat(x.shape());
  Tensor y(x.shape());
  inv_std_.assign(channels_, 0.0);
  last_mode_ = mode;

  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t n = 0; n < b; ++n) {
        const double* p = x.data().data() + (n * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      mean = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t n = 0; n < b; ++n) {
        const double* p = x.data().data() + (n * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / static_cast<double>(count);
      const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
      running_mean_[c] = momentum_ * running_mean_[c] + (1.0 - momentum_) * mean;
      running_var_[c] = momentum_ * running_var_[c] + (1.0 - momentum_) * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    for (std::size_t n = 0; n < b; ++n) {
      const std::size_t base = (n * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double h = (x[base + i] - mean) * inv;
        xhat[base + i] = h;
        y[base + i] = gamma_[c] * h + beta_[c];
      }
    }
  }
  xhat_ = std::move(xhat);
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& upstream) {
  if (!xhat_) throw std::logic_error("batchnorm2d: backward called before forward");
  const Tensor& xhat = *xhat_;
  require_same_shape(xhat, upstream, "batchnorm2d backward");
  const std::size_t b = xhat.extent(0), hw = xhat.extent(2) * xhat.extent(3);
  const double count = static_cast<double>(b * hw);
  Tensor gx(xhat.shape());

  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < b; ++n) {
      const std::size_t base = (n * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += upstream[base + i];
        sum_gx += upstream[base + i] * xhat[base + i];
      }
    }
    grad_beta_[c] = sum_g;
    grad_gamma_[c] = sum_gx;
    const double k = gamma_[c] * inv_std_[c];
    for (std::size_t n = 0; n < b; ++n) {
      const std::size_t base = (n * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        if (last_mode_ == Mode::train) {
          gx[base + i] = k * (upstream[base + i] - sum_g / count - xhat[base + i] * sum_gx / count);
        } else {
          gx[base + i] = k * upstream[base + i];
        }
      }
    }
  }
  return gx;
}

}  // namespace wconv
