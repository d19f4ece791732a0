#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "wconv/loss.hpp"
#include "wconv/nn.hpp"

namespace wconv {

namespace {

const Tensor& require_cached(const std::optional<Tensor>& t, const char* layer) {
  if (!t) throw std::logic_error(std::string(layer) + ": backward called before forward");
  return *t;
}

}  // namespace

std::string to_string(ConvVariant v) {
  return v == ConvVariant::standard ? "standard" : "weighted";
}

ConvVariant parse_conv_variant(const std::string& s) {
  if (s == "standard") return ConvVariant::standard;
  if (s == "weighted") return ConvVariant::weighted;
  throw std::invalid_argument("unknown conv variant '" + s + "'");
}

double kaiming_std(std::size_t fan_in) {
  if (fan_in == 0) throw std::invalid_argument("kaiming_std: fan_in must be positive");
  return std::sqrt(2.0 / static_cast<double>(fan_in));
}

KernelTensor kaiming_init(const KernelTensor& kernels, Rng& rng) {
  const double std = kaiming_std(kernels.channels() * kernels.k() * kernels.k());
  return KernelTensor(fill_normal(kernels.weights.shape(), 0.0, std, rng), Tensor(kernels.bias.shape()));
}

// ---------------------------------------------------------------- Relu

Tensor Relu::forward(const Tensor& x, Mode) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor Relu::backward(const Tensor& upstream) {
  const Tensor& x = require_cached(input_, "relu");
  require_same_shape(x, upstream, "relu backward");
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return g;
}

// ---------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(std::size_t size) : size_(size) {
  if (size == 0) throw std::invalid_argument("pool size must be positive");
}

std::string MaxPool2d::describe() const { return fmt::format("maxpool2d size={}", size_); }

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  if (x.rank() != 4) throw ShapeError("maxpool2d expects [B, C, H, W], got " + to_string(x.shape()));
  const std::size_t b = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
  const std::size_t oh = h / size_, ow = w / size_;
  if (oh == 0 || ow == 0) throw ShapeError("maxpool2d input smaller than the pool window");
  Tensor y({b, c, oh, ow});
  argmax_.assign(y.size(), 0);
  input_shape_ = x.shape();
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < b * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        std::size_t best = base + (i * size_) * w + j * size_;
        for (std::size_t di = 0; di < size_; ++di) {
          for (std::size_t dj = 0; dj < size_; ++dj) {
            const std::size_t idx = base + (i * size_ + di) * w + j * size_ + dj;
            if (x[idx] > x[best]) best = idx;
          }
        }
        y[o] = x[best];
        argmax_[o] = best;
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& upstream) {
  if (input_shape_.empty()) throw std::logic_error("maxpool2d: backward called before forward");
  if (upstream.size() != argmax_.size()) throw ShapeError("maxpool2d backward: upstream size mismatch");
  Tensor g(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) g[argmax_[o]] += upstream[o];
  return g;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out)
    : weights_({out, in}), bias_({out}), grad_weights_({out, in}), grad_bias_({out}) {}

std::string Dense::describe() const {
  return fmt::format("dense in={} out={}", weights_.extent(1), weights_.extent(0));
}

void Dense::init(Rng& rng) {
  weights_ = fill_normal(weights_.shape(), 0.0, kaiming_std(weights_.extent(1)), rng);
  bias_.fill(0.0);
}

std::vector<ParamRef> Dense::parameters() {
  return {{"weight", &weights_, &grad_weights_}, {"bias", &bias_, &grad_bias_}};
}

Tensor Dense::forward(const Tensor& x, Mode) {
  const std::size_t in = weights_.extent(1), out = weights_.extent(0);
  const std::size_t b = x.extent(0);
  if (x.size() != b * in) {
    throw ShapeError(fmt::format("dense expects {} features per sample, got shape {}", in, to_string(x.shape())));
  }
  input_shape_ = x.shape();
  input_ = x.reshaped({b, in});
  Tensor y({b, out});
  for (std::size_t s = 0; s < b; ++s) {
    const double* xs = x.data().data() + s * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = weights_.data().data() + o * in;
      double acc = bias_[o];
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xs[i];
      y[s * out + o] = acc;
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& upstream) {
  const Tensor& x = require_cached(input_, "dense");
  const std::size_t in = weights_.extent(1), out = weights_.extent(0);
  const std::size_t b = x.extent(0);
  if (upstream.shape() != Shape{b, out}) throw ShapeError("dense backward: upstream shape mismatch");
  grad_weights_.fill(0.0);
  grad_bias_.fill(0.0);
  Tensor gx(input_shape_);
  for (std::size_t s = 0; s < b; ++s) {
    const double* xs = x.data().data() + s * in;
    double* gxs = gx.data().data() + s * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = upstream[s * out + o];
      grad_bias_[o] += g;
      double* gw = grad_weights_.data().data() + o * in;
      const double* wo = weights_.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gw[i] += g * xs[i];
        gxs[i] += g * wo[i];
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------- Softmax

Tensor Softmax::forward(const Tensor& x, Mode) {
  output_ = softmax(x);
  return *output_;
}

Tensor Softmax::backward(const Tensor& upstream) {
  const Tensor& y = require_cached(output_, "softmax");
  require_same_shape(y, upstream, "softmax backward");
  const std::size_t b = y.extent(0), n = y.extent(1);
  Tensor g(y.shape());
  for (std::size_t s = 0; s < b; ++s) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += upstream[s * n + j] * y[s * n + j];
    for (std::size_t j = 0; j < n; ++j) g[s * n + j] = y[s * n + j] * (upstream[s * n + j] - dot);
  }
  return g;
}

}  // namespace wconv
