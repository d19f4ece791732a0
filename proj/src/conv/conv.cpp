#include "wconv/conv.hpp"

#include <algorithm>
#include <cstdint>

namespace wconv {

namespace {

using Index = std::ptrdiff_t;

// Range [lo, hi) of output positions o with 0 <= o*stride + offset < limit.
struct Span1d {
  std::size_t lo;
  std::size_t hi;
};

Span1d valid_outputs(Index offset, std::size_t stride, std::size_t limit, std::size_t out_extent) {
  const Index s = static_cast<Index>(stride);
  Index lo = 0;
  if (offset < 0) lo = (-offset + s - 1) / s;
  const Index last = static_cast<Index>(limit) - 1 - offset;  // o*s <= last
  Index hi = last < 0 ? 0 : last / s + 1;
  hi = std::min<Index>(hi, static_cast<Index>(out_extent));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + " elements, got " +
                     std::to_string(got));
  }
}

}  // namespace

KernelTensor::KernelTensor(Tensor w, Tensor b) : weights(std::move(w)), bias(std::move(b)) {
  if (weights.rank() != 4) throw ShapeError("kernel weights must be [F, C, K, K], got " + to_string(weights.shape()));
  if (weights.extent(2) != weights.extent(3)) throw ShapeError("kernels must be square");
  if (weights.extent(2) % 2 == 0) throw ShapeError("kernel extent must be odd");
  if (bias.shape() != Shape{weights.extent(0)}) {
    throw ShapeError("bias must have shape [F], got " + to_string(bias.shape()));
  }
}

KernelTensor::KernelTensor(std::size_t filters, std::size_t channels, std::size_t k)
    : KernelTensor(Tensor({filters, channels, k, k}), Tensor({filters})) {}

std::size_t ConvGeometry::output_extent(std::size_t n, std::size_t k) const {
  if (stride == 0) throw ShapeError("stride must be positive");
  const std::size_t padded = n + 2 * padding;
  if (k > padded) {
    throw ShapeError("kernel extent " + std::to_string(k) + " exceeds padded input extent " +
                     std::to_string(padded));
  }
  if ((padded - k) % stride != 0) {
    throw ShapeError("stride " + std::to_string(stride) + " does not divide padded span " +
                     std::to_string(padded - k));
  }
  return (padded - k) / stride + 1;
}

ConvDims ConvDims::resolve(std::size_t channels, std::size_t height, std::size_t width,
                           const KernelTensor& kernels, const ConvGeometry& geom) {
  if (kernels.channels() != channels) {
    throw ShapeError("input has " + std::to_string(channels) + " channels, kernels expect " +
                     std::to_string(kernels.channels()));
  }
  ConvDims d;
  d.channels = channels;
  d.height = height;
  d.width = width;
  d.filters = kernels.filters();
  d.k = kernels.k();
  d.padding = geom.padding;
  d.stride = geom.stride;
  d.out_height = geom.output_extent(height, d.k);
  d.out_width = geom.output_extent(width, d.k);
  return d;
}

void conv2d_image_forward(std::span<const double> input, std::span<const double> weights,
                          std::span<const double> bias, std::span<double> out, const ConvDims& d) {
  check_size(input.size(), d.input_size(), "conv input");
  check_size(weights.size(), d.weight_size(), "conv weights");
  check_size(bias.size(), d.filters, "conv bias");
  check_size(out.size(), d.output_size(), "conv output");

  const std::size_t kk = d.k * d.k;
  const Index pad = static_cast<Index>(d.padding);
  for (std::size_t f = 0; f < d.filters; ++f) {
    const double* wf = weights.data() + f * d.channels * kk;
    for (std::size_t oy = 0; oy < d.out_height; ++oy) {
      double* orow = out.data() + (f * d.out_height + oy) * d.out_width;
      std::fill(orow, orow + d.out_width, bias[f]);
      for (std::size_t c = 0; c < d.channels; ++c) {
        const double* plane = input.data() + c * d.height * d.width;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const Index iy = static_cast<Index>(oy * d.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<Index>(d.height)) continue;
          const double* irow = plane + static_cast<std::size_t>(iy) * d.width;
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const double w = wf[c * kk + ky * d.k + kx];
            const Index off = static_cast<Index>(kx) - pad;
            const auto [lo, hi] = valid_outputs(off, d.stride, d.width, d.out_width);
            if (d.stride == 1) {
              for (std::size_t ox = lo; ox < hi; ++ox) orow[ox] += w * irow[static_cast<Index>(ox) + off];
            } else {
              for (std::size_t ox = lo; ox < hi; ++ox) {
                orow[ox] += w * irow[static_cast<Index>(ox * d.stride) + off];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_image_backward(std::span<const double> input, std::span<const double> weights,
                           std::span<const double> upstream, std::span<double> grad_input,
                           std::span<double> grad_weights, std::span<double> grad_bias,
                           const ConvDims& d) {
  check_size(input.size(), d.input_size(), "conv input");
  check_size(weights.size(), d.weight_size(), "conv weights");
  check_size(upstream.size(), d.output_size(), "conv upstream gradient");
  check_size(grad_input.size(), d.input_size(), "conv input gradient");
  check_size(grad_weights.size(), d.weight_size(), "conv weight gradient");
  check_size(grad_bias.size(), d.filters, "conv bias gradient");

  const std::size_t kk = d.k * d.k;
  const std::size_t out_plane = d.out_height * d.out_width;
  const Index pad = static_cast<Index>(d.padding);

  for (std::size_t f = 0; f < d.filters; ++f) {
    double s = 0.0;
    const double* g = upstream.data() + f * out_plane;
    for (std::size_t i = 0; i < out_plane; ++i) s += g[i];
    grad_bias[f] = s;
  }

  // dL/dW[f,c,ky,kx] = sum_{oy,ox} g[f,oy,ox] * x[c, oy*s+ky-pad, ox*s+kx-pad]
  for (std::size_t f = 0; f < d.filters; ++f) {
    for (std::size_t c = 0; c < d.channels; ++c) {
      const double* plane = input.data() + c * d.height * d.width;
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const Index off = static_cast<Index>(kx) - pad;
          const auto [lo, hi] = valid_outputs(off, d.stride, d.width, d.out_width);
          double acc = 0.0;
          for (std::size_t oy = 0; oy < d.out_height; ++oy) {
            const Index iy = static_cast<Index>(oy * d.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<Index>(d.height)) continue;
            const double* irow = plane + static_cast<std::size_t>(iy) * d.width;
            const double* grow = upstream.data() + (f * d.out_height + oy) * d.out_width;
            if (d.stride == 1) {
              for (std::size_t ox = lo; ox < hi; ++ox) acc += grow[ox] * irow[static_cast<Index>(ox) + off];
            } else {
              for (std::size_t ox = lo; ox < hi; ++ox) {
                acc += grow[ox] * irow[static_cast<Index>(ox * d.stride) + off];
              }
            }
          }
          grad_weights[(f * d.channels + c) * kk + ky * d.k + kx] = acc;
        }
      }
    }
  }

  // dL/dx[c, iy, ix] = sum_{f,ky,kx} W[f,c,ky,kx] * g[f, oy, ox]
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (std::size_t c = 0; c < d.channels; ++c) {
    double* gplane = grad_input.data() + c * d.height * d.width;
    for (std::size_t oy = 0; oy < d.out_height; ++oy) {
      for (std::size_t f = 0; f < d.filters; ++f) {
        const double* grow = upstream.data() + (f * d.out_height + oy) * d.out_width;
        const double* wfc = weights.data() + (f * d.channels + c) * kk;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const Index iy = static_cast<Index>(oy * d.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<Index>(d.height)) continue;
          double* girow = gplane + static_cast<std::size_t>(iy) * d.width;
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const double w = wfc[ky * d.k + kx];
            const Index off = static_cast<Index>(kx) - pad;
            const auto [lo, hi] = valid_outputs(off, d.stride, d.width, d.out_width);
            if (d.stride == 1) {
              for (std::size_t ox = lo; ox < hi; ++ox) girow[static_cast<Index>(ox) + off] += w * grow[ox];
            } else {
              for (std::size_t ox = lo; ox < hi; ++ox) {
                girow[static_cast<Index>(ox * d.stride) + off] += w * grow[ox];
              }
            }
          }
        }
      }
    }
  }
}

namespace {

ConvDims dims_for(const Tensor& input, const KernelTensor& kernels, const ConvGeometry& geom) {
  if (input.rank() != 3) throw ShapeError("conv input must be [C, H, W], got " + to_string(input.shape()));
  return ConvDims::resolve(input.extent(0), input.extent(1), input.extent(2), kernels, geom);
}

void check_density(const KernelTensor& kernels, const DensityFunction& d) {
  if (d.k() != kernels.k()) {
    throw ShapeError("density extent " + std::to_string(d.k()) + " does not match kernel extent " +
                     std::to_string(kernels.k()));
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const KernelTensor& kernels, const ConvGeometry& geom) {
  const ConvDims d = dims_for(input, kernels, geom);
  Tensor out({d.filters, d.out_height, d.out_width});
  conv2d_image_forward(input.data(), kernels.weights.data(), kernels.bias.data(), out.data(), d);
  return out;
}

void apply_density_into(std::span<const double> weights, const DensityFunction& d,
                        std::span<double> out) {
  const auto phi = d.phi().data();
  const std::size_t kk = phi.size();
  if (weights.size() % kk != 0 || out.size() != weights.size()) {
    throw ShapeError("weight buffer is not a whole number of density-sized slices");
  }
  for (std::size_t base = 0; base < weights.size(); base += kk) {
    for (std::size_t i = 0; i < kk; ++i) out[base + i] = phi[i] * weights[base + i];
  }
}

KernelTensor apply_density(const KernelTensor& kernels, const DensityFunction& d) {
  check_density(kernels, d);
  KernelTensor out{Tensor(kernels.weights.shape()), kernels.bias};
  apply_density_into(kernels.weights.data(), d, out.weights.data());
  return out;
}

Tensor wconv2d_forward(const Tensor& input, const KernelTensor& kernels, const DensityFunction& d,
                       const ConvGeometry& geom) {
  return conv2d_forward(input, apply_density(kernels, d), geom);
}

ConvGradients conv2d_backward(const Tensor& input, const KernelTensor& kernels,
                              const ConvGeometry& geom, const Tensor& upstream) {
  const ConvDims d = dims_for(input, kernels, geom);
  if (upstream.shape() != Shape{d.filters, d.out_height, d.out_width}) {
    throw ShapeError("upstream gradient must have shape " +
                     to_string({d.filters, d.out_height, d.out_width}) + ", got " +
                     to_string(upstream.shape()));
  }
  ConvGradients g{Tensor(input.shape()), Tensor(kernels.weights.shape()), Tensor(kernels.bias.shape())};
  conv2d_image_backward(input.data(), kernels.weights.data(), upstream.data(), g.input.data(),
                        g.weights.data(), g.bias.data(), d);
  return g;
}

ConvGradients wconv2d_backward(const Tensor& input, const KernelTensor& kernels,
                               const DensityFunction& d, const ConvGeometry& geom,
                               const Tensor& upstream) {
  ConvGradients g = conv2d_backward(input, apply_density(kernels, d), geom, upstream);
  Tensor raw(g.weights.shape());
  apply_density_into(g.weights.data(), d, raw.data());
  g.weights = std::move(raw);
  return g;
}

}  // namespace wconv
