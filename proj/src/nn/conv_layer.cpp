#include <stdexcept>

#include <fmt/format.h>

#include "wconv/nn.hpp"
#include "wconv/parallel.hpp"

namespace wconv {

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t k, ConvVariant variant,
               std::optional<DensityFunction> density, std::optional<ConvGeometry> geometry)
    : variant_(variant),
      density_(std::move(density)),
      geometry_(geometry.value_or(ConvGeometry::same(k))),
      kernels_(out_channels, in_channels, k),
      grads_(out_channels, in_channels, k) {
  if (variant_ == ConvVariant::weighted) {
    if (!density_) throw std::invalid_argument("weighted conv2d needs a density function");
    if (density_->k() != k) {
      throw std::invalid_argument(fmt::format("density extent {} does not match kernel extent {}", density_->k(), k));
    }
  } else {
    density_.reset();
  }
}

void Conv2d::set_density(DensityFunction d) {
  if (variant_ != ConvVariant::weighted) throw std::logic_error("set_density on a standard conv2d");
  if (d.k() != kernels_.k()) throw std::invalid_argument("density extent does not match kernel extent");
  density_ = std::move(d);
}

std::string Conv2d::describe() const {
  std::string s = fmt::format("conv2d in={} out={} k={} pad={} stride={} variant={}", kernels_.channels(),
                              kernels_.filters(), kernels_.k(), geometry_.padding, geometry_.stride,
                              to_string(variant_));
  if (density_) {
    s += fmt::format(" central={} coeffs=", density_->central_value());
    const auto& c = density_->free_coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) s += fmt::format("{}{}", i ? "," : "", c[i]);
  }
  return s;
}

std::vector<ParamRef> Conv2d::parameters() {
  return {{"weight", &kernels_.weights, &grads_.weights}, {"bias", &kernels_.bias, &grads_.bias}};
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  if (x.rank() != 4) throw ShapeError("conv2d expects [B, C, H, W], got " + to_string(x.shape()));
  const ConvDims d = ConvDims::resolve(x.extent(1), x.extent(2), x.extent(3), kernels_, geometry_);
  const std::size_t batch = x.extent(0);

  // W_phi is refreshed from the current W on every call.
  if (variant_ == ConvVariant::weighted) {
    effective_weights_.resize(kernels_.weights.size());
    apply_density_into(kernels_.weights.data(), *density_, effective_weights_);
  } else {
    effective_weights_.assign(kernels_.weights.data().begin(), kernels_.weights.data().end());
  }

  Tensor y({batch, d.filters, d.out_height, d.out_width});
  parallel_for(batch, [&](std::size_t n) {
    conv2d_image_forward(x.slice_data(n), effective_weights_, kernels_.bias.data(), y.slice_data(n), d);
  });
  input_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& upstream) {
  if (!input_) throw std::logic_error("conv2d: backward called before forward");
  const Tensor& x = *input_;
  const ConvDims d = ConvDims::resolve(x.extent(1), x.extent(2), x.extent(3), kernels_, geometry_);
  const std::size_t batch = x.extent(0);
  if (upstream.shape() != Shape{batch, d.filters, d.out_height, d.out_width}) {
    throw ShapeError("conv2d backward: upstream shape " + to_string(upstream.shape()) + " does not match output");
  }

  // Per-sample gradient slots reduced in sample order, so the result does
  // not depend on the worker count.
  const std::size_t wsize = d.weight_size();
  std::vector<double> gw(batch * wsize), gb(batch * d.filters);
  Tensor gx(x.shape());
  parallel_for(batch, [&](std::size_t n) {
    conv2d_image_backward(x.slice_data(n), effective_weights_, upstream.slice_data(n), gx.slice_data(n),
                          std::span<double>(gw).subspan(n * wsize, wsize),
                          std::span<double>(gb).subspan(n * d.filters, d.filters), d);
  });

  auto gweights = grads_.weights.data();
  auto gbias = grads_.bias.data();
  std::fill(gweights.begin(), gweights.end(), 0.0);
  std::fill(gbias.begin(), gbias.end(), 0.0);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < wsize; ++i) gweights[i] += gw[n * wsize + i];
    for (std::size_t f = 0; f < d.filters; ++f) gbias[f] += gb[n * d.filters + f];
  }
  if (variant_ == ConvVariant::weighted) {
    // dL/dW = phi o dL/dW_phi
    std::vector<double> raw(gweights.begin(), gweights.end());
    apply_density_into(raw, *density_, gweights);
  }
  return gx;
}

}  // namespace wconv
