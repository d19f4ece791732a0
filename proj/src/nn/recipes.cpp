#include <stdexcept>

#include <fmt/format.h>

#include "wconv/model.hpp"

namespace wconv {

namespace {

std::optional<DensityFunction> density_for(ConvVariant variant, const std::optional<DensityFunction>& density,
                                            std::size_t kernel) {
  if (variant == ConvVariant::standard) return std::nullopt;
  if (!density) throw std::invalid_argument("weighted recipe needs a density function");
  if (density->k() != kernel) {
    throw std::invalid_argument(fmt::format("density extent {} does not match kernel size {}", density->k(), kernel));
  }
  return density;
}

Conv2d& add_conv(Model& m, std::size_t in, std::size_t out, std::size_t k, ConvVariant variant,
                 const std::optional<DensityFunction>& density, Rng& rng) {
  auto& conv = m.emplace<Conv2d>(in, out, k, variant, density);
  conv.kernels() = kaiming_init(conv.kernels(), rng);
  return conv;
}

}  // namespace

Model build_mini_vgg(std::size_t n_classes, ConvVariant variant, const std::optional<DensityFunction>& density,
                     Rng& rng, const VggOptions& options) {
  if (n_classes < 2) throw std::invalid_argument("classifier needs at least two classes");
  if (options.widths.empty()) throw std::invalid_argument("mini-VGG needs at least one block");
  const auto d = density_for(variant, density, options.kernel);

  Model m(TaskKind::classification);
  std::size_t in = options.in_channels;
  std::size_t side = options.image_size;
  for (std::size_t width : options.widths) {
    add_conv(m, in, width, options.kernel, variant, d, rng);
    m.emplace<BatchNorm2d>(width);
    m.emplace<Relu>();
    m.emplace<MaxPool2d>(2);
    in = width;
    side /= 2;
    if (side == 0) throw std::invalid_argument("too many pooling blocks for the image size");
  }
  auto& head = m.emplace<Dense>(in * side * side, n_classes);
  head.init(rng);
  return m;
}

Model build_mini_dncnn(std::size_t depth, std::size_t width, ConvVariant variant,
                       const std::optional<DensityFunction>& density, Rng& rng, const DncnnOptions& options) {
  if (depth < 2) throw std::invalid_argument("mini-DnCNN depth must be at least 2");
  const auto d = density_for(variant, density, options.kernel);

  Model m(TaskKind::denoising, /*residual=*/true);
  add_conv(m, options.channels, width, options.kernel, variant, d, rng);
  m.emplace<Relu>();
  for (std::size_t i = 0; i + 2 < depth; ++i) {
    add_conv(m, width, width, options.kernel, variant, d, rng);
    m.emplace<BatchNorm2d>(width);
    m.emplace<Relu>();
  }
  auto& tail = add_conv(m, width, options.channels, options.kernel, variant, d, rng);
  if (options.zero_init_tail) {
    tail.kernels().weights.fill(0.0);
    tail.kernels().bias.fill(0.0);
  }
  return m;
}

}  // namespace wconv
