#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wconv/data.hpp"

namespace wconv {

Tensor add_gaussian_noise(const Tensor& images, const NoiseConfig& cfg) {
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma) || !std::isfinite(cfg.mu)) {
    throw std::invalid_argument("noise sigma must be finite and non-negative");
  }
  Tensor out = images;
  if (cfg.sigma == 0.0 && cfg.mu == 0.0) return out;
  const Rng root(cfg.seed);
  const std::size_t items = images.extent(0);
  for (std::size_t i = 0; i < items; ++i) {
    Rng rng = root.split(i);
    for (double& v : out.slice_data(i)) v += cfg.mu + cfg.sigma * rng.normal();
  }
  return out;
}

Tensor hflip(const Tensor& image) {
  if (image.rank() < 2) throw ShapeError("hflip needs at least [H, W], got " + to_string(image.shape()));
  const std::size_t w = image.shape().back();
  Tensor out = image;
  auto d = out.data();
  for (std::size_t row = 0; row < d.size(); row += w) std::reverse(d.begin() + row, d.begin() + row + w);
  return out;
}

Tensor random_hflip(const Tensor& batch, double p, Rng& rng) {
  if (batch.rank() != 4) throw ShapeError("random_hflip expects [N,C,H,W], got " + to_string(batch.shape()));
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("flip probability must lie in [0, 1]");
  Tensor out = batch;
  const std::size_t w = batch.extent(3);
  for (std::size_t i = 0; i < batch.extent(0); ++i) {
    if (!(rng.uniform() < p)) continue;
    auto d = out.slice_data(i);
    for (std::size_t row = 0; row < d.size(); row += w) std::reverse(d.begin() + row, d.begin() + row + w);
  }
  return out;
}

namespace {

void require_patchable(const Tensor& image, std::size_t size) {
  if (image.rank() != 3) throw ShapeError("patch extraction expects [C,H,W], got " + to_string(image.shape()));
  if (size == 0 || size > image.extent(1) || size > image.extent(2)) {
    throw ShapeError("patch size " + std::to_string(size) + " does not fit image " + to_string(image.shape()));
  }
}

void copy_patch(const Tensor& image, std::size_t y, std::size_t x, std::size_t size, std::span<double> dst) {
  const std::size_t c = image.extent(0), h = image.extent(1), w = image.extent(2);
  auto src = image.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t r = 0; r < size; ++r) {
      const double* row = src.data() + (ch * h + y + r) * w + x;
      std::copy(row, row + size, dst.data() + (ch * size + r) * size);
    }
  }
}

}  // namespace

Tensor extract_patches(const Tensor& image, std::size_t size, std::size_t stride) {
  require_patchable(image, size);
  if (stride == 0) throw std::invalid_argument("patch stride must be positive");
  const std::size_t ny = (image.extent(1) - size) / stride + 1;
  const std::size_t nx = (image.extent(2) - size) / stride + 1;
  Tensor out({ny * nx, image.extent(0), size, size});
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < nx; ++j) copy_patch(image, i * stride, j * stride, size, out.slice_data(i * nx + j));
  }
  return out;
}

Tensor extract_random_patches(const Tensor& image, std::size_t size, std::size_t count, Rng& rng) {
  require_patchable(image, size);
  if (count == 0) throw std::invalid_argument("patch count must be positive");
  Tensor out({count, image.extent(0), size, size});
  for (std::size_t p = 0; p < count; ++p) {
    const auto y = static_cast<std::size_t>(rng.below(image.extent(1) - size + 1));
    const auto x = static_cast<std::size_t>(rng.below(image.extent(2) - size + 1));
    copy_patch(image, y, x, size, out.slice_data(p));
  }
  return out;
}

SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto count = [n](double f) {
    return std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9)));
  };
  const std::size_t n_train = count(fractions[0]);
  const std::size_t n_val = std::min(n - n_train, count(fractions[1]));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

}  // namespace wconv
