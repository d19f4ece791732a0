#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wconv/data.hpp"

namespace wconv {

namespace {

void render_grating(std::span<double> dst, double theta, Rng& rng) {
  constexpr std::size_t n = kCifarSide;
  const double freq = rng.uniform(0.08, 0.2);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double kx = 2.0 * std::numbers::pi * freq * std::cos(theta);
  const double ky = 2.0 * std::numbers::pi * freq * std::sin(theta);
  double base[3], amp[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.3, 0.7);
    amp[c] = rng.uniform(0.1, 0.3);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double wave = std::sin(kx * static_cast<double>(x) + ky * static_cast<double>(y) + phase);
        const double v = base[c] + amp[c] * wave + 0.08 * rng.normal();
        dst[(c * n + y) * n + x] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
}

}  // namespace

LabeledImageSet make_synthetic_classification(std::size_t per_class, std::size_t classes,
                                              std::uint64_t seed) {
  if (classes < 2 || classes > static_cast<std::size_t>(kCifarFineClasses)) {
    throw std::invalid_argument("synthetic class count must lie in [2, 100]");
  }
  if (per_class == 0) throw std::invalid_argument("synthetic set needs at least one image per class");
  const std::size_t n = per_class * classes;
  LabeledImageSet set;
  set.images = Tensor({n, 3, kCifarSide, kCifarSide});
  set.fine_labels.resize(n);
  set.coarse_labels.resize(n);
  const Rng root(seed);
  const double jitter = 0.15 * std::numbers::pi / static_cast<double>(classes);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    Rng rng = root.split(i);
    const double theta = static_cast<double>(c) * std::numbers::pi / static_cast<double>(classes) +
                         rng.uniform(-jitter, jitter);
    render_grating(set.images.slice_data(i), theta, rng);
    set.fine_labels[i] = static_cast<int>(c);
    set.coarse_labels[i] = static_cast<int>(c / 5);
  }
  return set;
}

Tensor make_synthetic_scene(std::size_t h, std::size_t w, Rng& rng) {
  if (h == 0 || w == 0) throw ShapeError("scene extents must be positive");
  Tensor img({3, h, w});
  const double fh = static_cast<double>(h), fw = static_cast<double>(w);

  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.2, 0.8);
    c1[c] = rng.uniform(0.2, 0.8);
  }
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(dir), gy = std::sin(dir);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double t = 0.5 + 0.5 * ((static_cast<double>(x) / fw - 0.5) * gx + (static_cast<double>(y) / fh - 0.5) * gy);
      for (std::size_t c = 0; c < 3; ++c) img(c, y, x) = (1.0 - t) * c0[c] + t * c1[c];
    }
  }

  const auto blobs = 3 + rng.below(4);
  for (std::uint64_t b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0.0, fw), cy = rng.uniform(0.0, fh);
    const double rx = rng.uniform(0.1, 0.35) * fw, ry = rng.uniform(0.1, 0.35) * fh;
    const double rot = rng.uniform(0.0, std::numbers::pi);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double alpha = rng.uniform(0.5, 0.9);
    const double edge = rng.uniform(1.0, 3.0);
    double col[3];
    for (double& v : col) v = rng.uniform(0.05, 0.95);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double u = (dx * cr + dy * sr) / rx, v = (-dx * sr + dy * cr) / ry;
        const double dist = (std::sqrt(u * u + v * v) - 1.0) * std::min(rx, ry);
        const double a = alpha / (1.0 + std::exp(dist / edge));
        for (std::size_t c = 0; c < 3; ++c) img(c, y, x) = (1.0 - a) * img(c, y, x) + a * col[c];
      }
    }
  }

  const double tf = rng.uniform(0.02, 0.06), tp = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double tex = 0.03 * std::sin(2.0 * std::numbers::pi * tf * (static_cast<double>(x) + 0.7 * static_cast<double>(y)) + tp);
      for (std::size_t c = 0; c < 3; ++c) img(c, y, x) = std::clamp(img(c, y, x) + tex, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace wconv
