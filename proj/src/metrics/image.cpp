#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wconv/metrics.hpp"

namespace wconv {

namespace {

constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr std::size_t kUiqWindow = 8;

void require_pair(const ImagePair& p) {
  require_same_shape(p.prediction, p.truth, "image pair");
  if (!(p.range > 0.0) || !std::isfinite(p.range)) {
    throw std::invalid_argument("image dynamic range must be positive and finite");
  }
}

std::vector<double> gaussian_window_1d() {
  std::vector<double> w(kSsimWindow);
  const double c = static_cast<double>(kSsimWindow / 2);
  double s = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

// 'valid' separable correlation of a [h, w] image with the 1-D window on both axes.
std::vector<double> separable_valid(std::span<const double> img, std::size_t h, std::size_t w,
                                    std::span<const double> k) {
  const std::size_t n = k.size();
  const std::size_t ow = w - n + 1, oh = h - n + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * img[y * w + x + i];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ki = k[i];
      const double* src = &rows[(y + i) * ow];
      double* dst = &out[y * ow];
      for (std::size_t x = 0; x < ow; ++x) dst[x] += ki * src[x];
    }
  }
  return out;
}

}  // namespace

Tensor luminance(const Tensor& image) {
  const auto& s = image.shape();
  if (s.size() == 2) return image;
  if (s.size() == 3 && s[0] == 1) return image.reshaped({s[1], s[2]});
  if (s.size() == 3 && s[0] == 3) {
    const std::size_t plane = s[1] * s[2];
    Tensor y({s[1], s[2]});
    auto src = image.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < plane; ++i) {
      dst[i] = 0.299 * src[i] + 0.587 * src[plane + i] + 0.114 * src[2 * plane + i];
    }
    return y;
  }
  throw ShapeError("expected an image of shape [H,W], [1,H,W] or [3,H,W], got " + to_string(s));
}

double psnr(const ImagePair& p) {
  require_pair(p);
  auto a = p.prediction.data();
  auto b = p.truth.data();
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    se += d * d;
  }
  if (se == 0.0) return kPsnrIdentical;
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(p.range * p.range / mse);
}

double nrmse(const ImagePair& p) {
  require_pair(p);
  auto a = p.prediction.data();
  auto b = p.truth.data();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  if (den == 0.0) throw std::domain_error("NRMSE is undefined for an all-zero ground truth");
  return std::sqrt(num / den);
}

double ssim(const ImagePair& p) {
  require_pair(p);
  const Tensor x = luminance(p.prediction);
  const Tensor y = luminance(p.truth);
  const std::size_t h = x.extent(0), w = x.extent(1);
  if (h < kSsimWindow || w < kSsimWindow) {
    throw ShapeError("SSIM needs at least an 11x11 image, got " + to_string(x.shape()));
  }
  const auto k = gaussian_window_1d();
  const std::size_t n = h * w;
  std::vector<double> xx(n), yy(n), xy(n);
  auto xv = x.data();
  auto yv = y.data();
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = xv[i] * xv[i];
    yy[i] = yv[i] * yv[i];
    xy[i] = xv[i] * yv[i];
  }
  const auto mx = separable_valid(xv, h, w, k);
  const auto my = separable_valid(yv, h, w, k);
  const auto sxx = separable_valid(xx, h, w, k);
  const auto syy = separable_valid(yy, h, w, k);
  const auto sxy = separable_valid(xy, h, w, k);

  const double c1 = (0.01 * p.range) * (0.01 * p.range);
  const double c2 = (0.03 * p.range) * (0.03 * p.range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double uiq(const ImagePair& p) {
  require_pair(p);
  const Tensor x = luminance(p.prediction);
  const Tensor y = luminance(p.truth);
  const std::size_t h = x.extent(0), w = x.extent(1);
  if (h < kUiqWindow || w < kUiqWindow) {
    throw ShapeError("UIQ needs at least an 8x8 image, got " + to_string(x.shape()));
  }
  auto xv = x.data();
  auto yv = y.data();
  constexpr double n = static_cast<double>(kUiqWindow * kUiqWindow);

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t r = 0; r + kUiqWindow <= h; ++r) {
    for (std::size_t c = 0; c + kUiqWindow <= w; ++c) {
      double sx = 0.0, sy = 0.0;
      bool x_const = true, y_const = true;
      const double x0 = xv[r * w + c], y0 = yv[r * w + c];
      for (std::size_t i = 0; i < kUiqWindow; ++i) {
        for (std::size_t j = 0; j < kUiqWindow; ++j) {
          const double a = xv[(r + i) * w + c + j], b = yv[(r + i) * w + c + j];
          sx += a;
          sy += b;
          x_const = x_const && a == x0;
          y_const = y_const && b == y0;
        }
      }
      const double mx = sx / n, my = sy / n;
      const double mean_term = mx * mx + my * my;
      if ((x_const && y_const) || mean_term == 0.0) continue;
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (std::size_t i = 0; i < kUiqWindow; ++i) {
        for (std::size_t j = 0; j < kUiqWindow; ++j) {
          const double a = xv[(r + i) * w + c + j] - mx, b = yv[(r + i) * w + c + j] - my;
          vx += a * a;
          vy += b * b;
          cov += a * b;
        }
      }
      const double den = (vx + vy) * mean_term;
      if (den == 0.0) continue;
      total += 4.0 * cov * mx * my / den;
      ++used;
    }
  }
  if (used == 0) {
    if (xv.size() == yv.size() && std::equal(xv.begin(), xv.end(), yv.begin())) return 1.0;
    throw std::domain_error("UIQ is undefined: every window has a zero denominator");
  }
  return total / static_cast<double>(used);
}

ImageMetrics evaluate_image_metrics(const ImagePair& p) {
  ImageMetrics m;
  m.nrmse = nrmse(p);
  m.psnr = psnr(p);
  m.ssim = ssim(p);
  m.fsim = fsim(p);
  m.uiq = uiq(p);
  return m;
}

}  // namespace wconv
