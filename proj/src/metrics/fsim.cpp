#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "wconv/metrics.hpp"

// Feature similarity after Zhang, Zhang, Mou and Zhang (2011), including the
// phase congruency estimator of Kovesi with the same default parameters as the
// authors' reference implementation.

namespace wconv {

namespace {

using cplx = std::complex<double>;

constexpr int kScales = 4;
constexpr int kOrients = 4;
constexpr double kMinWavelength = 6.0;
constexpr double kMult = 2.0;
constexpr double kSigmaOnf = 0.55;
constexpr double kDThetaOnSigma = 1.2;
constexpr double kNoiseK = 2.0;
constexpr double kEpsilon = 1e-4;
constexpr double kT1 = 0.85;
constexpr double kT2 = 160.0;
constexpr std::size_t kMinSide = 8;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place 2-D DFT over a row-major rows x cols buffer. Backward is unnormalized.
class Fft2 {
 public:
  Fft2(std::size_t rows, std::size_t cols) : n_(rows * cols), buf_(n_) {
    std::lock_guard lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, FFTW_FORWARD,
                            FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p, FFTW_BACKWARD,
                            FFTW_ESTIMATE);
    if (fwd_ == nullptr || bwd_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  ~Fft2() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  std::vector<cplx>& buffer() { return buf_; }
  void forward() { fftw_execute(fwd_); }
  void inverse() {
    fftw_execute(bwd_);
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& v : buf_) v *= s;
  }

 private:
  std::size_t n_;
  std::vector<cplx> buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// Normalized frequency coordinates in unshifted (DC-first) order.
std::vector<double> freq_axis(std::size_t n) {
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double idx = static_cast<double>(i);
    centered[i] = (n % 2 == 1) ? (idx - static_cast<double>(n - 1) / 2.0) / static_cast<double>(n - 1)
                               : (idx - static_cast<double>(n / 2)) / static_cast<double>(n);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = centered[(i + n / 2) % n];
  return out;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double hi = *mid;
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

std::vector<double> conv2_same(std::span<const double> img, std::size_t h, std::size_t w,
                               std::span<const double> k, std::size_t kh, std::size_t kw) {
  std::vector<double> out(h * w, 0.0);
  const auto oy = static_cast<std::ptrdiff_t>(kh / 2), ox = static_cast<std::ptrdiff_t>(kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t i = 0; i < H; ++i) {
    for (std::ptrdiff_t j = 0; j < W; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < kh; ++a) {
        const std::ptrdiff_t r = i + oy - static_cast<std::ptrdiff_t>(a);
        if (r < 0 || r >= H) continue;
        for (std::size_t b = 0; b < kw; ++b) {
          const std::ptrdiff_t c = j + ox - static_cast<std::ptrdiff_t>(b);
          if (c < 0 || c >= W) continue;
          s += img[static_cast<std::size_t>(r * W + c)] * k[a * kw + b];
        }
      }
      out[static_cast<std::size_t>(i * W + j)] = s;
    }
  }
  return out;
}

std::vector<double> gradient_magnitude(std::span<const double> img, std::size_t h, std::size_t w) {
  static constexpr double dx[9] = {3 / 16.0, 0, -3 / 16.0, 10 / 16.0, 0, -10 / 16.0, 3 / 16.0, 0, -3 / 16.0};
  static constexpr double dy[9] = {3 / 16.0, 10 / 16.0, 3 / 16.0, 0, 0, 0, -3 / 16.0, -10 / 16.0, -3 / 16.0};
  const auto gx = conv2_same(img, h, w, dx, 3, 3);
  const auto gy = conv2_same(img, h, w, dy, 3, 3);
  std::vector<double> g(h * w);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::hypot(gx[i], gy[i]);
  return g;
}

// Box-average and decimate by `factor`, mirroring the reference preprocessing.
Tensor downsample(const Tensor& gray, std::size_t factor) {
  if (factor <= 1) return gray;
  const std::size_t h = gray.extent(0), w = gray.extent(1);
  std::vector<double> box(factor * factor, 1.0 / static_cast<double>(factor * factor));
  const auto avg = conv2_same(gray.data(), h, w, box, factor, factor);
  const std::size_t oh = (h + factor - 1) / factor, ow = (w + factor - 1) / factor;
  Tensor out({oh, ow});
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) out(i, j) = avg[i * factor * w + j * factor];
  }
  return out;
}

}  // namespace

Tensor phase_congruency(const Tensor& gray) {
  if (gray.rank() != 2) throw ShapeError("phase congruency expects [H,W], got " + to_string(gray.shape()));
  const std::size_t rows = gray.extent(0), cols = gray.extent(1), n = rows * cols;
  if (rows < 2 || cols < 2) throw ShapeError("phase congruency needs at least 2x2");

  const auto fx = freq_axis(cols);
  const auto fy = freq_axis(rows);
  std::vector<double> radius(n), sintheta(n), costheta(n), lowpass(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const double x = fx[c], y = fy[r];
      const double rad = std::sqrt(x * x + y * y);
      const double theta = std::atan2(-y, x);
      lowpass[i] = 1.0 / (1.0 + std::pow(rad / 0.45, 2.0 * 15.0));
      radius[i] = rad;
      sintheta[i] = std::sin(theta);
      costheta[i] = std::cos(theta);
    }
  }
  radius[0] = 1.0;

  std::vector<std::vector<double>> log_gabor(kScales, std::vector<double>(n));
  const double log_sigma2 = 2.0 * std::log(kSigmaOnf) * std::log(kSigmaOnf);
  for (int s = 0; s < kScales; ++s) {
    const double fo = 1.0 / (kMinWavelength * std::pow(kMult, s));
    for (std::size_t i = 0; i < n; ++i) {
      const double l = std::log(radius[i] / fo);
      log_gabor[s][i] = std::exp(-(l * l) / log_sigma2) * lowpass[i];
    }
    log_gabor[s][0] = 0.0;
  }

  const double theta_sigma = std::numbers::pi / kOrients / kDThetaOnSigma;
  Fft2 fft(rows, cols);
  auto& buf = fft.buffer();
  auto src = gray.data();
  for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(src[i], 0.0);
  fft.forward();
  const std::vector<cplx> image_fft = buf;

  std::vector<double> energy_all(n, 0.0), an_all(n, 0.0);
  std::vector<std::vector<cplx>> eo(kScales, std::vector<cplx>(n));
  std::vector<std::vector<double>> ifft_filter(kScales, std::vector<double>(n));
  std::vector<double> spread(n), filter(n);

  for (int o = 0; o < kOrients; ++o) {
    const double angle = o * std::numbers::pi / kOrients;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t i = 0; i < n; ++i) {
      const double ds = sintheta[i] * ca - costheta[i] * sa;
      const double dc = costheta[i] * ca + sintheta[i] * sa;
      const double dtheta = std::abs(std::atan2(ds, dc));
      spread[i] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
    }

    std::vector<double> sum_e(n, 0.0), sum_o(n, 0.0), sum_an(n, 0.0);
    double em_n = 0.0;
    for (int s = 0; s < kScales; ++s) {
      for (std::size_t i = 0; i < n; ++i) filter[i] = log_gabor[s][i] * spread[i];

      for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(filter[i], 0.0);
      fft.inverse();
      const double root_n = std::sqrt(static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) ifft_filter[s][i] = buf[i].real() * root_n;

      for (std::size_t i = 0; i < n; ++i) buf[i] = image_fft[i] * filter[i];
      fft.inverse();
      eo[s] = buf;
      for (std::size_t i = 0; i < n; ++i) {
        sum_an[i] += std::abs(eo[s][i]);
        sum_e[i] += eo[s][i].real();
        sum_o[i] += eo[s][i].imag();
      }
      if (s == 0) {
        for (double f : filter) em_n += f * f;
      }
    }

    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double x_energy = std::sqrt(sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]) + kEpsilon;
      const double mean_e = sum_e[i] / x_energy, mean_o = sum_o[i] / x_energy;
      for (int s = 0; s < kScales; ++s) {
        const double e = eo[s][i].real(), od = eo[s][i].imag();
        energy[i] += e * mean_e + od * mean_o - std::abs(e * mean_o - od * mean_e);
      }
    }

    std::vector<double> e2(n);
    for (std::size_t i = 0; i < n; ++i) e2[i] = std::norm(eo[0][i]);
    const double mean_e2n = -median(std::move(e2)) / std::log(0.5);
    const double noise_power = em_n > 0.0 ? mean_e2n / em_n : 0.0;

    double sum_an2 = 0.0, sum_aiaj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int si = 0; si < kScales; ++si) {
        sum_an2 += ifft_filter[si][i] * ifft_filter[si][i];
        for (int sj = si + 1; sj < kScales; ++sj) sum_aiaj += ifft_filter[si][i] * ifft_filter[sj][i];
      }
    }
    const double noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_aiaj;
    const double tau = std::sqrt(std::max(noise_energy2, 0.0) / 2.0);
    const double noise_mean = tau * std::sqrt(std::numbers::pi / 2.0);
    const double noise_sigma = std::sqrt((2.0 - std::numbers::pi / 2.0) * tau * tau);
    const double threshold = (noise_mean + kNoiseK * noise_sigma) / 1.7;

    for (std::size_t i = 0; i < n; ++i) {
      energy_all[i] += std::max(energy[i] - threshold, 0.0);
      an_all[i] += sum_an[i];
    }
  }

  Tensor pc({rows, cols});
  auto out = pc.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = an_all[i] > 0.0 ? energy_all[i] / an_all[i] : 0.0;
  return pc;
}

double fsim(const ImagePair& p) {
  require_same_shape(p.prediction, p.truth, "image pair");
  if (!(p.range > 0.0) || !std::isfinite(p.range)) {
    throw std::invalid_argument("image dynamic range must be positive and finite");
  }
  Tensor y1 = luminance(p.prediction);
  Tensor y2 = luminance(p.truth);
  if (y1.extent(0) < kMinSide || y1.extent(1) < kMinSide) {
    throw ShapeError("FSIM needs at least an 8x8 image, got " + to_string(y1.shape()));
  }
  const double to_255 = 255.0 / p.range;
  for (double& v : y1.data()) v *= to_255;
  for (double& v : y2.data()) v *= to_255;

  const std::size_t min_dim = std::min(y1.extent(0), y1.extent(1));
  const auto factor = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(min_dim) / 256.0)));
  y1 = downsample(y1, factor);
  y2 = downsample(y2, factor);
  const std::size_t h = y1.extent(0), w = y1.extent(1);

  const Tensor pc1 = phase_congruency(y1);
  const Tensor pc2 = phase_congruency(y2);
  const auto g1 = gradient_magnitude(y1.data(), h, w);
  const auto g2 = gradient_magnitude(y2.data(), h, w);

  auto a = pc1.data();
  auto b = pc2.data();
  double num = 0.0, den = 0.0, grad_only = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) {
    const double s_pc = (2.0 * a[i] * b[i] + kT1) / (a[i] * a[i] + b[i] * b[i] + kT1);
    const double s_g = (2.0 * g1[i] * g2[i] + kT2) / (g1[i] * g1[i] + g2[i] * g2[i] + kT2);
    const double pcm = std::max(a[i], b[i]);
    num += s_pc * s_g * pcm;
    den += pcm;
    grad_only += s_g;
  }
  // With no phase-congruent structure anywhere, weight all pixels equally.
  if (den == 0.0) return grad_only / static_cast<double>(h * w);
  return num / den;
}

}  // namespace wconv
