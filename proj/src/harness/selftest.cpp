#include <cmath>
#include <filesystem>
#include <functional>

#include <fmt/format.h>

#include "wconv/conv.hpp"
#include "wconv/experiment.hpp"
#include "wconv/loss.hpp"
#include "wconv/optim.hpp"

namespace wconv {

namespace {

using Check = std::function<std::string()>;  // empty string on success

SelftestCase run_case(const std::string& name, const Check& check) {
  try {
    const std::string failure = check();
    return {name, failure.empty(), failure.empty() ? "ok" : failure};
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

double naive_output(const Tensor& x, const KernelTensor& kt, const Tensor& w, std::size_t f, std::size_t oy,
                    std::size_t ox, std::size_t pad) {
  const std::size_t c = x.extent(0), h = x.extent(1), wd = x.extent(2), k = kt.k();
  double s = kt.bias[f];
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const auto y = static_cast<long>(oy + i) - static_cast<long>(pad);
        const auto xx = static_cast<long>(ox + j) - static_cast<long>(pad);
        if (y < 0 || xx < 0 || y >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
        s += w(f, ch, i, j) * x(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
      }
    }
  }
  return s;
}

std::string check_density() {
  for (const auto& coeffs : {std::vector<double>{0.8}, std::vector<double>{0.5, 0.9}}) {
    const auto d = build_density(2 * coeffs.size() + 1, 1.0, coeffs);
    if (const auto v = validate_density(d); !v.empty()) return "violation: " + v.front().detail;
  }
  for (int i = 0; i <= 20; ++i) {
    const double a = 0.5 + 0.05 * i;
    if (!validate_density(build_density(3, 1.0, {a})).empty()) return fmt::format("3x3 alpha {} invalid", a);
    for (int j = 0; j <= 10; ++j) {
      const double b = 0.5 + 0.1 * j;
      const double c = 0.05 + 0.095 * i;
      if (!validate_density(build_density(5, 1.0, {c, b})).empty()) return fmt::format("5x5 ({}, {}) invalid", c, b);
    }
  }
  return {};
}

std::string check_uniform_reduction(std::uint64_t seed) {
  Rng rng(seed);
  for (int t = 0; t < 25; ++t) {
    const std::size_t k = 1 + 2 * rng.below(3);
    const std::size_t h = k + rng.below(8), w = k + rng.below(8);
    const std::size_t c = 1 + rng.below(3), f = 1 + rng.below(3);
    const Tensor x = fill_normal({c, h, w}, 0.0, 1.0, rng);
    const KernelTensor kt(fill_normal({f, c, k, k}, 0.0, 1.0, rng), fill_normal({f}, 0.0, 1.0, rng));
    const ConvGeometry g = ConvGeometry::same(k);
    const Tensor a = conv2d_forward(x, kt, g);
    const Tensor b = wconv2d_forward(x, kt, uniform_density(k), g);
    if (max_abs_diff(a, b) > 1e-15) return fmt::format("instance {} differs by {}", t, max_abs_diff(a, b));
  }
  return {};
}

std::string check_conv_oracle(std::uint64_t seed) {
  Rng rng(seed + 1);
  for (int t = 0; t < 25; ++t) {
    const std::size_t k = 1 + 2 * rng.below(3);
    const std::size_t h = k + rng.below(5), w = k + rng.below(5);
    const std::size_t c = 1 + rng.below(3), f = 1 + rng.below(4);
    const Tensor x = fill_normal({c, h, w}, 0.0, 1.0, rng);
    const KernelTensor kt(fill_normal({f, c, k, k}, 0.0, 1.0, rng), fill_normal({f}, 0.0, 1.0, rng));
    std::vector<double> coeffs;
    for (std::size_t i = 0; i < (k - 1) / 2; ++i) coeffs.push_back(rng.uniform(0.5, 1.5));
    const DensityFunction d = build_density(k, 1.0, coeffs);
    const ConvGeometry g = ConvGeometry::same(k);
    const Tensor out = wconv2d_forward(x, kt, d, g);
    Tensor weighted = kt.weights;
    for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] *= d.phi()[i % (k * k)];
    for (std::size_t ff = 0; ff < f; ++ff) {
      for (std::size_t oy = 0; oy < h; ++oy) {
        for (std::size_t ox = 0; ox < w; ++ox) {
          const double expect = naive_output(x, kt, weighted, ff, oy, ox, g.padding);
          if (std::abs(out(ff, oy, ox) - expect) > 1e-12) return fmt::format("instance {} mismatch", t);
        }
      }
    }
  }
  return {};
}

std::string check_conv_gradient(std::uint64_t seed) {
  Rng rng(seed + 2);
  Conv2d layer(2, 2, 3, ConvVariant::weighted, build_density(3, 1.0, {0.7}));
  layer.kernels() = KernelTensor(fill_normal({2, 2, 3, 3}, 0.0, 0.5, rng), fill_normal({2}, 0.0, 0.5, rng));
  const Tensor x = fill_normal({1, 2, 5, 5}, 0.0, 1.0, rng);
  const Tensor probe = fill_normal({1, 2, 5, 5}, 0.0, 1.0, rng);
  auto objective = [&] { return frobenius_inner(layer.forward(x, Mode::train), probe); };
  objective();
  layer.backward(probe);
  const Tensor analytic = layer.gradients().weights;
  const double h = 1e-5;
  Tensor& w = layer.kernels().weights;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + h;
    const double up = objective();
    w[i] = saved - h;
    const double down = objective();
    w[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(numeric) + std::abs(analytic[i]));
    if (err > 1e-5) return fmt::format("weight {} relative error {}", i, err);
  }
  return {};
}

std::string check_parameter_parity(std::uint64_t seed) {
  Rng a(seed), b(seed);
  const auto d = build_density(3, 1.0, {0.8});
  const Model vs = build_mini_vgg(10, ConvVariant::standard, std::nullopt, a);
  const Model vw = build_mini_vgg(10, ConvVariant::weighted, d, b);
  if (vs.parameter_count() != vw.parameter_count()) return "mini-VGG counts differ";
  const Model ds = build_mini_dncnn(6, 16, ConvVariant::standard, std::nullopt, a);
  const Model dw = build_mini_dncnn(6, 16, ConvVariant::weighted, d, b);
  if (ds.parameter_count() != dw.parameter_count()) return "mini-DnCNN counts differ";
  return {};
}

std::string check_metrics(std::uint64_t seed) {
  Rng rng(seed + 3);
  const Tensor img = fill_uniform({3, 24, 24}, 0.05, 0.95, rng);
  const ImagePair same{img, img, 1.0};
  if (!std::isinf(psnr(same))) return "PSNR of identical images is finite";
  if (nrmse(same) != 0.0) return "NRMSE of identical images is nonzero";
  if (std::abs(ssim(same) - 1.0) > 1e-12) return "SSIM of identical images is not 1";
  if (std::abs(uiq(same) - 1.0) > 1e-12) return "UIQ of identical images is not 1";
  if (std::abs(fsim(same) - 1.0) > 1e-12) return "FSIM of identical images is not 1";
  const Tensor shifted = add(img, Tensor::full(img.shape(), 0.1));
  if (std::abs(psnr({shifted, img, 1.0}) - 20.0) > 1e-9) return "PSNR of a 0.1 offset is not 20 dB";
  return {};
}

std::string check_parsers(std::uint64_t seed) {
  Rng rng(seed + 4);
  LabeledImageSet set;
  set.images = Tensor({2, 3, 32, 32});
  for (double& v : set.images.data()) v = static_cast<double>(rng.below(256)) / 255.0;
  set.fine_labels = {7, 99};
  set.coarse_labels = {1, 19};
  if (!(parse_cifar100(encode_cifar100(set)).images == set.images)) return "CIFAR round trip changed pixels";

  const auto path = std::filesystem::temp_directory_path() / fmt::format("wconv_selftest_{}.ppm", seed);
  Tensor img({3, 5, 7});
  for (double& v : img.data()) v = static_cast<double>(rng.below(256)) / 255.0;
  save_ppm(path, img);
  const Tensor back = load_ppm(path);
  std::filesystem::remove(path);
  if (!(back == img)) return "PPM round trip changed pixels";

  ReportRow row;
  row.method = "weighted";
  row.alpha = {0.1, 0.9};
  row.psnr = std::numeric_limits<double>::infinity();
  row.val_loss = 0.125;
  if (!(parse_report(report_to_csv({row})) == MetricReport{row})) return "report CSV round trip differs";
  return {};
}

std::string check_schedule() {
  const CosineSchedule s{0.1, 30, 0.0};
  if (cosine_lr(0, s) != 0.1) return "cosine start is not the base rate";
  if (std::abs(cosine_lr(30, s)) > 1e-15) return "cosine end is not the minimum";
  return {};
}

}  // namespace

std::vector<SelftestCase> run_selftest(std::uint64_t seed) {
  return {
      run_case("density: reported tuples and grid points are valid rank-1 densities", check_density),
      run_case("conv: uniform density reproduces standard convolution",
               [seed] { return check_uniform_reduction(seed); }),
      run_case("conv: weighted forward matches direct summation", [seed] { return check_conv_oracle(seed); }),
      run_case("conv: weight gradient matches finite differences", [seed] { return check_conv_gradient(seed); }),
      run_case("nn: standard and weighted models have equal parameter counts",
               [seed] { return check_parameter_parity(seed); }),
      run_case("metrics: identity pairs score best; PSNR reference value", [seed] { return check_metrics(seed); }),
      run_case("data/report: CIFAR, PPM and CSV round trips", [seed] { return check_parsers(seed); }),
      run_case("optim: cosine schedule endpoints", check_schedule),
  };
}

}  // namespace wconv
