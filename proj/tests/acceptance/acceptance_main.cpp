// Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
// Tolerances and workloads are pinned below; the exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "wconv/cli.hpp"
#include "wconv/conv.hpp"
#include "wconv/experiment.hpp"
#include "wconv/loss.hpp"
#include "wconv/optim.hpp"
#include "wconv/report.hpp"
#include "wconv/tensor_io.hpp"

using namespace wconv;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kUniformForwardTol = 1e-15;
constexpr double kUniformTrainingTol = 1e-12;
constexpr double kOracleTol = 1e-12;
constexpr double kFdStep = 1e-5;
constexpr double kLayerGradTol = 1e-5;
constexpr double kModelGradTol = 1e-4;
constexpr double kOverheadBound = 1.2;
constexpr std::size_t kOverheadReps = 50;
constexpr double kAccuracyFloor = 0.50;
constexpr double kPsnrGainDb = 3.0;
constexpr double kPsnrReferenceTol = 1e-9;
constexpr double kSsimOracleTol = 1e-10;

const fs::path kConfigDir = fs::path(WCONV_SOURCE_DIR) / "configs";

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) detail = what;
    passed = passed && ok;
  }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wconv_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void progress(const std::string& line) { std::cerr << "    " << line << '\n'; }

// ---------------------------------------------------------------------------

Outcome uniform_equivalence() {
  Outcome o;
  Rng rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + 2 * rng.below(3);
    const std::size_t h = k + rng.below(17 - k), w = k + rng.below(17 - k);
    const std::size_t c = 1 + rng.below(4), f = 1 + rng.below(4);
    const std::size_t pad = rng.below((k - 1) / 2 + 1);
    const Tensor x = fill_normal({c, h, w}, 0.0, 1.0, rng);
    const KernelTensor kt(fill_normal({f, c, k, k}, 0.0, 1.0, rng), fill_normal({f}, 0.0, 1.0, rng));
    const ConvGeometry g{pad, 1};
    worst = std::max(worst, max_abs_diff(wconv2d_forward(x, kt, uniform_density(k), g), conv2d_forward(x, kt, g)));
  }
  o.require(worst <= kUniformForwardTol, fmt::format("forward max-abs difference {}", worst));

  Rng ra(1002), rb(1002);
  Model s = build_mini_dncnn(4, 8, ConvVariant::standard, std::nullopt, ra);
  Model u = build_mini_dncnn(4, 8, ConvVariant::weighted, uniform_density(3), rb);
  Adam os, ou;
  Rng data(1003);
  const Tensor clean = fill_uniform({4, 3, 16, 16}, 0.0, 1.0, data);
  const Tensor noisy = add(clean, fill_normal(clean.shape(), 0.0, 0.05, data));
  double worst_loss = 0.0;
  for (int step = 0; step < 10; ++step) {
    const auto ls = mse_loss(s.forward(noisy, Mode::train), clean);
    const auto lu = mse_loss(u.forward(noisy, Mode::train), clean);
    worst_loss = std::max(worst_loss, std::abs(ls.value - lu.value));
    s.backward(ls.grad);
    u.backward(lu.grad);
    os.step(s.parameters());
    ou.step(u.parameters());
  }
  o.require(worst_loss <= kUniformTrainingTol, fmt::format("training loss difference {}", worst_loss));
  if (o.passed) o.detail = fmt::format("forward max diff {:.1e}, 10-step loss max diff {:.1e}", worst, worst_loss);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  Rng rng(2001);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + 2 * rng.below(3);
    const std::size_t pad = rng.below((k - 1) / 2 + 1);
    const std::size_t lo = k > 2 * pad ? k - 2 * pad : 1;
    const std::size_t h = lo + rng.below(9 - lo), w = lo + rng.below(9 - lo);
    const std::size_t c = 1 + rng.below(3), f = 1 + rng.below(4);
    const Tensor x = fill_normal({c, h, w}, 0.0, 1.0, rng);
    const KernelTensor kt(fill_normal({f, c, k, k}, 0.0, 1.0, rng), fill_normal({f}, 0.0, 1.0, rng));
    std::vector<double> coeffs;
    for (std::size_t i = 0; i < (k - 1) / 2; ++i) coeffs.push_back(rng.uniform(0.05, 1.5));
    const ConvGeometry g{pad, 1};
    const Tensor std_out = conv2d_forward(x, kt, g);
    const Tensor w_out = wconv2d_forward(x, kt, build_density(k, 1.0, coeffs), g);
    worst = std::max(worst, max_abs_diff(std_out, oracle::conv2d(x, kt.weights, kt.bias, pad, 1)));
    worst = std::max(worst, max_abs_diff(w_out, oracle::conv2d(x, kt.weights, kt.bias, pad, 1,
                                                               oracle::density_matrix(1.0, coeffs))));
  }
  o.require(worst <= kOracleTol, fmt::format("max-abs deviation {}", worst));
  if (o.passed) o.detail = fmt::format("100 instances, max deviation {:.1e}", worst);
  return o;
}

// Worst relative error between analytic and numeric gradients of
// <probe, layer(x)> over the input and every parameter.
double layer_gradient_error(Layer& layer, Tensor x, Rng& rng) {
  const Tensor probe = fill_normal(layer.forward(x, Mode::train).shape(), 0.0, 1.0, rng);
  auto f = [&] { return frobenius_inner(layer.forward(x, Mode::train), probe); };
  f();
  const Tensor gx = layer.backward(probe);
  std::vector<Tensor> grads;
  for (const auto& p : layer.parameters()) grads.push_back(*p.grad);
  double worst = oracle::max_relative_error(gx, oracle::numeric_gradient(x, f, kFdStep));
  const auto params = layer.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    worst = std::max(worst, oracle::max_relative_error(grads[i], oracle::numeric_gradient(*params[i].value, f, kFdStep)));
  }
  return worst;
}

double model_gradient_error(Model& m, const Tensor& x, const std::function<LossResult(const Tensor&)>& loss) {
  m.backward(loss(m.forward(x, Mode::train)).grad);
  std::vector<Tensor> grads;
  for (const auto& p : m.parameters()) grads.push_back(*p.grad);
  auto f = [&] { return loss(m.forward(x, Mode::train)).value; };
  double worst = 0.0;
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    worst = std::max(worst,
                     oracle::max_relative_error(grads[i], oracle::numeric_gradient(*params[i].value, f, kFdStep), 1e-6));
  }
  return worst;
}

Outcome gradient_correctness() {
  Outcome o;
  Rng rng(3001);
  std::vector<std::pair<std::string, double>> errors;

  Tensor relu_in = fill_normal({2, 2, 4, 4}, 0.0, 1.0, rng);
  for (double& v : relu_in.data()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  Relu relu;
  errors.emplace_back("relu", layer_gradient_error(relu, relu_in, rng));
  MaxPool2d pool;
  errors.emplace_back("maxpool", layer_gradient_error(pool, fill_normal({2, 2, 4, 4}, 0.0, 1.0, rng), rng));
  Dense dense(8, 5);
  dense.init(rng);
  dense.bias() = fill_normal({5}, 0.0, 0.5, rng);
  errors.emplace_back("dense", layer_gradient_error(dense, fill_normal({3, 2, 2, 2}, 0.0, 1.0, rng), rng));
  Softmax softmax;
  errors.emplace_back("softmax", layer_gradient_error(softmax, fill_normal({3, 6}, 0.0, 2.0, rng), rng));
  BatchNorm2d bn(3);
  for (auto& p : bn.parameters()) *p.value = fill_normal(p.value->shape(), 1.0, 0.3, rng);
  errors.emplace_back("batchnorm", layer_gradient_error(bn, fill_normal({4, 3, 3, 3}, 0.5, 2.0, rng), rng));
  for (ConvVariant v : {ConvVariant::standard, ConvVariant::weighted}) {
    for (std::size_t k : {3U, 5U}) {
      std::optional<DensityFunction> d;
      if (v == ConvVariant::weighted) d = k == 3 ? build_density(3, 1.0, {0.8}) : build_density(5, 1.0, {0.5, 0.9});
      Conv2d conv(2, 3, k, v, d);
      conv.kernels() = KernelTensor(fill_normal({3, 2, k, k}, 0.0, 0.5, rng), fill_normal({3}, 0.0, 0.5, rng));
      errors.emplace_back(fmt::format("conv-{}-{}", to_string(v), k),
                          layer_gradient_error(conv, fill_normal({2, 2, 6, 6}, 0.0, 1.0, rng), rng));
    }
  }
  double worst_layer = 0.0;
  for (const auto& [name, err] : errors) {
    o.require(err <= kLayerGradTol, fmt::format("{} relative error {}", name, err));
    worst_layer = std::max(worst_layer, err);
  }

  VggOptions opt;
  opt.in_channels = 1;
  opt.image_size = 8;
  opt.widths = {2, 2, 3};
  Model vgg = build_mini_vgg(3, ConvVariant::weighted, build_density(3, 1.0, {0.8}), rng, opt);
  o.require(vgg.parameter_count() <= 1000, "mini-VGG check model exceeds 1k parameters");
  const std::vector<int> labels{0, 1, 2, 1};
  const double vgg_err = model_gradient_error(vgg, fill_normal({4, 1, 8, 8}, 0.0, 1.0, rng), [&](const Tensor& out) {
    return cross_entropy_label_smoothing(out, labels, 0.1);
  });
  o.require(vgg_err <= kModelGradTol, fmt::format("mini-VGG relative error {}", vgg_err));

  DncnnOptions dopt;
  dopt.channels = 1;
  Model dn = build_mini_dncnn(3, 4, ConvVariant::weighted, build_density(3, 1.0, {0.7}), rng, dopt);
  for (auto& p : dn.parameters()) {
    if (p.value->rank() == 4) *p.value = fill_normal(p.value->shape(), 0.0, 0.4, rng);
  }
  o.require(dn.parameter_count() <= 1000, "mini-DnCNN check model exceeds 1k parameters");
  const Tensor target = fill_uniform({2, 1, 6, 6}, 0.0, 1.0, rng);
  const double dn_err = model_gradient_error(dn, fill_uniform({2, 1, 6, 6}, 0.0, 1.0, rng),
                                             [&](const Tensor& out) { return mse_loss(out, target); });
  o.require(dn_err <= kModelGradTol, fmt::format("mini-DnCNN relative error {}", dn_err));
  if (o.passed) {
    o.detail = fmt::format("{} layer checks worst {:.1e}; whole-model mini-VGG {:.1e} ({} params), mini-DnCNN {:.1e} ({} params)",
                           errors.size(), worst_layer, vgg_err, vgg.parameter_count(), dn_err, dn.parameter_count());
  }
  return o;
}

Outcome parameter_parity() {
  Outcome o;
  std::vector<std::string> counts;
  for (std::size_t classes : {10U, 100U}) {
    Rng a(4001), b(4001);
    const auto s = build_mini_vgg(classes, ConvVariant::standard, std::nullopt, a).parameter_count();
    const auto w = build_mini_vgg(classes, ConvVariant::weighted, build_density(3, 1.0, {0.8}), b).parameter_count();
    o.require(s == w, fmt::format("mini-VGG/{}: {} vs {}", classes, s, w));
    counts.push_back(fmt::format("mini-VGG/{} {}", classes, s));
  }
  for (std::size_t k : {3U, 5U}) {
    Rng a(4002), b(4002);
    DncnnOptions opt;
    opt.kernel = k;
    const auto d = k == 3 ? build_density(3, 1.0, {0.8}) : build_density(5, 1.0, {0.5, 0.9});
    const auto s = build_mini_dncnn(6, 16, ConvVariant::standard, std::nullopt, a, opt).parameter_count();
    const auto w = build_mini_dncnn(6, 16, ConvVariant::weighted, d, b, opt).parameter_count();
    o.require(s == w, fmt::format("mini-DnCNN k={}: {} vs {}", k, s, w));
    counts.push_back(fmt::format("mini-DnCNN k{} {}", k, s));
  }
  if (o.passed) {
    o.detail = "equal counts:";
    for (const auto& c : counts) o.detail += " " + c + ";";
    o.detail.pop_back();
  }
  return o;
}

Outcome density_construction() {
  Outcome o;
  const auto d3 = build_density(3, 1.0, {0.8});
  o.require(d3.alpha() == std::vector<double>{0.8, 1.0, 0.8}, "3x3 alpha differs from (0.8, 1, 0.8)");
  o.require(validate_density(d3).empty(), "3x3 (0.8) reports violations");
  const auto d5 = build_density(5, 1.0, {0.5, 0.9});
  o.require(d5.alpha() == std::vector<double>{0.5, 0.9, 1.0, 0.9, 0.5}, "5x5 alpha differs from (0.5, 0.9, 1, 0.9, 0.5)");
  o.require(validate_density(d5).empty(), "5x5 (0.5, 0.9) reports violations");

  std::size_t points = 0;
  auto check = [&](const DensityFunction& d, const std::vector<double>& coeffs) {
    ++points;
    const auto v = validate_density(d);
    o.require(v.empty(), fmt::format("grid point {} violation: {}", format_alpha(coeffs), v.empty() ? "" : v.front().detail));
    const auto phi = oracle::density_matrix(1.0, coeffs);
    for (std::size_t i = 0; i < d.k(); ++i) {
      for (std::size_t j = 0; j < d.k(); ++j) {
        o.require(d.phi()(i, j) == phi[i][j], fmt::format("grid point {} phi mismatch", format_alpha(coeffs)));
      }
    }
  };
  for (double a : parse_grid("0.5:1.5:0.05")) check(build_density(3, 1.0, {a}), {a});
  for (double a1 : parse_grid("0.05:1.0:0.05")) {
    for (double a2 : parse_grid("0.5:1.5:0.1")) check(build_density(5, 1.0, {a1, a2}), {a1, a2});
  }
  if (o.passed) o.detail = fmt::format("reported tuples valid; {} grid densities symmetric, PSD, rank 1", points);
  return o;
}

Outcome overhead() {
  Outcome o;
  const OverheadTiming big = overhead_benchmark(256, 16, 16, 3, kOverheadReps);
  const OverheadTiming small = overhead_benchmark(32, 16, 16, 3, kOverheadReps);
  o.require(big.ratio() <= kOverheadBound, fmt::format("N=256 median ratio {:.4f} exceeds {}", big.ratio(), kOverheadBound));
  o.require(small.component_ratio() > big.component_ratio(),
            fmt::format("overhead at N=32 ({:.6f}) not above N=256 ({:.6f})", small.component_ratio(),
                        big.component_ratio()));
  o.detail = fmt::format(
      "N=256 median ratio {:.4f} (bound {}); density overhead N=32 {:.3e} > N=256 {:.3e}; end-to-end N=32 {:.4f}",
      big.ratio(), kOverheadBound, small.component_ratio() - 1.0, big.component_ratio() - 1.0, small.ratio());
  return o;
}

Outcome desk_scale_results() {
  Outcome o;
  std::vector<std::string> parts;

  // (a) sweep selection
  {
    ExperimentConfig cfg = load_config(kConfigDir / "toy_denoise.ini");
    cfg.output = scratch("sweep");
    progress("sweep over alpha1 (toy denoising)");
    const MetricReport rows = sweep_alpha(cfg, progress);
    const ReportRow* chosen = nullptr;
    const ReportRow* uniform = nullptr;
    for (const auto& r : rows) {
      if (r.selected) chosen = &r;
      if (r.alpha == std::vector<double>{1.0}) uniform = &r;
    }
    o.require(rows.size() == 5, fmt::format("sweep produced {} rows", rows.size()));
    o.require(chosen && uniform, "sweep lacks a selected or a uniform row");
    if (chosen && uniform) {
      o.require(chosen->val_loss <= uniform->val_loss, "selected alpha has higher validation loss than alpha=1");
      parts.push_back(fmt::format("(a) selected alpha {} val {:.3e} <= alpha 1 val {:.3e}", format_alpha(chosen->alpha),
                                  chosen->val_loss, uniform->val_loss));
    }
  }
  // (b) classification floor
  {
    ExperimentConfig cfg = load_config(kConfigDir / "classification.ini");
    cfg.output = scratch("classification");
    progress("classification run");
    const auto r = run_training(cfg, progress);
    o.require(r.row.accuracy >= kAccuracyFloor,
              fmt::format("classification accuracy {:.4f} below {}", r.row.accuracy, kAccuracyFloor));
    parts.push_back(fmt::format("(b) {}-class accuracy {:.1f}% (floor {:.0f}%)", cfg.data.classes, 100 * r.row.accuracy,
                                100 * kAccuracyFloor));
  }
  // (c) denoising gain
  {
    ExperimentConfig cfg = load_config(kConfigDir / "denoise.ini");
    cfg.output = scratch("denoise");
    progress("denoising run");
    const auto r = run_training(cfg, progress);
    const double gain = r.row.psnr - r.noisy_metrics->psnr;
    o.require(gain >= kPsnrGainDb, fmt::format("denoising PSNR gain {:.2f} dB below {}", gain, kPsnrGainDb));
    parts.push_back(fmt::format("(c) PSNR {:.2f} -> {:.2f} dB (+{:.2f})", r.noisy_metrics->psnr, r.row.psnr, gain));
  }
  std::string summary;
  for (const auto& p : parts) summary += (summary.empty() ? "" : "; ") + p;
  o.detail = o.passed ? summary : o.detail + " | " + summary;
  return o;
}

Tensor structured_image(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      t(i, j) = 0.5 + 0.3 * std::sin(0.7 * static_cast<double>(i)) * std::cos(0.4 * static_cast<double>(j));
    }
  }
  return t;
}

Outcome metrics_suite() {
  Outcome o;
  Rng rng(8001);
  const Tensor rgb = fill_uniform({3, 32, 32}, 0.05, 0.95, rng);
  for (const Tensor& img : {rgb, structured_image(32)}) {
    const ImageMetrics m = evaluate_image_metrics({img, img});
    o.require(std::isinf(m.psnr) && m.psnr > 0, "identity PSNR is not +inf");
    o.require(m.nrmse == 0.0, "identity NRMSE is not 0");
    o.require(std::abs(m.ssim - 1.0) <= 1e-12, fmt::format("identity SSIM {}", m.ssim));
    o.require(std::abs(m.fsim - 1.0) <= 1e-12, fmt::format("identity FSIM {}", m.fsim));
    o.require(std::abs(m.uiq - 1.0) <= 1e-12, fmt::format("identity UIQ {}", m.uiq));
  }
  const Tensor gt = structured_image(16);
  const double p = psnr({add(gt, Tensor::full(gt.shape(), 0.1)), gt, 1.0});
  o.require(std::abs(p - 20.0) <= kPsnrReferenceTol, fmt::format("PSNR of 0.1 error is {}", p));

  double ssim_dev = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Tensor x = fill_uniform({16, 16}, 0.0, 1.0, rng);
    const Tensor y = add(scale(x, rng.uniform(0.3, 1.0)), fill_uniform({16, 16}, 0.0, 0.3, rng));
    ssim_dev = std::max(ssim_dev, std::abs(ssim({y, x}) - oracle::ssim(y, x, 1.0)));
  }
  o.require(ssim_dev <= kSsimOracleTol, fmt::format("SSIM oracle deviation {}", ssim_dev));

  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(9), m = 1 + rng.below(300);
    std::vector<int> truth(m), pred(m);
    for (std::size_t i = 0; i < m; ++i) {
      truth[i] = static_cast<int>(rng.below(n));
      pred[i] = rng.uniform() < 0.6 ? truth[i] : static_cast<int>(rng.below(n));
    }
    const auto cm = ConfusionMatrix::from_predictions(n, truth, pred);
    const auto tally = oracle::tally(n, truth, pred);
    o.require(accuracy(cm) == tally.accuracy, fmt::format("accuracy mismatch on matrix {}", t));
    o.require(f1_score(cm) == tally.macro_f1, fmt::format("macro F1 mismatch on matrix {}", t));
  }
  if (o.passed) {
    o.detail = fmt::format("identity best values; PSNR 0.1-error {:.12f} dB; SSIM oracle dev {:.1e}; 50 tallies exact", p,
                           ssim_dev);
  }
  return o;
}

template <typename E, typename Fn>
bool raises(Fn&& fn) {
  try {
    fn();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f << bytes;
}

Outcome parsers() {
  Outcome o;
  const fs::path dir = scratch("parsers");
  Rng rng(9001);

  LabeledImageSet set;
  set.images = Tensor({3, 3, 32, 32});
  for (double& v : set.images.data()) v = static_cast<double>(rng.below(256)) / 255.0;
  set.fine_labels = {0, 57, 99};
  set.coarse_labels = {0, 11, 19};
  save_cifar100(dir / "fixture.bin", set);
  const LabeledImageSet back = load_cifar100(dir / "fixture.bin");
  o.require(back.images == set.images && back.fine_labels == set.fine_labels && back.coarse_labels == set.coarse_labels,
            "CIFAR fixture round trip differs");
  const auto bytes = encode_cifar100(set);
  o.require(encode_cifar100(parse_cifar100(bytes)) == bytes, "CIFAR byte round trip differs");

  for (const Shape& s : {Shape{1, 7, 5}, Shape{3, 9, 4}}) {
    Tensor img(s);
    for (double& v : img.data()) v = static_cast<double>(rng.below(256)) / 255.0;
    save_ppm(dir / "img.ppm", img);
    std::ifstream f(dir / "img.ppm", std::ios::binary);
    const std::string first((std::istreambuf_iterator<char>(f)), {});
    const Tensor loaded = load_ppm(dir / "img.ppm");
    save_ppm(dir / "again.ppm", loaded);
    std::ifstream g(dir / "again.ppm", std::ios::binary);
    const std::string second((std::istreambuf_iterator<char>(g)), {});
    o.require(loaded == img && first == second, "PPM round trip is not bit-exact");
  }

  std::size_t malformed = 0;
  auto expect_format_error = [&](const std::string& name, const std::function<void()>& fn) {
    ++malformed;
    o.require(raises<FormatError>(fn), "no FormatError for " + name);
  };
  expect_format_error("empty CIFAR", [] { parse_cifar100(std::vector<std::uint8_t>{}); });
  expect_format_error("short CIFAR", [] { parse_cifar100(std::vector<std::uint8_t>(kCifarRecord - 1)); });
  expect_format_error("ragged CIFAR", [] { parse_cifar100(std::vector<std::uint8_t>(2 * kCifarRecord + 7)); });
  expect_format_error("bad CIFAR label", [] {
    std::vector<std::uint8_t> b(kCifarRecord);
    b[0] = 20;
    parse_cifar100(b);
  });
  const std::vector<std::pair<std::string, std::string>> bad_ppm{
      {"empty", ""},
      {"ascii", "P3\n1 1\n255\n0 0 0\n"},
      {"bad magic", "Q6\n1 1\n255\n\x01\x02\x03"},
      {"zero width", std::string("P6\n0 1\n255\n")},
      {"16-bit", std::string("P5\n1 1\n65535\n\x01\x02", 15)},
      {"truncated", std::string("P6\n2 2\n255\n\x01\x02\x03", 14)},
      {"missing size", "P6\n#only a comment\n"},
  };
  for (const auto& [name, content] : bad_ppm) {
    write_bytes(dir / "bad.ppm", content);
    expect_format_error("PPM " + name, [&] { load_ppm(dir / "bad.ppm"); });
  }
  std::ostringstream tensor_bytes;
  write_tensor(tensor_bytes, Tensor({2, 2}, {1, 2, 3, 4}));
  expect_format_error("truncated tensor", [&] {
    std::istringstream in(tensor_bytes.str().substr(0, 20));
    read_tensor(in);
  });
  expect_format_error("tensor magic", [] {
    std::istringstream in("XXXXXXXX\x01\x00\x00\x00");
    read_tensor(in);
  });
  ++malformed;
  o.require(raises<ConfigError>([] { parse_config("format = 1\ntask = classification\n[model]\nrecipe = lenet\n"); }),
            "no ConfigError for unknown recipe");
  ++malformed;
  o.require(raises<std::invalid_argument>([] { parse_report("method,kernel\nweighted,3\n"); }),
            "no error for malformed report");
  fs::remove_all(dir);
  if (o.passed) o.detail = fmt::format("CIFAR and PPM round trips exact; {} malformed inputs rejected", malformed);
  return o;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = scratch("determinism");
  const std::string config = (kConfigDir / "toy_denoise.ini").string();
  std::vector<std::string> csv;
  for (const char* run : {"first", "second"}) {
    progress(std::string("sweep ") + run);
    const std::string out = (dir / run).string();
    const char* argv[] = {"wconv", "sweep", "--config", config.c_str(), "--out", out.c_str()};
    std::ostringstream sink_out, sink_err;
    const int code = run_cli(6, argv, sink_out, sink_err);
    o.require(code == kExitOk, fmt::format("sweep exited with {}: {}", code, sink_err.str()));
    csv.push_back(read_text(dir / run / "sweep.csv"));
  }
  const std::vector<std::string> volatile_columns{"timestamp", "sec_per_epoch"};
  const std::string a = drop_csv_columns(csv[0], volatile_columns), b = drop_csv_columns(csv[1], volatile_columns);
  o.require(!a.empty() && a == b, "sweep CSVs differ");
  if (o.passed) o.detail = fmt::format("two sweeps byte-identical ({} bytes without timing columns)", a.size());
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria{
      {"AC1", "uniform density reduces to standard convolution", uniform_equivalence},
      {"AC2", "forward passes match direct summation", oracle_equivalence},
      {"AC3", "analytic gradients match finite differences", gradient_correctness},
      {"AC4", "standard and weighted models have equal parameter counts", parameter_parity},
      {"AC5", "density construction and grid validity", density_construction},
      {"AC6", "weighted convolution overhead", overhead},
      {"AC7", "desk-scale training results", desk_scale_results},
      {"AC8", "image and classification metrics", metrics_suite},
      {"AC9", "dataset and file parsers", parsers},
      {"AC10", "sweep determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::cerr << c.id << ": " << c.title << '\n';
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << fmt::format("{:<5} {}  {}: {} [{:.1f}s]", c.id, o.passed ? "PASS" : "FAIL", c.title, o.detail, secs)
              << std::endl;
    failures += o.passed ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failures),
                           criteria.size())
            << std::endl;
  return failures == 0 ? 0 : 1;
}
