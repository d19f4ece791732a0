#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "wconv/tensor.hpp"

namespace wconv {

/// n x n counts; rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n);
  ConfusionMatrix(std::size_t n, std::vector<std::uint64_t> counts);

  static ConfusionMatrix from_predictions(std::size_t n, std::span<const int> truth,
                                          std::span<const int> predicted);

  void add(int truth, int predicted, std::uint64_t count = 1);

  std::size_t classes() const { return n_; }
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

/// trace / total. Throws std::invalid_argument on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// Per-class TP / (TP + (FP + FN) / 2); a class with no support and no
/// predictions scores 0.
std::vector<double> per_class_f1(const ConfusionMatrix& cm);

/// Macro average of per_class_f1. Throws std::invalid_argument when empty.
double f1_score(const ConfusionMatrix& cm);

/**
 * Prediction and ground truth with dynamic range `range` (L).
 *
 * Images are [H, W], [1, H, W] or [3, H, W]. PSNR and NRMSE use every
 * channel; SSIM, UIQ and FSIM work on ITU-R BT.601 luminance.
 */
struct ImagePair {
  const Tensor& prediction;
  const Tensor& truth;
  double range = 1.0;
};

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(L^2 / MSE); kPsnrIdentical (+inf) when MSE is zero.
double psnr(const ImagePair& p);

/// ||prediction - truth||_2 / ||truth||_2. Throws std::domain_error for a
/// zero-norm ground truth.
double nrmse(const ImagePair& p);

/// Mean SSIM over every fully contained 11x11 Gaussian (sigma 1.5) window,
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2. Throws ShapeError below 11x11.
double ssim(const ImagePair& p);

/// Mean universal quality index over 8x8 sliding windows. Windows whose
/// denominator vanishes are skipped; if all are skipped the result is 1 for
/// identical images and a std::domain_error otherwise.
double uiq(const ImagePair& p);

/// Feature similarity: phase congruency (4 scales, 4 orientations, log-Gabor)
/// and Scharr gradient magnitude, pooled by max phase congruency. Images are
/// rescaled to [0, 255] first. Throws ShapeError below 8x8.
double fsim(const ImagePair& p);

/// [H, W] luminance of an image (identity for single-channel input).
Tensor luminance(const Tensor& image);

/// Phase congruency map of a [H, W] image (exposed for testing).
Tensor phase_congruency(const Tensor& gray);

struct ImageMetrics {
  double nrmse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double fsim = 0.0;
  double uiq = 0.0;
};

ImageMetrics evaluate_image_metrics(const ImagePair& p);

}  // namespace wconv
