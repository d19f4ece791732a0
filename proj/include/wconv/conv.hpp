#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "wconv/density.hpp"
#include "wconv/tensor.hpp"

namespace wconv {

/// Filter bank: weights [F, C_in, K, K] with K odd, bias [F].
struct KernelTensor {
  Tensor weights;
  Tensor bias;

  KernelTensor() = default;
  KernelTensor(Tensor weights, Tensor bias);
  /// Zero weights and bias.
  KernelTensor(std::size_t filters, std::size_t channels, std::size_t k);

  std::size_t filters() const { return weights.extent(0); }
  std::size_t channels() const { return weights.extent(1); }
  std::size_t k() const { return weights.extent(2); }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  friend bool operator==(const KernelTensor&, const KernelTensor&) = default;
};

/// Zero padding and stride shared by both spatial axes.
struct ConvGeometry {
  std::size_t padding = 0;
  std::size_t stride = 1;

  /// Resolution-preserving geometry: pad (K-1)/2, stride 1.
  static ConvGeometry same(std::size_t k) { return {(k - 1) / 2, 1}; }

  /// (n + 2 pad - k) / stride + 1; throws ShapeError when k does not fit or
  /// the stride does not divide the padded span evenly.
  std::size_t output_extent(std::size_t n, std::size_t k) const;
};

/// Dimensions of one single-image convolution, resolved and validated.
struct ConvDims {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t filters = 0;
  std::size_t k = 0;
  std::size_t padding = 0;
  std::size_t stride = 1;
  std::size_t out_height = 0;
  std::size_t out_width = 0;

  static ConvDims resolve(std::size_t channels, std::size_t height, std::size_t width,
                          const KernelTensor& kernels, const ConvGeometry& geom);

  std::size_t input_size() const { return channels * height * width; }
  std::size_t output_size() const { return filters * out_height * out_width; }
  std::size_t weight_size() const { return filters * channels * k * k; }
};

// Span-level kernels for a single image in [C, H, W] layout. The forward pass
// overwrites `out`; the backward pass overwrites all three gradient buffers.
// Accumulation order per output element is fixed: bias, then input channel,
// kernel row, kernel column.
void conv2d_image_forward(std::span<const double> input, std::span<const double> weights,
                          std::span<const double> bias, std::span<double> out, const ConvDims& dims);

void conv2d_image_backward(std::span<const double> input, std::span<const double> weights,
                           std::span<const double> upstream, std::span<double> grad_input,
                           std::span<double> grad_weights, std::span<double> grad_bias,
                           const ConvDims& dims);

/// Cross-correlation of input [C_in, H, W] with every filter, plus bias.
/// Returns [F, H_out, W_out].
Tensor conv2d_forward(const Tensor& input, const KernelTensor& kernels, const ConvGeometry& geom);

/// W_phi = phi o w for every filter and input channel; `kernels` is untouched.
KernelTensor apply_density(const KernelTensor& kernels, const DensityFunction& d);

/// In-place variant of apply_density over a [F, C, K, K] weight buffer.
void apply_density_into(std::span<const double> weights, const DensityFunction& d,
                        std::span<double> out);

/// conv2d_forward with the density-weighted filter bank.
Tensor wconv2d_forward(const Tensor& input, const KernelTensor& kernels, const DensityFunction& d,
                       const ConvGeometry& geom);

struct ConvGradients {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

ConvGradients conv2d_backward(const Tensor& input, const KernelTensor& kernels,
                              const ConvGeometry& geom, const Tensor& upstream);

/// Gradients of wconv2d_forward with respect to the raw weights W, so the
/// weight gradient is phi o (gradient with respect to W_phi).
ConvGradients wconv2d_backward(const Tensor& input, const KernelTensor& kernels,
                               const DensityFunction& d, const ConvGeometry& geom,
                               const Tensor& upstream);

struct OverheadTiming {
  /// Medians of the end-to-end forward calls.
  double standard_seconds = 0.0;
  double weighted_seconds = 0.0;
  /// Median of apply_density alone, the only extra work of the weighted path.
  double density_seconds = 0.0;
  /// Median over interleaved (weighted, standard) pairs of their time ratio.
  double paired_ratio = 0.0;

  double ratio() const { return paired_ratio; }
  /// 1 + density / standard: the overhead with the shared convolution cost
  /// factored out, resolvable far below timer noise.
  double component_ratio() const { return 1.0 + density_seconds / standard_seconds; }
};

/// Forward wall-clock of standard vs weighted convolution on a random
/// [c, n, n] input with f filters of size k x k ("same" geometry). Calls are
/// interleaved with alternating order and preceded by a warm-up pass.
/// Requires reps >= 10.
OverheadTiming overhead_benchmark(std::size_t n, std::size_t c, std::size_t f, std::size_t k,
                                  std::size_t reps, std::uint64_t seed = 1);

}  // namespace wconv
