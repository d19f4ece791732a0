#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wconv/conv.hpp"
#include "wconv/density.hpp"
#include "wconv/rng.hpp"
#include "wconv/tensor.hpp"

namespace wconv {

enum class Mode { train, eval };
enum class ConvVariant { standard, weighted };

std::string to_string(ConvVariant v);
ConvVariant parse_conv_variant(const std::string& s);

/// A trainable tensor and its same-shaped gradient slot.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

/// Non-trainable persistent state (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Tensor* value;
};

/**
 * Differentiable layer over batched tensors (axis 0 is the batch).
 *
 * backward() must follow a forward() on the same layer and overwrites every
 * parameter gradient slot; it returns the gradient with respect to the input
 * of that forward call.
 */
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& upstream) = 0;
  virtual std::vector<ParamRef> parameters() { return {}; }
  virtual std::vector<BufferRef> buffers() { return {}; }
  virtual std::size_t parameter_count() const { return 0; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// "kind key=value ..." line; enough to rebuild the layer's structure.
  virtual std::string describe() const = 0;
};

class Identity final : public Layer {
 public:
  std::string kind() const override { return "identity"; }
  Tensor forward(const Tensor& x, Mode) override { return x; }
  Tensor backward(const Tensor& upstream) override { return upstream; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Identity>(*this); }
  std::string describe() const override { return "identity"; }
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  std::string describe() const override { return "relu"; }

 private:
  std::optional<Tensor> input_;
};

/// Non-overlapping 2x2 max pooling over [B, C, H, W]; odd trailing rows or
/// columns are dropped.
class MaxPool2d final : public Layer {
 public:
  explicit MaxPool2d(std::size_t size = 2);
  std::string kind() const override { return "maxpool2d"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }
  std::string describe() const override;
  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// Fully connected layer; inputs [B, ...] are flattened to [B, in].
class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);
  std::string kind() const override { return "dense"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<ParamRef> parameters() override;
  std::size_t parameter_count() const override { return weights_.size() + bias_.size(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  std::string describe() const override;

  /// Kaiming-normal weights (fan_in = in), zero bias.
  void init(Rng& rng);
  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weights_;  // [out, in]
  Tensor bias_;     // [out]
  Tensor grad_weights_;
  Tensor grad_bias_;
  std::optional<Tensor> input_;  // flattened [B, in]
  Shape input_shape_;
};

/// Row-wise softmax over [B, n].
class Softmax final : public Layer {
 public:
  std::string kind() const override { return "softmax"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }
  std::string describe() const override { return "softmax"; }

 private:
  std::optional<Tensor> output_;
};

/**
 * Per-channel batch normalisation over [B, C, H, W].
 *
 * Training mode normalises with the batch mean and biased variance and
 * updates running = momentum * running + (1 - momentum) * batch, using the
 * unbiased variance for the running estimate. Eval mode is the fixed affine
 * map given by the running statistics.
 */
class BatchNorm2d final : public Layer {
 public:
  explicit BatchNorm2d(std::size_t channels, double momentum = 0.9, double eps = 1e-5);
  std::string kind() const override { return "batchnorm2d"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<ParamRef> parameters() override;
  std::vector<BufferRef> buffers() override;
  std::size_t parameter_count() const override { return gamma_.size() + beta_.size(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm2d>(*this); }
  std::string describe() const override;

  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 private:
  std::size_t channels_;
  double momentum_;
  double eps_;
  Tensor gamma_, beta_;
  Tensor grad_gamma_, grad_beta_;
  Tensor running_mean_, running_var_;
  // Cached from the last forward.
  std::optional<Tensor> xhat_;
  std::vector<double> inv_std_;
  Mode last_mode_ = Mode::train;
};

/**
 * 2D convolution layer over [B, C_in, H, W].
 *
 * The weighted variant holds a fixed DensityFunction and recomputes
 * W_phi = phi o W on every forward call, so optimiser updates to W are always
 * reflected. Gradients are taken with respect to W; phi is not trainable and
 * the parameter count equals that of the standard variant.
 */
class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t k, ConvVariant variant,
         std::optional<DensityFunction> density = std::nullopt,
         std::optional<ConvGeometry> geometry = std::nullopt);

  std::string kind() const override { return "conv2d"; }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<ParamRef> parameters() override;
  std::size_t parameter_count() const override { return kernels_.parameter_count(); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::string describe() const override;

  ConvVariant variant() const { return variant_; }
  const std::optional<DensityFunction>& density() const { return density_; }
  const ConvGeometry& geometry() const { return geometry_; }
  KernelTensor& kernels() { return kernels_; }
  const KernelTensor& kernels() const { return kernels_; }
  const KernelTensor& gradients() const { return grads_; }

  /// Replaces the density (weighted variant only).
  void set_density(DensityFunction d);

 private:
  ConvVariant variant_;
  std::optional<DensityFunction> density_;
  ConvGeometry geometry_;
  KernelTensor kernels_;
  KernelTensor grads_;
  std::optional<Tensor> input_;
  std::vector<double> effective_weights_;
};

/// sqrt(2 / fan_in).
double kaiming_std(std::size_t fan_in);

/// Weights ~ N(0, 2 / (C_in K^2)), zero bias. Consumes exactly F*C*K*K
/// normal draws from rng.
KernelTensor kaiming_init(const KernelTensor& kernels, Rng& rng);

}  // namespace wconv
