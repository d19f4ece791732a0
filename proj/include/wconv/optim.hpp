#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "wconv/nn.hpp"
#include "wconv/tensor.hpp"

namespace wconv {

/**
 * In-place parameter update rule.
 *
 * State slots are created on the first step and bound to the parameter list
 * by position; later steps must pass parameters of the same count and shapes.
 */
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<const ParamRef> params) = 0;
  virtual double learning_rate() const = 0;
  virtual void set_learning_rate(double lr) = 0;
  std::size_t steps() const { return steps_; }

 protected:
  /// Allocates zero slots on the first call, validates shapes afterwards.
  void bind(std::span<const ParamRef> params, std::vector<std::vector<Tensor>*> slot_sets);
  std::size_t steps_ = 0;
};

struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.9;
  /// Coupled L2 penalty: added to the gradient before the momentum update.
  double weight_decay = 0.5e-4;
};

/// v <- mu v + (g + lambda theta);  theta <- theta - lr v
class Sgd final : public Optimizer {
 public:
  explicit Sgd(SgdConfig config = {}) : config_(config) {}
  void step(std::span<const ParamRef> params) override;
  double learning_rate() const override { return config_.lr; }
  void set_learning_rate(double lr) override { config_.lr = lr; }
  const std::vector<Tensor>& velocity() const { return velocity_; }

 private:
  SgdConfig config_;
  std::vector<Tensor> velocity_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Bias-corrected Adam.
class Adam final : public Optimizer {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(std::span<const ParamRef> params) override;
  double learning_rate() const override { return config_.lr; }
  void set_learning_rate(double lr) override { config_.lr = lr; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct CosineSchedule {
  double base_lr = 0.1;
  std::size_t total_epochs = 1;
  double min_lr = 0.0;
};

/// min + (base - min)(1 + cos(pi epoch / total)) / 2 for epoch in [0, total].
double cosine_lr(std::size_t epoch, const CosineSchedule& schedule);

/// Stops after `patience` consecutive epochs without a strictly lower
/// validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience = 10) : patience_(patience) {}

  /// Records one epoch; returns true when it is a new best.
  bool update(double validation_loss);
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t stale_epochs() const { return stale_; }

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t epochs_ = 0;
  std::size_t stale_ = 0;
};

}  // namespace wconv
