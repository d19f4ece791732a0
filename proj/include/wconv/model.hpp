#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "wconv/nn.hpp"

namespace wconv {

enum class TaskKind { classification, denoising };

std::string to_string(TaskKind t);
TaskKind parse_task_kind(const std::string& s);

/**
 * Ordered stack of layers.
 *
 * A residual model outputs x - body(x): the body estimates the noise and the
 * model returns the cleaned input. Copies are deep.
 */
class Model {
 public:
  explicit Model(TaskKind task = TaskKind::classification, bool residual = false)
      : task_(task), residual_(residual) {}

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  TaskKind task() const { return task_; }
  bool residual() const { return residual_; }

  Layer& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
  }

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Tensor forward(const Tensor& batch, Mode mode);
  /// Gradient with respect to the model input; fills every parameter
  /// gradient slot. Throws std::logic_error when no forward preceded it.
  Tensor backward(const Tensor& upstream);

  std::vector<ParamRef> parameters();
  std::vector<BufferRef> buffers();
  std::size_t parameter_count() const;

 private:
  TaskKind task_;
  bool residual_;
  bool has_forward_ = false;
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct VggOptions {
  std::size_t in_channels = 3;
  std::size_t image_size = 32;
  std::vector<std::size_t> widths{16, 32, 64};
  std::size_t kernel = 3;
};

/// Three (conv -> batchnorm -> relu -> maxpool) blocks and a dense head.
/// Every convolution uses `density` when the variant is weighted.
Model build_mini_vgg(std::size_t n_classes, ConvVariant variant, const std::optional<DensityFunction>& density,
                     Rng& rng, const VggOptions& options = {});

struct DncnnOptions {
  std::size_t channels = 3;
  std::size_t kernel = 3;
  /// Zero the final convolution so the untrained model is the identity.
  bool zero_init_tail = true;
};

/// conv -> relu, (depth - 2) x (conv -> batchnorm -> relu), conv; residual
/// output. Throws std::invalid_argument for depth < 2.
Model build_mini_dncnn(std::size_t depth, std::size_t width, ConvVariant variant,
                       const std::optional<DensityFunction>& density, Rng& rng,
                       const DncnnOptions& options = {});

/// Writes `model.manifest` plus one tensor file per parameter and buffer.
void save_checkpoint(Model& model, const std::filesystem::path& dir);
Model load_checkpoint(const std::filesystem::path& dir);

}  // namespace wconv
